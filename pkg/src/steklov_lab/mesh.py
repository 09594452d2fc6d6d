"""Structured, reflection-symmetric triangulations of the planar domains.

Every builder produces rings (polar) or columns (tensor) of vertices and splits
cells along diagonals chosen per quadrant, so that the reflections ``x -> -x``
and ``y -> -y`` map the triangle set onto itself. Vertex coordinates are
symmetrized afterwards, which makes the reflection maps exact in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, MeshError
from .geometry import Annulus, Disk, DomainSpec, Ellipse, OscAnnulus, ProfilePair
from .io import atomic_write_text

OUTER = "outer"
INNER = "inner"
MIN_AREA = 1e-14


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (n, 2)
    triangles: np.ndarray  # (m, 3), counterclockwise
    boundary_edges: np.ndarray  # (k, 2), consecutive along each component
    boundary_labels: np.ndarray  # (k,), OUTER or INNER
    symmetry_maps: dict = field(default_factory=dict)  # "x": x -> -x, "y": y -> -y

    def __post_init__(self):
        for arr in (self.vertices, self.triangles, self.boundary_edges, self.boundary_labels):
            arr.flags.writeable = False

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def components(self) -> list[str]:
        return [c for c in (OUTER, INNER) if np.any(self.boundary_labels == c)]

    @property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    @property
    def interior_vertices(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary_vertices] = False
        return np.flatnonzero(mask)

    @property
    def is_boundary(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_edges.ravel()] = True
        return mask

    def edges_of(self, component: Optional[str] = None) -> np.ndarray:
        if component is None:
            return self.boundary_edges
        if component not in (OUTER, INNER):
            raise MeshError(f"unknown boundary component {component!r}")
        return self.boundary_edges[self.boundary_labels == component]

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def scaled(self, t: float) -> "Mesh":
        return Mesh(self.vertices * t, self.triangles.copy(), self.boundary_edges.copy(),
                    self.boundary_labels.copy(), dict(self.symmetry_maps))

    def translated(self, shift) -> "Mesh":
        # a translated mesh is no longer symmetric about the axes
        return Mesh(self.vertices + np.asarray(shift, dtype=float), self.triangles.copy(),
                    self.boundary_edges.copy(), self.boundary_labels.copy(), {})


def boundary_length(mesh: Mesh, component: Optional[str] = None) -> float:
    e = mesh.edges_of(component)
    v = mesh.vertices
    return float(np.sum(np.linalg.norm(v[e[:, 1]] - v[e[:, 0]], axis=1)))


def boundary_cycles(mesh: Mesh) -> dict[str, list[np.ndarray]]:
    """Closed vertex cycles traced from the boundary edges of each component."""
    out = {}
    for comp in mesh.components:
        e = mesh.edges_of(comp)
        nxt = {}
        for a, b in e:
            if a in nxt:
                raise MeshError(f"boundary vertex {a} has two outgoing edges on {comp}")
            nxt[int(a)] = int(b)
        cycles, seen = [], set()
        for start in nxt:
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            cur = nxt[start]
            while cur != start:
                if cur not in nxt or cur in seen:
                    raise MeshError(f"boundary of {comp} is not a closed cycle")
                cyc.append(cur)
                seen.add(cur)
                cur = nxt[cur]
            cycles.append(np.array(cyc))
        out[comp] = cycles
    return out


# ---------------------------------------------------------------------------
# structured pieces
# ---------------------------------------------------------------------------


def _ring_band(inner: np.ndarray, outer: np.ndarray) -> np.ndarray:
    """Triangulate between two rings with the same count, diagonals flipped per quadrant."""
    n = len(inner)
    i = np.arange(n)
    j = (i + 1) % n
    rising = ((4 * i) // n) % 2 == 0
    t = np.empty((2 * n, 3), dtype=np.int64)
    # rising diagonal inner[i] - outer[j]; falling diagonal inner[j] - outer[i]
    t[:n] = np.where(rising[:, None],
                     np.stack([inner[i], inner[j], outer[j]], 1),
                     np.stack([inner[i], inner[j], outer[i]], 1))
    t[n:] = np.where(rising[:, None],
                     np.stack([inner[i], outer[j], outer[i]], 1),
                     np.stack([inner[j], outer[j], outer[i]], 1))
    return t


def _halving_band(fine: np.ndarray, coarse: np.ndarray) -> np.ndarray:
    """Triangulate between a ring of 2m vertices and one of m vertices."""
    m = len(coarse)
    k = np.arange(m)
    kp = (k + 1) % m
    f0, f1, f2 = fine[2 * k], fine[2 * k + 1], fine[(2 * k + 2) % (2 * m)]
    return np.vstack([
        np.stack([f0, f1, coarse[k]], 1),
        np.stack([f1, f2, coarse[kp]], 1),
        np.stack([f1, coarse[kp], coarse[k]], 1),
    ])


def _orient(vertices: np.ndarray, tris: np.ndarray) -> np.ndarray:
    p = vertices[tris]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    tris = tris.copy()
    flip = cross < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def _polar(radii, counts, perturb=None, center=False):
    """Rings of vertices at the given base radii; ``perturb(R, theta)`` shifts radii.

    With ``center`` the first radius is 0 and becomes a single vertex fanned to
    the second ring. Ring counts may halve from one ring to the next.
    """
    pts, rings, off = [], [], 0
    for R, n in zip(radii, counts):
        if center and off == 0:
            pts.append(np.zeros((1, 2)))
            rings.append(np.array([0]))
            off = 1
            continue
        th = 2.0 * np.pi * np.arange(n) / n
        r = R + (perturb(R, th) if perturb is not None else 0.0)
        pts.append(np.stack([r * np.cos(th), r * np.sin(th)], 1))
        rings.append(np.arange(off, off + n))
        off += n
    V = np.vstack(pts)
    tris = []
    for a, b in zip(rings[:-1], rings[1:]):
        if len(a) == 1:
            n = len(b)
            i = np.arange(n)
            tris.append(np.stack([np.zeros(n, dtype=np.int64), b[i], b[(i + 1) % n]], 1))
        elif len(a) == len(b):
            tris.append(_ring_band(a, b))
        elif len(a) == 2 * len(b):
            tris.append(_halving_band(a, b))
        else:
            raise MeshError("ring counts must be equal or halve outward")
    return V, np.vstack(tris), rings


def _cycle_edges(cycle: np.ndarray) -> np.ndarray:
    return np.stack([cycle, np.roll(cycle, -1)], 1)


def _check_angular(n_angular: int) -> None:
    if n_angular < 4 or n_angular % 4:
        raise MeshError(f"n_angular must be a positive multiple of 4, got {n_angular}")


def _check_count(name: str, n: int) -> None:
    if n < 4:
        raise MeshError(f"{name} must be at least 4, got {n}")


def disk_mesh(R: float, n_radial: int, n_angular: int) -> Mesh:
    _check_count("n_radial", n_radial)
    _check_angular(n_angular)
    radii = R * np.arange(n_radial + 1) / n_radial
    V, T, rings = _polar(radii, [1] + [n_angular] * n_radial, center=True)
    return _finish(V, T, {OUTER: rings[-1]})


def ellipse_mesh(a: float, b: float, n_radial: int, n_angular: int) -> Mesh:
    m = disk_mesh(1.0, n_radial, n_angular)
    V = m.vertices * np.array([a, b])
    return _finish(V, m.triangles, {OUTER: _outer_cycle(m)})


def _outer_cycle(m: Mesh) -> np.ndarray:
    return m.edges_of(OUTER)[:, 0]


def annulus_mesh(r0: float, n_radial: int, n_angular: int) -> Mesh:
    """Polar tensor grid with log-uniform radii (uniform on the conformal cylinder)."""
    _check_count("n_radial", n_radial)
    _check_angular(n_angular)
    radii = r0 ** (1.0 - np.arange(n_radial + 1) / n_radial)
    radii[-1] = 1.0
    V, T, rings = _polar(radii, [n_angular] * (n_radial + 1))
    return _finish(V, T, {OUTER: rings[-1], INNER: rings[0][::-1]})


def oscillating_annulus_mesh(r0: float, amplitude: float, n_waves: int, n_radial: int = 64,
                             n_angular: Optional[int] = None, layer: Optional[float] = None) -> Mesh:
    """Annulus with inner boundary ``rho = r0 + amplitude cos(n_waves theta)``.

    The perturbation decays linearly to zero across a layer of thickness
    ``layer`` (default ``4 amplitude``), so radii stay monotone along every ray
    and each vertex moves by at most ``amplitude`` from the unperturbed grid.
    Inside the layer rings are uniform; outside they grow geometrically and the
    angular count halves where the cells become much longer radially than wide.
    ``amplitude = 0`` gives the unperturbed reference grid with the same topology.
    """
    _check_count("n_radial", n_radial)
    min_angular = 16 * n_waves
    if n_angular is None:
        n_angular = max(64, 8 * math.ceil(min_angular / 8))
    _check_angular(n_angular)
    if n_angular < min_angular:
        raise MeshError(f"n_angular={n_angular} under-resolves {n_waves} waves (need >= {min_angular})")
    if layer is None:
        layer = 4.0 * amplitude if amplitude > 0 else 0.0
    layer = min(layer, 0.5 * (1.0 - r0))
    n_layer = max(8, (3 * n_radial) // 8) if layer > 0 else 0
    n_outer = n_radial - n_layer if layer > 0 else n_radial
    n_outer = max(4, n_outer)
    top = r0 + layer
    radii = list(r0 + layer * np.arange(n_layer + 1) / max(n_layer, 1)) if layer > 0 else [r0]
    q = (1.0 / top) ** (1.0 / n_outer)
    counts = [n_angular] * len(radii)
    n = n_angular
    for j in range(1, n_outer + 1):
        R = 1.0 if j == n_outer else top * q**j
        dr = R - radii[-1]
        if 2.0 * (2.0 * np.pi * R / n) < dr and n % 8 == 0 and n // 2 >= 64:
            n //= 2
        radii.append(R)
        counts.append(n)

    def perturb(R, th):
        if amplitude == 0.0 or layer == 0.0:
            return 0.0
        phi = max(0.0, 1.0 - (R - r0) / layer)
        return amplitude * np.cos(n_waves * th) * phi

    V, T, rings = _polar(radii, counts, perturb)
    return _finish(V, T, {OUTER: rings[-1], INNER: rings[0][::-1]})


def _mirror_nodes(nodes: np.ndarray) -> np.ndarray:
    """Copy of ``nodes`` made exactly antisymmetric about its midpoint."""
    n = len(nodes) - 1
    x = np.empty(n + 1)
    for i in range(n // 2 + 1):
        x[i] = nodes[i]
        x[n - i] = -nodes[i]
    if n % 2 == 0:
        x[n // 2] = 0.0
    return x


def profile_mesh(spec: ProfilePair, n_x: int, n_y: int) -> Mesh:
    """Tensor grid in x with the vertical coordinate scaled by ``f(x)``.

    x-nodes are Chebyshev-clustered toward the tips; a column where ``f``
    vanishes collapses to a single vertex.
    """
    for name, n in (("n_x", n_x), ("n_y", n_y)):
        _check_count(name, n)
        if n % 2:
            raise MeshError(f"{name} must be even for reflection symmetry")
    a = spec.a
    xs = _mirror_nodes(-a * np.cos(np.pi * np.arange(n_x + 1) / n_x))
    ss = _mirror_nodes(np.linspace(-1.0, 1.0, n_y + 1))
    fx = np.asarray(spec.f.f(xs), dtype=float)
    if np.any(~np.isfinite(fx)) or np.any(fx[1:-1] <= 0.0):
        raise MeshError("profile vanishes inside the interval")
    tip = fx[0] <= 1e-14 * a
    if tip != (fx[-1] <= 1e-14 * a):
        raise MeshError("profile is not even")
    pts, cols, off = [], [], 0
    for i, (x, h) in enumerate(zip(xs, fx)):
        if tip and i in (0, n_x):
            pts.append(np.array([[x, 0.0]]))
            cols.append(np.full(n_y + 1, off))
            off += 1
        else:
            pts.append(np.stack([np.full(n_y + 1, x), h * ss], 1))
            cols.append(np.arange(off, off + n_y + 1))
            off += n_y + 1
    V = np.vstack(pts)
    tris = []
    for i in range(n_x):
        c0, c1 = cols[i], cols[i + 1]
        for j in range(n_y):
            a0, a1, b0, b1 = c0[j], c0[j + 1], c1[j], c1[j + 1]
            rising = (i < n_x // 2) == (j < n_y // 2)
            cand = [(a0, b0, b1), (a0, b1, a1)] if rising else [(a0, b0, a1), (b0, b1, a1)]
            for t in cand:
                if len(set(t)) == 3:
                    tris.append(t)
    T = np.array(tris, dtype=np.int64)
    # counterclockwise boundary: bottom left->right, right column up, top right->left, left down
    bottom = [cols[i][0] for i in range(n_x + 1)]
    right = list(cols[n_x][1:])
    top = [cols[i][n_y] for i in range(n_x - 1, -1, -1)]
    left = list(cols[0][n_y - 1:0:-1])
    cyc = []
    for v in bottom + right + top + left:
        if not cyc or cyc[-1] != v:
            cyc.append(v)
    if cyc[0] == cyc[-1]:
        cyc.pop()
    return _finish(V, T, {OUTER: np.array(cyc)})


def build_mesh(spec: DomainSpec, n_radial: int = 64, n_angular: Optional[int] = 256,
               n_x: int = 64, n_y: int = 32) -> Mesh:
    """Structured mesh for any supported domain."""
    if isinstance(spec, Disk):
        return disk_mesh(spec.R, n_radial, n_angular)
    if isinstance(spec, Ellipse):
        return ellipse_mesh(spec.a, spec.b, n_radial, n_angular)
    if isinstance(spec, Annulus):
        return annulus_mesh(spec.r0, n_radial, n_angular)
    if isinstance(spec, OscAnnulus):
        if n_angular is not None and n_angular < 16 * spec.n_waves:
            n_angular = None
        return oscillating_annulus_mesh(spec.r0, spec.eps, spec.n_waves, n_radial, n_angular,
                                        layer=4.0 * spec.eps)
    if isinstance(spec, ProfilePair):
        return profile_mesh(spec, n_x, n_y)
    raise DomainError(f"unsupported domain {spec!r}")


# ---------------------------------------------------------------------------
# finishing: orientation, boundary, symmetry
# ---------------------------------------------------------------------------


def _finish(V: np.ndarray, T: np.ndarray, cycles: dict[str, np.ndarray]) -> Mesh:
    V = np.array(V, dtype=float)
    T = _orient(V, np.asarray(T, dtype=np.int64))
    maps = _symmetry_maps(V, T)
    for key in ("x", "y"):
        if key in maps:
            V = _symmetrize(V, maps[key], key)
    edges, labels = [], []
    for comp, cyc in cycles.items():
        e = _cycle_edges(np.asarray(cyc, dtype=np.int64))
        edges.append(e)
        labels.extend([comp] * len(e))
    mesh = Mesh(V, T, np.vstack(edges), np.array(labels), maps)
    validate_mesh(mesh)
    return mesh


def _reflect(V: np.ndarray, key: str) -> np.ndarray:
    W = V.copy()
    W[:, 0 if key == "x" else 1] *= -1.0
    return W


def _symmetrize(V: np.ndarray, perm: np.ndarray, key: str) -> np.ndarray:
    # exact in floating point: the pair (i, perm[i]) gets negated copies of one average
    return 0.5 * (V + _reflect(V, key)[perm])


def _triangle_keys(T: np.ndarray, n: int) -> np.ndarray:
    S = np.sort(T, axis=1).astype(np.int64)
    return np.sort((S[:, 0] * n + S[:, 1]) * n + S[:, 2])


def _symmetry_maps(V: np.ndarray, T: np.ndarray) -> dict:
    scale = float(np.max(np.abs(V)))
    tree = cKDTree(V)
    n = len(V)
    keys = _triangle_keys(T, n)
    maps = {}
    for key in ("x", "y"):
        dist, perm = tree.query(_reflect(V, key))
        if np.max(dist) > 1e-9 * scale:
            continue
        if not np.array_equal(perm[perm], np.arange(n)):
            continue
        if not np.array_equal(_triangle_keys(perm[T], n), keys):
            continue
        maps[key] = perm
    return maps


def validate_mesh(mesh: Mesh) -> None:
    """Raise :class:`MeshError` if a mesh invariant is violated."""
    area = mesh.signed_areas()
    bad = np.flatnonzero(area < MIN_AREA)
    if len(bad):
        raise MeshError(f"triangle {int(bad[0])} has non-positive area {area[bad[0]]:.3e}")
    cyc = boundary_cycles(mesh)
    for comp, cs in cyc.items():
        if len(cs) != 1:
            raise MeshError(f"component {comp} has {len(cs)} cycles")
    # every boundary edge must belong to exactly one triangle
    t = mesh.triangles
    all_edges = np.sort(np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    uniq, cnt = np.unique(all_edges, axis=0, return_counts=True)
    free = {tuple(e) for e in uniq[cnt == 1].tolist()}
    declared = {tuple(e) for e in np.sort(mesh.boundary_edges, axis=1).tolist()}
    if free != declared:
        raise MeshError("declared boundary edges differ from the topological boundary")


# ---------------------------------------------------------------------------
# text export
# ---------------------------------------------------------------------------


def format_mesh(mesh: Mesh) -> str:
    lines = [f"vertices {mesh.n_vertices} triangles {len(mesh.triangles)} boundary_edges {len(mesh.boundary_edges)}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    lines += [f"{i} {j} {lab}" for (i, j), lab in zip(mesh.boundary_edges, mesh.boundary_labels)]
    return "\n".join(lines) + "\n"


def parse_mesh(text: str) -> Mesh:
    rows = text.strip().splitlines()
    head = rows[0].split()
    if head[0::2] != ["vertices", "triangles", "boundary_edges"]:
        raise MeshError("bad mesh header")
    nv, nt, nb = (int(x) for x in head[1::2])
    body = rows[1:]
    V = np.array([[float(x) for x in r.split()] for r in body[:nv]])
    T = np.array([[int(x) for x in r.split()] for r in body[nv:nv + nt]], dtype=np.int64)
    E, L = [], []
    for r in body[nv + nt:nv + nt + nb]:
        i, j, lab = r.split()
        E.append((int(i), int(j)))
        L.append(lab)
    mesh = Mesh(V, T, np.array(E, dtype=np.int64), np.array(L), _symmetry_maps(V, T))
    validate_mesh(mesh)
    return mesh


def write_mesh(mesh: Mesh, path) -> None:
    atomic_write_text(Path(path), format_mesh(mesh))
