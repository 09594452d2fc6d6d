"""Post-processing of Steklov eigenpairs: nodal sets, symmetry classes, bounds, studies."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import analytic
from .errors import DomainError, MeshError
from .fem import UNIT_WEIGHT, BoundaryWeight, SteklovSolution, assemble_boundary_mass, assemble_stiffness, steklov_solve
from .geometry import (
    Annulus,
    DomainSpec,
    Ellipse,
    OscAnnulus,
    foliation_bound,
    is_simply_connected,
    lower_bound_corr,
    oscillating_inner_boundary,
    profiles_of,
)
from .mesh import Mesh, boundary_length, build_mesh, oscillating_annulus_mesh

ZERO_RTOL = 1e-12
ZERO_SHIFT = 1e-13
SYMMETRY_RTOL = 1e-6
PAIR_RTOL = 1e-3
DISCRETIZATION_RTOL = 1e-2


# ---------------------------------------------------------------------------
# Rayleigh quotient
# ---------------------------------------------------------------------------


def rayleigh_quotient(mesh: Mesh, u, weight: BoundaryWeight = UNIT_WEIGHT, K=None, M=None) -> float:
    """``u^T K u / u^T M u``: Dirichlet energy over weighted boundary L2 norm."""
    K = assemble_stiffness(mesh) if K is None else K
    M = assemble_boundary_mass(mesh, weight) if M is None else M
    u = np.asarray(u, dtype=float)
    den = float(u @ (M @ u))
    if not den > 0.0:
        raise DomainError("test function vanishes on the boundary")
    return float(u @ (K @ u)) / den


def boundary_mean_free(u, M) -> np.ndarray:
    """``u`` minus its weighted boundary mean, so that it is admissible for sigma_1."""
    u = np.asarray(u, dtype=float)
    one = np.ones_like(u)
    return u - float(one @ (M @ u)) / float(one @ (M @ one))


# ---------------------------------------------------------------------------
# Nodal sets
# ---------------------------------------------------------------------------


def _signs(u: np.ndarray) -> np.ndarray:
    """Vertex signs after the deterministic tie-break for (numerically) zero values."""
    u = np.asarray(u, dtype=float)
    scale = float(np.max(np.abs(u))) if len(u) else 0.0
    if scale == 0.0:
        return np.ones(len(u), dtype=bool), np.full(len(u), ZERO_SHIFT)
    v = np.where(np.abs(u) <= ZERO_RTOL * scale, ZERO_SHIFT * scale, u)
    return v > 0.0, v


@dataclass(frozen=True, eq=False)
class NodalCurve:
    points: np.ndarray
    closed: bool
    contacts: int
    contact_components: tuple = ()
    winding_number: Optional[int] = None
    mean_radius: float = float("nan")
    radius_stddev: float = float("nan")

    @property
    def touches_boundary(self) -> bool:
        return self.contacts > 0


def _edge_table(mesh: Mesh):
    T = mesh.triangles
    local = np.array([[0, 1], [1, 2], [2, 0]])
    e = np.sort(T[:, local], axis=2).reshape(-1, 2)
    uniq, inv, counts = np.unique(e, axis=0, return_inverse=True, return_counts=True)
    return uniq, inv.reshape(-1, 3), counts


def extract_nodal_set(mesh: Mesh, u) -> list[NodalCurve]:
    """Zero level set of the P1 interpolant of ``u`` as chained polylines."""
    pos, v = _signs(u)
    if pos.all() or not pos.any():
        return []
    edges, tri_edges, counts = _edge_table(mesh)
    crossing = pos[edges[:, 0]] != pos[edges[:, 1]]
    ids = np.flatnonzero(crossing)
    i, j = edges[ids, 0], edges[ids, 1]
    t = v[i] / (v[i] - v[j])
    pts = mesh.vertices[i] + t[:, None] * (mesh.vertices[j] - mesh.vertices[i])
    point_of = {int(e): k for k, e in enumerate(ids)}

    # every triangle with a sign change links its two crossing edges
    adj: dict[int, list[int]] = {}
    mixed = crossing[tri_edges].sum(axis=1) == 2
    for row in tri_edges[mixed]:
        a, b = (int(e) for e in row if crossing[e])
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    label_of = {}
    for (p, q), lab in zip(np.sort(mesh.boundary_edges, axis=1), mesh.boundary_labels):
        label_of[(int(p), int(q))] = str(lab)

    def walk(start):
        chain, prev, cur = [start], None, start
        while True:
            nxt = [n for n in adj.get(cur, []) if n != prev]
            if not nxt:
                return chain, False
            prev, cur = cur, nxt[0]
            if cur == start:
                return chain, True
            chain.append(cur)

    seen: set[int] = set()
    curves = []
    ends = sorted(e for e in adj if len(adj[e]) == 1)
    for start in ends + sorted(adj):
        if start in seen:
            continue
        chain, closed = walk(start)
        seen.update(chain)
        P = pts[[point_of[e] for e in chain]]
        if closed:
            P = np.vstack([P, P[:1]])
            comps = ()
            ang = np.unwrap(np.arctan2(P[:, 1], P[:, 0]))
            wind = int(round((ang[-1] - ang[0]) / (2 * math.pi)))
        else:
            comps = tuple(label_of[tuple(int(x) for x in edges[e])] for e in (chain[0], chain[-1])
                          if counts[e] == 1)
            wind = None
        r = np.hypot(P[:, 0], P[:, 1])
        curves.append(NodalCurve(P, closed, len(comps), comps, wind, float(r.mean()), float(r.std())))
    return curves


def nodal_summary(curves: Sequence[NodalCurve]) -> str:
    if not curves:
        return "none"
    if len(curves) == 1 and curves[0].closed:
        c = curves[0]
        return f"closed winding={c.winding_number} mean_r={c.mean_radius:.6f}"
    contacts = sum(c.contacts for c in curves)
    n_closed = sum(c.closed for c in curves)
    return f"open touches_boundary={contacts} curves={len(curves)} closed_curves={n_closed}"


def format_nodal_curves(curves: Sequence[NodalCurve]) -> str:
    """Polyline text: a ``curve closed=<0|1> winding=<n> points=<m>`` header per curve, then ``x y`` lines."""
    out = []
    for c in curves:
        wind = 0 if c.winding_number is None else c.winding_number
        out.append(f"curve closed={int(c.closed)} winding={wind} points={len(c.points)}\n")
        out.extend(f"{x:.12e} {y:.12e}\n" for x, y in c.points)
    return "".join(out)


def count_nodal_domains(mesh: Mesh, u) -> int:
    """Connected components of same-sign triangles (sign by vertex majority)."""
    pos, _ = _signs(u)
    tri_pos = pos[mesh.triangles].sum(axis=1) >= 2
    edges, tri_edges, counts = _edge_table(mesh)
    owner = np.full((len(edges), 2), -1)
    flat_t = np.repeat(np.arange(len(mesh.triangles)), 3)
    flat_e = tri_edges.ravel()
    order = np.argsort(flat_e, kind="stable")
    fe, ft = flat_e[order], flat_t[order]
    first = np.r_[True, fe[1:] != fe[:-1]]
    owner[fe[first], 0] = ft[first]
    owner[fe[~first], 1] = ft[~first]
    shared = owner[:, 1] >= 0
    a, b = owner[shared, 0], owner[shared, 1]
    same = tri_pos[a] == tri_pos[b]
    n = len(mesh.triangles)
    g = sp.coo_matrix((np.ones(same.sum()), (a[same], b[same])), shape=(n, n))
    ncomp, _ = connected_components(g, directed=False)
    return int(ncomp)


# ---------------------------------------------------------------------------
# Symmetry classes
# ---------------------------------------------------------------------------

PATTERNS = {"EE": (1, 1), "OE": (-1, 1), "EO": (1, -1), "OO": (-1, -1)}


@dataclass(frozen=True)
class SymmetryClass:
    label: str  # EE, OE, EO, OO or MIXED; first letter is parity in x
    residuals: dict

    @property
    def odd_in_x(self) -> bool:
        return self.label in ("OE", "OO")

    @property
    def odd_in_y(self) -> bool:
        return self.label in ("EO", "OO")


def _maps(mesh: Mesh):
    if "x" not in mesh.symmetry_maps or "y" not in mesh.symmetry_maps:
        raise MeshError("mesh carries no reflection symmetry maps")
    return mesh.symmetry_maps["x"], mesh.symmetry_maps["y"]


def classify_symmetry(mesh: Mesh, u, rtol: float = SYMMETRY_RTOL) -> SymmetryClass:
    """Parity of ``u`` under ``x -> -x`` and ``y -> -y``."""
    px, py = _maps(mesh)
    u = np.asarray(u, dtype=float)
    norm = float(np.linalg.norm(u))
    if norm == 0.0:
        raise DomainError("cannot classify the zero vector")
    res = {}
    for name, (sx, sy) in PATTERNS.items():
        rx = np.linalg.norm(u - sx * u[px])
        ry = np.linalg.norm(u - sy * u[py])
        res[name] = float(math.hypot(rx, ry) / norm)
    hits = [k for k, r in res.items() if r < rtol]
    return SymmetryClass(hits[0] if len(hits) == 1 else "MIXED", res)


def symmetrize_pair(mesh: Mesh, u, v):
    """Rotate a basis of a two-dimensional eigenspace into reflection-adapted vectors.

    The reflections commute with the discrete operator, so they act on an
    invariant eigenspace as 2x2 symmetric involutions; their eigenvectors give
    the rotation angle directly.
    """
    px, py = _maps(mesh)
    Q, _ = np.linalg.qr(np.column_stack([u, v]))
    for p in (px, py):
        B = Q.T @ Q[p]
        B = 0.5 * (B + B.T)
        lam, C = np.linalg.eigh(B)
        if lam[1] - lam[0] > 0.5:
            W = Q @ C
            return W[:, 0], W[:, 1]
    return Q[:, 0], Q[:, 1]


def classify_spectrum(solution: SteklovSolution, count: Optional[int] = None,
                      pair_rtol: float = PAIR_RTOL) -> list[SymmetryClass]:
    """Symmetry class of each eigenvector; near-degenerate pairs are rotated first."""
    vals = solution.eigenvalues
    n = len(vals) if count is None else min(count, len(vals))
    mesh = solution.mesh
    out: list[Optional[SymmetryClass]] = [None] * n
    i = 0
    while i < n:
        paired = (
            i + 1 < n
            and vals[i] > 0
            and abs(vals[i + 1] - vals[i]) <= pair_rtol * abs(vals[i])
        )
        if paired:
            w1, w2 = symmetrize_pair(mesh, solution.vector(i), solution.vector(i + 1))
            out[i] = classify_symmetry(mesh, w1)
            out[i + 1] = classify_symmetry(mesh, w2)
            i += 2
        else:
            out[i] = classify_symmetry(mesh, solution.vector(i))
            i += 1
    return out


def spectral_gap(solution: SteklovSolution) -> float:
    """``(sigma_2 - sigma_1) / sigma_1`` for the first two positive eigenvalues."""
    if len(solution.eigenvalues) < 3:
        raise DomainError("need at least three eigenvalues")
    s1, s2 = solution.eigenvalues[1], solution.eigenvalues[2]
    return float((s2 - s1) / s1)


# ---------------------------------------------------------------------------
# Bound verdicts
# ---------------------------------------------------------------------------

PASS = "PASS"
FAIL = "FAIL"
EQUALITY = "EQUALITY(tol)"
SKIPPED = "SKIPPED"


@dataclass(frozen=True)
class Verdict:
    name: str
    source: str
    lhs: float
    relation: str  # ">=", "<=" or "<"
    rhs: float
    tol: float
    status: str
    applicable: bool = True  # False: reported for information, hypotheses not met

    @property
    def holds(self) -> bool:
        return self.status != FAIL or not self.applicable

    @property
    def strict(self) -> bool:
        return self.status == PASS


def judge(name, source, lhs, relation, rhs, tol=DISCRETIZATION_RTOL) -> Verdict:
    """Verdict for ``lhs relation rhs`` with relative discretization tolerance ``tol``.

    ``>=`` and ``<=`` pass when strict beyond ``tol``, report EQUALITY(tol) when
    within it; ``<`` asserts strictness and so fails inside the tolerance band.
    """
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        return Verdict(name, source, lhs, relation, rhs, tol, SKIPPED)
    gap = (lhs - rhs) / abs(rhs)
    if relation == ">=":
        status = PASS if gap > tol else (EQUALITY if gap >= -tol else FAIL)
    elif relation == "<=":
        status = PASS if gap < -tol else (EQUALITY if gap <= tol else FAIL)
    elif relation == "<":
        status = PASS if gap < -tol else FAIL
    else:
        raise ValueError(relation)
    return Verdict(name, source, float(lhs), relation, float(rhs), tol, status)


@dataclass(frozen=True)
class BoundReport:
    domain: str
    sigma1: float
    sigma2: float
    lower_bound: float
    verdicts: tuple
    classes: tuple = ()

    @property
    def all_hold(self) -> bool:
        return all(v.holds for v in self.verdicts)

    def rows(self):
        for v in self.verdicts:
            yield (v.name, v.source, v.lhs, v.relation, v.rhs, v.tol, v.status, v.applicable)


def check_bounds(spec: DomainSpec, solution: SteklovSolution, tol: float = DISCRETIZATION_RTOL,
                 n_pairs: int = 8) -> BoundReport:
    """Evaluate every applicable eigenvalue inequality on a computed spectrum."""
    vals = solution.eigenvalues
    s1 = float(vals[1])
    s2 = float(vals[2]) if len(vals) > 2 else float("nan")
    verdicts = []
    lower = float("nan")
    classes: list = []
    mesh = solution.mesh
    try:
        f, g = profiles_of(spec)
    except DomainError:
        f = g = None
        verdicts.append(Verdict("sigma1 >= min(1/|f|,1/|g|)", "eq_corr", s1, ">=", float("nan"), tol, SKIPPED))
    if f is not None:
        first = len(verdicts)
        bx, by = foliation_bound(f), foliation_bound(g)
        lower = min(bx, by)
        verdicts.append(judge(f"sigma1 >= {lower:.6g}", "eq_corr", s1, ">=", lower, tol))
        if mesh.symmetry_maps.keys() >= {"x", "y"}:
            classes = classify_spectrum(solution, min(n_pairs, len(vals)))
            for idx in range(1, len(classes)):
                c = classes[idx]
                if c.label == "EO":
                    verdicts.append(judge(f"sigma{idx}[EO] >= {bx:.6g}", "eq_x", float(vals[idx]), ">=", bx, tol))
                elif c.label == "OE":
                    verdicts.append(judge(f"sigma{idx}[OE] >= {by:.6g}", "eq_y", float(vals[idx]), ">=", by, tol))
        if not (f.vanishes_at_ends and g.vanishes_at_ends):
            # profiles without tips leave part of the boundary outside the foliation
            verdicts[first:] = [replace(v, applicable=False) for v in verdicts[first:]]
    if is_simply_connected(spec):
        per = boundary_length(mesh)
        verdicts.append(judge(f"sigma1 <= 2pi/|dOmega| = {2 * math.pi / per:.6g}", "weinstock", s1, "<=",
                              2 * math.pi / per, tol))
    else:
        verdicts.append(Verdict("sigma1 <= 2pi/|dOmega|", "weinstock", s1, "<=", float("nan"), tol, SKIPPED))
    if isinstance(spec, Ellipse) and spec.a > spec.b:
        verdicts.append(judge(f"sigma1 < 1/b = {1 / spec.b:.6g}", "inscribed_disk", s1, "<", 1.0 / spec.b, tol))
    for axis, name in ((0, "x"), (1, "y")):
        u = boundary_mean_free(mesh.vertices[:, axis], solution.M)
        rq = rayleigh_quotient(mesh, u, solution.weight, solution.K, solution.M)
        # the variational principle is exact for the discrete problem, so no slack
        status = PASS if s1 <= rq * (1 + 1e-9) else FAIL
        verdicts.append(Verdict(f"sigma1 <= R[{name}]", "rayleigh", s1, "<=", rq, 0.0, status))
    return BoundReport(describe(spec), s1, s2, lower, tuple(verdicts), tuple(classes))


def describe(spec: DomainSpec) -> str:
    fields = getattr(spec, "__dataclass_fields__", {})
    parts = []
    for k in fields:
        v = getattr(spec, k)
        if isinstance(v, (int, float, str)):
            parts.append(f"{k}={v}")
    return f"{type(spec).__name__}({', '.join(parts)})"


# ---------------------------------------------------------------------------
# Studies
# ---------------------------------------------------------------------------


def thread_count() -> int:
    n = int(os.environ.get("STEKLOV_THREADS", "0") or 0)
    return n if n > 0 else (os.cpu_count() or 1)


def radial_first_radius(eps_max: float, margin: float = 1.0125) -> float:
    """Smallest inner radius admitting amplitude ``eps_max`` that lies in the radial-first regime."""
    r0 = 4.0 * eps_max * margin
    if not (0.0 < r0 < 1.0) or not analytic.radial_first(r0):
        raise DomainError(f"no radial-first radius admits amplitude {eps_max}")
    return r0


@dataclass(frozen=True)
class StudyRow:
    eps: float
    n_waves: int
    amplitude: float
    length_ratio: float
    sigma1: float
    target: float
    rel_error: float
    closed: bool
    winding: Optional[int]
    contacts: int
    mean_radius: float
    nodal_domains: int
    n_vertices: int
    nodal: str = field(default="")

    columns = ("eps", "n_waves", "amplitude", "length_ratio", "sigma1", "target", "rel_error",
               "closed", "winding", "contacts", "mean_radius", "nodal_domains", "n_vertices", "nodal")

    def row(self):
        return tuple(getattr(self, c) if c != "winding" else ("" if self.winding is None else self.winding)
                     for c in self.columns)


def _study_entry(r0: float, eps: float, n_radial: int, n_angular: int, per_wave: int, k: int) -> StudyRow:
    if eps == 0.0:
        spec = Annulus(r0)
        mesh = build_mesh(spec, n_radial=n_radial, n_angular=n_angular)
        target = analytic.annulus_spectrum(r0, 1.0, 4).smallest_positive().value
        wave = None
    else:
        wave = oscillating_inner_boundary(r0, 1.0 / r0, eps)
        spec = OscAnnulus(r0, wave.amplitude, wave.n_waves)
        mesh = oscillating_annulus_mesh(r0, wave.amplitude, wave.n_waves, n_radial=n_radial,
                                        n_angular=8 * math.ceil(per_wave * wave.n_waves / 8))
        target = analytic.annulus_spectrum(r0, 1.0 / r0, 4).smallest_positive().value
    sol = steklov_solve(mesh, UNIT_WEIGHT, k)
    u1 = sol.vector(1)
    curves = extract_nodal_set(mesh, u1)
    closed = len(curves) == 1 and curves[0].closed
    c0 = curves[0] if curves else None
    s1 = float(sol.eigenvalues[1])
    return StudyRow(
        eps=eps,
        n_waves=0 if wave is None else wave.n_waves,
        amplitude=0.0 if wave is None else wave.amplitude,
        length_ratio=1.0 if wave is None else wave.length_ratio,
        sigma1=s1,
        target=target,
        rel_error=abs(s1 - target) / target,
        closed=closed,
        winding=c0.winding_number if closed else None,
        contacts=sum(c.contacts for c in curves),
        mean_radius=c0.mean_radius if closed else float("nan"),
        nodal_domains=count_nodal_domains(mesh, u1),
        n_vertices=mesh.n_vertices,
        nodal=nodal_summary(curves),
    )


def oscillation_convergence_study(r0: float, eps_list: Sequence[float], n_radial: int = 96,
                                  n_angular: int = 256, per_wave: int = 24, k: int = 6) -> list[StudyRow]:
    """sigma_1 and the first nodal line on oscillating annuli approaching the weighted limit.

    Every entry with ``eps > 0`` uses inner arclength ``2 pi`` (weight ``1/r0``)
    and ``per_wave`` angular vertices per wave; ``eps = 0`` is the plain annulus
    (``n_radial`` x ``n_angular``) compared with its unweighted closed form.
    """
    if per_wave < 16:
        raise DomainError("per_wave must be at least 16")
    if not (0.0 < r0 < 1.0):
        raise DomainError("r0 must lie in (0, 1)")
    with ThreadPoolExecutor(max_workers=min(thread_count(), max(1, len(eps_list)))) as ex:
        return list(ex.map(lambda e: _study_entry(r0, float(e), n_radial, n_angular, per_wave, k), eps_list))


@dataclass(frozen=True)
class EllipseRow:
    a: float
    b: float
    sigma1: float
    sigma2: float
    gap: float
    error_estimate: float
    sigma1_class: str
    lower_bound: float
    weinstock: float

    columns = ("a", "b", "sigma1", "sigma2", "gap", "error_estimate", "sigma1_class", "lower_bound", "weinstock")

    def row(self):
        return tuple(getattr(self, c) for c in self.columns)


def _ellipse_entry(a: float, b: float, n_radial: int, n_angular: int, refine: bool) -> EllipseRow:
    spec = Ellipse(a, b)
    sol = steklov_solve(build_mesh(spec, n_radial=n_radial, n_angular=n_angular), UNIT_WEIGHT, 4)
    s1, s2 = sol.eigenvalues[1], sol.eigenvalues[2]
    err = float("nan")
    if refine:
        fine = steklov_solve(build_mesh(spec, n_radial=2 * n_radial, n_angular=2 * n_angular), UNIT_WEIGHT, 4)
        err = float((abs(fine.eigenvalues[1] - s1) + abs(fine.eigenvalues[2] - s2)) / s1)
    cls = classify_spectrum(sol, 3)[1].label
    per = boundary_length(sol.mesh)
    return EllipseRow(a, b, float(s1), float(s2), spectral_gap(sol), err, cls, lower_bound_corr(spec),
                      2 * math.pi / per)


def ellipse_family_sweep(aspects: Sequence[float], b: float = 1.0, n_radial: int = 64, n_angular: int = 256,
                         refine: bool = True) -> list[EllipseRow]:
    """sigma_1, sigma_2 and their gap for ellipses with semi-axes ``(aspect * b, b)``."""
    with ThreadPoolExecutor(max_workers=min(thread_count(), max(1, len(aspects)))) as ex:
        return list(ex.map(lambda t: _ellipse_entry(float(t) * b, b, n_radial, n_angular, refine), aspects))
