"""P1 finite elements for the Steklov problem.

The weak form ``int grad u . grad phi = sigma int_{bdry} w u phi`` gives the pencil
``K u = sigma M u`` where ``M`` only lives on boundary vertices. Two routes solve it:

* ``dense``: eliminate interior vertices (Schur complement of ``K``, the discrete
  Dirichlet-to-Neumann matrix), then solve the small dense symmetric-definite
  problem ``S u_b = sigma M_bb u_b`` by Cholesky reduction.
* ``sparse``: shift-invert Lanczos on the full pencil, for meshes whose boundary
  is too large for a dense Schur complement (the oscillating annuli).

Both routes finish with a Rayleigh-Ritz step on exactly harmonic extensions, so
returned eigenvectors are discretely harmonic and M-orthonormal.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, MeshError, SolverError
from .mesh import INNER, OUTER, Mesh

log = logging.getLogger(__name__)

DENSE_MAX_BOUNDARY = 3000
SCHUR_BLOCK = 256


@dataclass(frozen=True)
class BoundaryWeight:
    """Constant density on each boundary component."""

    outer: float = 1.0
    inner: float = 1.0

    def __post_init__(self):
        for name in ("outer", "inner"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 1.0):
                raise DomainError(f"boundary weight on {name} must be >= 1, got {v!r}")

    def of(self, component: str) -> float:
        return {OUTER: self.outer, INNER: self.inner}[component]


UNIT_WEIGHT = BoundaryWeight()


def element_stiffness(p: np.ndarray) -> np.ndarray:
    """3x3 P1 stiffness of one triangle with vertex coordinates ``p`` (3, 2)."""
    return _element_matrices(np.asarray(p, dtype=float)[None])[0][0]


def _element_matrices(P: np.ndarray):
    # edge opposite vertex k: e_k = p_{k+2} - p_{k+1}; K_ij = e_i . e_j / (4 area)
    e = np.stack([P[:, 2] - P[:, 1], P[:, 0] - P[:, 2], P[:, 1] - P[:, 0]], axis=1)
    area = 0.5 * (e[:, 2, 0] * (-e[:, 1, 1]) - e[:, 2, 1] * (-e[:, 1, 0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        G = np.einsum("tik,tjk->tij", e, e) / (4.0 * np.abs(area)[:, None, None])
    return G, area


def assemble_stiffness(mesh: Mesh) -> sp.csr_matrix:
    """Global P1 stiffness ``K_ij = int grad phi_i . grad phi_j``."""
    T = mesh.triangles
    G, area = _element_matrices(mesh.vertices[T])
    bad = np.flatnonzero(area < 1e-14)
    if len(bad):
        raise MeshError(f"degenerate or inverted triangle {int(bad[0])} (area {area[bad[0]]:.3e})")
    n = mesh.n_vertices
    rows = np.repeat(T, 3, axis=1).ravel()
    cols = np.tile(T, (1, 3)).ravel()
    K = sp.csr_matrix((G.ravel(), (rows, cols)), shape=(n, n))
    K.sum_duplicates()
    return K


def assemble_boundary_mass(mesh: Mesh, weight: BoundaryWeight = UNIT_WEIGHT) -> sp.csr_matrix:
    """Consistent P1 edge mass ``int_{bdry} w phi_i phi_j``."""
    E = mesh.boundary_edges
    V = mesh.vertices
    w = np.array([weight.of(lab) for lab in mesh.boundary_labels])
    h = w * np.linalg.norm(V[E[:, 1]] - V[E[:, 0]], axis=1)
    a, b = E[:, 0], E[:, 1]
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    vals = np.concatenate([h / 3.0, h / 3.0, h / 6.0, h / 6.0])
    n = mesh.n_vertices
    M = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    M.sum_duplicates()
    return M


class InteriorSolver:
    """Factorization of the interior block ``K_ii``.

    ``K_ii`` is symmetric positive definite on a connected mesh with nonempty
    boundary; SuperLU is run with a symmetric fill-reducing ordering and no
    off-diagonal pivoting, which is what a sparse Cholesky would do.
    """

    def __init__(self, K: sp.csr_matrix, mesh: Mesh):
        self.b = mesh.boundary_vertices
        self.i = mesh.interior_vertices
        K = sp.csr_matrix(K)
        self.K_ii = K[self.i][:, self.i].tocsc()
        self.K_ib = K[self.i][:, self.b].tocsc()
        self.K_bb = K[self.b][:, self.b]
        self._lu = None
        if len(self.i):
            try:
                self._lu = spla.splu(self.K_ii, permc_spec="MMD_AT_PLUS_A",
                                     diag_pivot_thresh=0.0, options={"SymmetricMode": True})
            except RuntimeError as exc:
                raise SolverError(f"interior factorization failed (disconnected mesh?): {exc}") from exc
            d = self._lu.U.diagonal()
            if np.any(~np.isfinite(d)) or np.any(d <= 0):
                raise SolverError("interior block is not positive definite")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._lu is None:
            return np.zeros((0,) + rhs.shape[1:])
        return self._lu.solve(np.asarray(rhs, dtype=float))

    def extend(self, u_b: np.ndarray) -> np.ndarray:
        """Interior values of the discrete harmonic extension of ``u_b``."""
        return self.solve(-(self.K_ib @ u_b))


def schur_reduce(K: sp.csr_matrix, mesh: Mesh, solver: Optional[InteriorSolver] = None) -> np.ndarray:
    """Dense ``S = K_bb - K_bi K_ii^{-1} K_ib`` on ``mesh.boundary_vertices``."""
    solver = solver or InteriorSolver(K, mesh)
    S = solver.K_bb.toarray()
    if len(solver.i):
        nb = len(solver.b)
        K_bi = solver.K_ib.T.tocsr()
        for start in range(0, nb, SCHUR_BLOCK):
            cols = slice(start, min(start + SCHUR_BLOCK, nb))
            X = solver.solve(solver.K_ib[:, cols].toarray())
            S[:, cols] -= K_bi @ X
    return 0.5 * (S + S.T)


def solve_generalized(S: np.ndarray, M: np.ndarray, k: int):
    """k smallest eigenpairs of ``S u = sigma M u`` with ``M`` positive definite.

    ``M = L L^T`` reduces the pencil to the symmetric matrix ``L^-1 S L^-T``;
    eigenvectors come back M-orthonormal.
    """
    S = np.asarray(S, dtype=float)
    M = np.asarray(M, dtype=float)
    n = S.shape[0]
    if S.shape != (n, n) or M.shape != (n, n):
        raise DomainError("S and M must be square and of equal size")
    if not 1 <= k <= n:
        raise DomainError(f"k must lie in [1, {n}], got {k}")
    try:
        L = la.cholesky(M, lower=True)
    except la.LinAlgError as exc:
        raise SolverError("boundary mass matrix is not positive definite") from exc
    A = la.solve_triangular(L, S, lower=True)
    A = la.solve_triangular(L, A.T, lower=True)
    A = 0.5 * (A + A.T)
    try:
        vals, Y = la.eigh(A, subset_by_index=[0, k - 1])
    except la.LinAlgError as exc:
        raise SolverError(f"dense eigensolver did not converge: {exc}") from exc
    U = la.solve_triangular(L.T, Y, lower=False)
    return vals, U


def recover_interior(K: sp.csr_matrix, mesh: Mesh, u_b: np.ndarray,
                     solver: Optional[InteriorSolver] = None) -> np.ndarray:
    """Full nodal vector(s): ``u_b`` on the boundary, harmonic extension inside."""
    solver = solver or InteriorSolver(K, mesh)
    u_b = np.asarray(u_b, dtype=float)
    out = np.empty((mesh.n_vertices,) + u_b.shape[1:])
    out[solver.b] = u_b
    out[solver.i] = solver.extend(u_b)
    return out


@dataclass(frozen=True, eq=False)
class SteklovSolution:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # (n_vertices, k), columns M-orthonormal
    mesh: Mesh
    weight: BoundaryWeight
    K: sp.csr_matrix = field(repr=False)
    M: sp.csr_matrix = field(repr=False)
    method: str = "dense"

    def __len__(self):
        return len(self.eigenvalues)

    def vector(self, i: int) -> np.ndarray:
        return self.eigenvectors[:, i]


def _ritz(K, M, U):
    """Rayleigh-Ritz on the columns of U; returns ascending values, M-orthonormal vectors."""
    Kr = U.T @ (K @ U)
    Mr = U.T @ (M @ U)
    vals, C = la.eigh(0.5 * (Kr + Kr.T), 0.5 * (Mr + Mr.T))
    return vals, U @ C


def _sparse_eigs(K, M, k, shift):
    A = (K + shift * M).tocsc()
    lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options={"SymmetricMode": True})
    op = spla.LinearOperator(A.shape, matvec=lu.solve, dtype=float)
    n = K.shape[0]
    v0 = np.ones(n) + np.linspace(0.0, 1.0, n)  # fixed start vector keeps runs reproducible
    try:
        vals, vecs = spla.eigsh(K, k=k, M=M, sigma=-shift, which="LM", OPinv=op, v0=v0, tol=1e-12)
    except spla.ArpackError as exc:
        raise SolverError(f"Lanczos iteration failed: {exc}") from exc
    return vals, vecs


def steklov_solve(mesh: Mesh, weight: BoundaryWeight = UNIT_WEIGHT, k: int = 6,
                  method: str = "auto") -> SteklovSolution:
    """Smallest ``k`` Steklov eigenpairs on ``mesh``."""
    nb = len(mesh.boundary_vertices)
    if not 1 <= k <= nb:
        raise DomainError(f"k must lie in [1, {nb}]")
    if method == "auto":
        method = "dense" if nb <= DENSE_MAX_BOUNDARY else "sparse"
    if method not in ("dense", "sparse"):
        raise DomainError(f"unknown method {method!r}")
    K = assemble_stiffness(mesh)
    M = assemble_boundary_mass(mesh, weight)
    solver = InteriorSolver(K, mesh)
    b = solver.b
    if method == "dense":
        S = schur_reduce(K, mesh, solver)
        M_bb = M[b][:, b].toarray()
        _, U_b = solve_generalized(S, M_bb, k)
    else:
        diam = float(np.ptp(mesh.vertices, axis=0).max())
        _, U = _sparse_eigs(K, M, min(k, nb - 1), shift=1.0 / diam)
        U_b = U[b]
        if U_b.shape[1] < k:
            raise SolverError("sparse route returned too few eigenpairs")
    U = recover_interior(K, mesh, U_b, solver)
    vals, U = _ritz(K, M, U)
    U = _fix_signs(U, mesh)
    log.debug("steklov_solve %s: nb=%d n=%d sigma=%s", method, nb, mesh.n_vertices, vals[:4])
    return SteklovSolution(vals, U, mesh, weight, K, M, method)


def _fix_signs(U: np.ndarray, mesh: Mesh) -> np.ndarray:
    # deterministic sign: largest-magnitude entry positive
    idx = np.argmax(np.abs(U), axis=0)
    s = np.sign(U[idx, np.arange(U.shape[1])])
    s[s == 0] = 1.0
    return U * s
