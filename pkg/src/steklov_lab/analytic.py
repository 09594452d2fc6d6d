"""Closed-form Steklov spectra used as oracles for the finite element solver.

The weighted annulus ``r0 < |x| < 1`` carries weight 1 on the outer circle and
``c`` on the inner one. Separation of variables gives, for every angular index
``l``, a 2x2 boundary system whose determinant is a quadratic in the eigenvalue.
For ``c = 1/r0`` the roots factor into :func:`sigma_minus` and :func:`sigma_plus`;
the same spectrum is that of the flat cylinder of half-height ``T = -log(r0)/2``.

Note on the regime: ``sigma_plus(0, r0) = -2/log(r0)`` increases with ``r0`` while
``sigma_minus(1, r0)`` decreases, so the radial mode is the first positive one
for ``r0 < R*`` (equivalently ``T > T*`` on the cylinder). :func:`radial_first`
decides this by evaluating both branches instead of assuming a direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import DomainError, SolverError

ROOT_XTOL = 1e-12

MINUS = "minus"
PLUS = "plus"


def _check_radius(r0: float) -> None:
    if not (0.0 < r0 < 1.0) or not math.isfinite(r0):
        raise DomainError(f"inner radius must lie in (0, 1), got {r0!r}")


def sigma_minus(l: int, r0: float) -> float:
    """Lower root ``l(1 - r0^l)/(1 + r0^l)`` of the weighted annulus, ``c = 1/r0``."""
    _check_radius(r0)
    if int(l) != l or l < 1:
        raise DomainError(f"angular index must be a positive integer, got {l!r}")
    q = r0**l
    return l * (1.0 - q) / (1.0 + q)


def sigma_plus(l: int, r0: float) -> float:
    """Upper root of the weighted annulus with ``c = 1/r0``.

    For ``l = 0`` this is the radial eigenvalue ``-2/log(r0)``.
    """
    _check_radius(r0)
    if int(l) != l or l < 0:
        raise DomainError(f"angular index must be a non-negative integer, got {l!r}")
    if l == 0:
        return -2.0 / math.log(r0)
    q = r0**l
    return l * (1.0 + q) / (1.0 - q)


@dataclass(frozen=True)
class ModeEigenvalue:
    l: int
    branch: str
    value: float

    @property
    def multiplicity(self) -> int:
        return 1 if self.l == 0 else 2


@dataclass(frozen=True)
class AnnulusClosedForm:
    r0: float
    c_inner: float
    modes: tuple[ModeEigenvalue, ...]
    l_max: int

    def values(self) -> np.ndarray:
        """All eigenvalues, ascending, repeated according to multiplicity."""
        return np.array([m.value for m in self.modes for _ in range(m.multiplicity)])

    def first(self, k: int) -> np.ndarray:
        return self.values()[:k]

    def smallest_positive(self) -> ModeEigenvalue:
        return next(m for m in self.modes if m.value > 0.0)


def _mode_roots(l: int, r0: float, c: float) -> tuple[float, float]:
    """Both eigenvalues of angular index ``l`` for inner weight ``c``.

    Outer row from ``u_r(1) = s u(1)``, inner row from ``-u_r(r0) = s c u(r0)``.
    """
    if l == 0:
        # u = A + B log r; determinant s (1/r0 + c + s c log r0)
        return 0.0, -(1.0 / r0 + c) / (c * math.log(r0))
    q = r0 ** (2 * l)
    a2 = c * (1.0 - q)
    a1 = -l * (1.0 + q) * (c + 1.0 / r0)
    a0 = l * l * (1.0 - q) / r0
    # a1^2 - 4 a2 a0 rewritten as a sum of squares: no cancellation near a double root
    disc = l * l * ((1.0 + q) ** 2 * (c - 1.0 / r0) ** 2 + 16.0 * c * q / r0)
    if not disc >= 0.0:
        raise SolverError(f"invalid discriminant for l={l}, r0={r0}, c={c}")
    # numerically stable pair of roots
    t = -0.5 * (a1 - math.sqrt(disc))
    lo, hi = sorted((a0 / t, t / a2))
    return lo, hi


def annulus_spectrum(r0: float, c_inner: float, k: int, l_max: int | None = None) -> AnnulusClosedForm:
    """Closed-form spectrum of the annulus with weight ``c_inner`` on ``|x| = r0``.

    ``l_max`` grows automatically until every mode beyond it exceeds the k-th
    smallest eigenvalue, so the first ``k`` values (with multiplicity) are exact.
    """
    _check_radius(r0)
    if not c_inner >= 1.0:
        raise DomainError(f"inner weight must be >= 1, got {c_inner!r}")
    if k < 1:
        raise DomainError("k must be at least 1")
    l_max = max(1, k if l_max is None else int(l_max))
    while True:
        modes = []
        for l in range(l_max + 1):
            lo, hi = _mode_roots(l, r0, c_inner)
            modes.append(ModeEigenvalue(l, MINUS, lo))
            modes.append(ModeEigenvalue(l, PLUS, hi))
        modes.sort(key=lambda m: (m.value, m.l, m.branch))
        flat = [m.value for m in modes for _ in range(m.multiplicity)]
        # the lower branch increases with l, so the next mode is bounded below by it
        next_lo = _mode_roots(l_max + 1, r0, c_inner)[0]
        if len(flat) >= k and next_lo > flat[k - 1]:
            return AnnulusClosedForm(r0, c_inner, tuple(modes), l_max)
        l_max *= 2


def cylinder_spectrum(T: float, k: int) -> list[float]:
    """k smallest Steklov eigenvalues of the flat cylinder S^1 x (-T, T)."""
    if not T > 0.0:
        raise DomainError(f"half-height must be positive, got {T!r}")
    vals = [0.0, 1.0 / T]
    l = 1
    while True:
        vals.extend([l * math.tanh(l * T)] * 2)
        vals.extend([l / math.tanh(l * T)] * 2)
        vals.sort()
        # l*tanh(lT) is increasing in l, so further modes cannot enter the first k
        if len(vals) >= k and (l + 1) * math.tanh((l + 1) * T) > vals[k - 1]:
            return vals[:k]
        l += 1


def segment_spectrum(L: float) -> tuple[float, float]:
    """The two Steklov eigenvalues of the segment (-L, L)."""
    if not L > 0.0:
        raise DomainError(f"half-length must be positive, got {L!r}")
    return 0.0, 1.0 / L


def find_T_star() -> float:
    """Positive root of ``z tanh(z) = 1``."""
    return optimize.bisect(lambda z: z * math.tanh(z) - 1.0, 0.5, 2.0, xtol=ROOT_XTOL, maxiter=200)


def find_R_star() -> float:
    """Root in (0, 1) of ``-2/log(r) = (1 - r)/(1 + r)``."""
    return optimize.bisect(
        lambda r: -2.0 / math.log(r) - (1.0 - r) / (1.0 + r),
        1e-6,
        1.0 - 1e-6,
        xtol=ROOT_XTOL,
        maxiter=200,
    )


def crossover_radius() -> float:
    """Radius where the radial and first angular branches of the c = 1/r0 problem meet.

    Located by bisection on ``sigma_plus(0, r) - sigma_minus(1, r)``, independently
    of :func:`find_R_star`.
    """
    return optimize.bisect(
        lambda r: sigma_plus(0, r) - sigma_minus(1, r), 1e-6, 1.0 - 1e-6, xtol=ROOT_XTOL, maxiter=200
    )


def radial_first(r0: float) -> bool:
    """True when the radial mode is the smallest positive eigenvalue for ``c = 1/r0``."""
    return sigma_plus(0, r0) < sigma_minus(1, r0)


@dataclass(frozen=True)
class RadialEigenfunction:
    """Radial eigenfunction ``kappa (1 - 2 log r / log r0)`` of the c = 1/r0 annulus."""

    r0: float
    kappa: float = field(default=1.0 / (2.0 * math.sqrt(math.pi)))

    @property
    def nodal_radius(self) -> float:
        return math.sqrt(self.r0)

    @property
    def eigenvalue(self) -> float:
        return sigma_plus(0, self.r0)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        slack = 1e-12
        if np.any(r < self.r0 * (1 - slack)) or np.any(r > 1.0 + slack):
            raise DomainError(f"radius outside [{self.r0}, 1]")
        out = self.kappa * (1.0 - 2.0 * np.log(r) / math.log(self.r0))
        return out if out.ndim else float(out)

    def weighted_boundary_norm2(self) -> float:
        """``integral of w u^2`` over both circles with w = 1/r0 inside."""
        outer = 2.0 * math.pi * self(1.0) ** 2
        inner = 2.0 * math.pi * self.r0 * (1.0 / self.r0) * self(self.r0) ** 2
        return outer + inner


def radial_eigenfunction(r0: float) -> RadialEigenfunction:
    _check_radius(r0)
    return RadialEigenfunction(r0)
