"""Planar domains, symmetric boundary profiles and the foliation bound functionals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError

SUP_SAMPLES = 10_001
PROFILE_TOL = 1e-8
LENGTH_RTOL = 5e-3


@dataclass(frozen=True)
class Profile:
    """Even, positive half-width ``f`` on ``(-half_length, half_length)``.

    ``closed_form_sup`` short-circuits :func:`profile_sup` when the supremum of
    ``f sqrt(1 + f'^2)`` is known exactly (ellipse profiles).
    """

    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    half_length: float
    tag: str = "generic"
    closed_form_sup: Optional[float] = None

    def __post_init__(self):
        if not self.half_length > 0:
            raise DomainError("profile half-length must be positive")
        t = np.linspace(-self.half_length, self.half_length, 203)[1:-1]
        ft = np.asarray(self.f(t), dtype=float)
        if np.any(~np.isfinite(ft)) or np.any(ft <= 0):
            raise DomainError("profile must be finite and positive on its open interval")
        if np.max(np.abs(ft - np.asarray(self.f(-t)))) > 1e-12 * max(1.0, np.max(ft)):
            raise DomainError("profile must be even")

    @property
    def vanishes_at_ends(self) -> bool:
        """True when ``f(+-half_length) = 0``, the shape assumed by the foliation bounds."""
        end = float(np.asarray(self.f(np.array([self.half_length])))[0])
        return abs(end) <= PROFILE_TOL * self.half_length

    def weight(self, t):
        """``f(t) sqrt(1 + f'(t)^2)``, the quantity whose sup norm enters the bounds."""
        t = np.asarray(t, dtype=float)
        return np.asarray(self.f(t)) * np.sqrt(1.0 + np.asarray(self.df(t)) ** 2)


def ellipse_profiles(a: float, b: float) -> tuple[Profile, Profile]:
    """Profiles ``f(x) = b sqrt(1 - x^2/a^2)`` and ``g(y) = a sqrt(1 - y^2/b^2)``."""

    def make(p, q):
        # half-width q over (-p, p)
        def f(t):
            return q * np.sqrt(np.maximum(0.0, 1.0 - (np.asarray(t) / p) ** 2))

        def df(t):
            t = np.asarray(t, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                return -q * t / (p * p * np.sqrt(np.maximum(0.0, 1.0 - (t / p) ** 2)))

        # f^2 (1 + f'^2) = q^2 (1 - t^2/p^2) + q^4 t^2 / p^4 is monotone in t^2
        return Profile(f, df, p, tag="ellipse", closed_form_sup=max(q, q * q / p))

    return make(a, b), make(b, a)


def constant_profile(width: float, half_length: float) -> Profile:
    return Profile(
        lambda t: np.full_like(np.asarray(t, dtype=float), width),
        lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        half_length,
        tag="constant",
        closed_form_sup=width,
    )


@dataclass(frozen=True)
class SupResult:
    value: float
    argmax: float
    spacing: float
    at_endpoint: bool


def sample_profile_sup(profile: Profile, n: int = SUP_SAMPLES) -> SupResult:
    """Supremum of ``f sqrt(1 + f'^2)`` by dense sampling and bounded Brent refinement.

    Samples also approach both endpoints geometrically so that suprema reached
    only in the limit (the ellipse ``g``) are captured.
    """
    L = profile.half_length
    grid = np.linspace(-L, L, n + 2)[1:-1]
    spacing = grid[1] - grid[0]
    approach = L * (1.0 - np.logspace(-2, -12, 11))
    t = np.concatenate([-approach, grid, approach[::-1]])
    t.sort()
    h = profile.weight(t)
    if np.any(~np.isfinite(h)):
        raise DomainError("profile weight is not finite at a sample point")
    i = int(np.argmax(h))
    best, arg = float(h[i]), float(t[i])
    at_endpoint = i in (0, len(t) - 1)
    if not at_endpoint:
        lo, mid, hi = t[i - 1], t[i], t[i + 1]
        if h[i - 1] < h[i] and h[i + 1] < h[i]:
            res = optimize.minimize_scalar(
                lambda s: -float(profile.weight(s)), bounds=(lo, hi), method="bounded",
                options={"xatol": 1e-12 * max(1.0, L)},
            )
            if res.success and lo <= res.x <= hi and -res.fun > best:
                best, arg = float(-res.fun), float(res.x)
    return SupResult(best, arg, float(spacing), at_endpoint)


def profile_sup(profile: Profile) -> float:
    """Sup norm of ``f sqrt(1 + f'^2)`` over the open interval."""
    if profile.closed_form_sup is not None:
        return float(profile.closed_form_sup)
    return sample_profile_sup(profile).value


def foliation_bound(profile: Profile) -> float:
    """Lower bound ``1 / ||f sqrt(1 + f'^2)||`` for eigenfunctions odd across the leaves.

    The expression is independent of dimension: in R^n the leaves are balls of
    radius ``f`` and the first nonzero Steklov eigenvalue of a ball is ``1/f``.
    """
    return 1.0 / profile_sup(profile)


# ---------------------------------------------------------------------------
# Domain descriptions
# ---------------------------------------------------------------------------


def _positive(name, *vals):
    for v in vals:
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise DomainError(f"{name} must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class Disk:
    R: float = 1.0

    def __post_init__(self):
        _positive("radius", self.R)


@dataclass(frozen=True)
class Ellipse:
    a: float
    b: float

    def __post_init__(self):
        _positive("semi-axes", self.a, self.b)
        if self.a < self.b:
            raise DomainError("ellipse requires a >= b")


@dataclass(frozen=True)
class Annulus:
    r0: float

    def __post_init__(self):
        if not (0.0 < self.r0 < 1.0):
            raise DomainError(f"annulus inner radius must lie in (0, 1), got {self.r0!r}")


@dataclass(frozen=True)
class OscAnnulus:
    """Annulus whose inner circle is replaced by ``rho = r0 + eps cos(n_waves theta)``."""

    r0: float
    eps: float
    n_waves: int

    def __post_init__(self):
        if not (0.0 < self.r0 < 1.0):
            raise DomainError(f"annulus inner radius must lie in (0, 1), got {self.r0!r}")
        _positive("amplitude", self.eps)
        if not (self.r0 + self.eps < 1.0 and self.r0 - self.eps > 0.0):
            raise DomainError("oscillation must stay strictly inside (0, 1)")
        if int(self.n_waves) != self.n_waves or self.n_waves < 8:
            raise DomainError("n_waves must be an integer >= 8")
        if self.n_waves % 2:
            raise DomainError("n_waves must be even to keep both reflection symmetries")


@dataclass(frozen=True)
class ProfilePair:
    """Domain ``{|y| < f(x), |x| < a} = {|x| < g(y), |y| < b}``."""

    f: Profile
    g: Profile
    name: str = "profile"

    def __post_init__(self):
        check_profile_pair(self.f, self.g)

    @property
    def a(self) -> float:
        return self.f.half_length

    @property
    def b(self) -> float:
        return self.g.half_length


DomainSpec = Union[Disk, Ellipse, Annulus, OscAnnulus, ProfilePair]


def check_profile_pair(f: Profile, g: Profile, n: int = 41, tol: float = PROFILE_TOL) -> None:
    """Check at sample points that ``f`` and ``g`` describe the same region."""
    a, b = f.half_length, g.half_length
    xs = np.linspace(-a, a, n + 2)[1:-1]
    ys = np.linspace(-b, b, n + 2)[1:-1]
    X, Y = np.meshgrid(xs, ys)
    fx = f.f(X)
    gy = g.f(Y)
    in_f = np.abs(Y) < fx - tol
    in_g = np.abs(X) < gy - tol
    out_f = np.abs(Y) > fx + tol
    out_g = np.abs(X) > gy + tol
    if np.any(in_f & out_g) or np.any(in_g & out_f):
        raise DomainError("profiles f and g do not describe the same region")
    if abs(np.max(f.f(xs)) - b) > max(tol, 1e-3 * b) or abs(np.max(g.f(ys)) - a) > max(tol, 1e-3 * a):
        raise DomainError("profile heights do not match the half-lengths")


def rectangle(a: float, b: float) -> ProfilePair:
    _positive("half-lengths", a, b)
    return ProfilePair(constant_profile(b, a), constant_profile(a, b), name="rectangle")


def profiles_of(spec: DomainSpec) -> tuple[Profile, Profile]:
    """The (f, g) profile pair of a doubly symmetric simply connected domain."""
    if isinstance(spec, Disk):
        return ellipse_profiles(spec.R, spec.R)
    if isinstance(spec, Ellipse):
        return ellipse_profiles(spec.a, spec.b)
    if isinstance(spec, ProfilePair):
        return spec.f, spec.g
    raise DomainError(f"{type(spec).__name__} has no profile representation")


def is_simply_connected(spec: DomainSpec) -> bool:
    return isinstance(spec, (Disk, Ellipse, ProfilePair))


def lower_bound_corr(spec: DomainSpec) -> float:
    """``min(1/||f sqrt(1+f'^2)||, 1/||g sqrt(1+g'^2)||)``."""
    f, g = profiles_of(spec)
    return min(foliation_bound(f), foliation_bound(g))


def ellipse_perimeter(a: float, b: float) -> float:
    val, _ = integrate.quad(lambda t: math.hypot(a * math.sin(t), b * math.cos(t)), 0.0, 0.5 * math.pi,
                            epsabs=1e-13, epsrel=1e-13, limit=200)
    return 4.0 * val


def ellipse_boundary_x2(a: float, b: float) -> float:
    """``integral of x^2`` over the ellipse boundary, by adaptive quadrature."""
    val, _ = integrate.quad(
        lambda t: (a * math.cos(t)) ** 2 * math.hypot(a * math.sin(t), b * math.cos(t)),
        0.0, 0.5 * math.pi, epsabs=1e-13, epsrel=1e-13, limit=200,
    )
    return 4.0 * val


# ---------------------------------------------------------------------------
# Oscillating inner boundary
# ---------------------------------------------------------------------------


def wave_arclength(r0: float, amplitude: float, n_waves: int) -> float:
    """Arclength of ``rho = r0 + amplitude cos(n theta)``, one period integrated then scaled."""
    if n_waves == 0 or amplitude == 0.0:
        return 2.0 * math.pi * r0
    n = int(n_waves)

    def speed(t):
        return math.hypot(r0 + amplitude * math.cos(n * t), amplitude * n * math.sin(n * t))

    val, _ = integrate.quad(speed, 0.0, 2.0 * math.pi / n, epsabs=1e-14, epsrel=1e-12, limit=400)
    return n * val


@dataclass(frozen=True)
class OscWave:
    n_waves: int
    amplitude: float
    length_ratio: float  # achieved arclength / (2 pi r0)


def oscillating_inner_boundary(r0: float, c_target: float, eps: float, max_waves: int = 4096) -> OscWave:
    """Waveform whose arclength is ``c_target`` times the circle ``|x| = r0``.

    The smallest even wave count reaching the target at amplitude ``eps`` is
    chosen; if it overshoots by more than the tolerance the amplitude is lowered
    (never raised) so the length matches.
    """
    if not (0.0 < r0 < 1.0):
        raise DomainError(f"inner radius must lie in (0, 1), got {r0!r}")
    if not c_target >= 1.0:
        raise DomainError("target weight must be >= 1")
    if not (0.0 < eps < min(r0, 1.0 - r0) / 4.0):
        raise DomainError("amplitude must satisfy 0 < eps < min(r0, 1 - r0)/4")
    base = 2.0 * math.pi * r0
    target = c_target * base
    if c_target * (1.0 - LENGTH_RTOL) <= 1.0:
        return OscWave(0, 0.0, 1.0)
    n = 8
    while wave_arclength(r0, eps, n) < target * (1.0 - LENGTH_RTOL):
        n += 2
        if n > max_waves:
            raise DomainError("amplitude too small for target length")
    amp = eps
    if wave_arclength(r0, eps, n) > target * (1.0 + LENGTH_RTOL):
        amp = optimize.brentq(lambda s: wave_arclength(r0, s, n) - target, 0.0, eps, xtol=1e-14, rtol=1e-12)
    return OscWave(n, float(amp), wave_arclength(r0, amp, n) / base)
