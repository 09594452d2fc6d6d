"""Closed-form spectra, checked against independent evaluations."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, linalg

from steklov_lab import DomainError
from steklov_lab import analytic as an


def _det_roots(l, r0, c):
    """Oracle: generalized eigenvalues of the 2x2 boundary system built from u = A r^l + B r^-l."""
    if l == 0:
        # u = A + B log r
        S = np.array([[0.0, 1.0], [0.0, -1.0 / r0]])
        W = np.array([[1.0, 0.0], [c, c * math.log(r0)]])
    else:
        # outer: u_r(1) = s u(1); inner: -u_r(r0) = s c u(r0)
        S = np.array([[l, -l], [-l * r0 ** (l - 1), l * r0 ** (-l - 1)]])
        W = np.array([[1.0, 1.0], [c * r0**l, c * r0 ** (-l)]])
    vals = linalg.eigvals(S, W)
    return sorted(float(v.real) for v in vals if np.isfinite(v))


class TestBranches:
    def test_half_radius_values(self):
        assert an.sigma_minus(1, 0.5) == pytest.approx(1 / 3, rel=1e-15)
        assert an.sigma_plus(1, 0.5) == pytest.approx(3.0, rel=1e-15)
        assert an.sigma_plus(0, 0.5) == pytest.approx(-2 / math.log(0.5), rel=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 10), st.floats(0.01, 0.99))
    def test_product_is_l_squared(self, l, r0):
        assert an.sigma_minus(l, r0) * an.sigma_plus(l, r0) == pytest.approx(l * l, rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 10), st.floats(0.01, 3.0))
    def test_cylinder_identity(self, l, T):
        r0 = math.exp(-2 * T)
        assert an.sigma_minus(l, r0) == pytest.approx(l * math.tanh(l * T), rel=1e-12)
        assert an.sigma_plus(l, r0) == pytest.approx(l / math.tanh(l * T), rel=1e-12)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5, float("nan")])
    def test_radius_validation(self, bad):
        with pytest.raises(DomainError):
            an.sigma_minus(1, bad)

    def test_index_validation(self):
        with pytest.raises(DomainError):
            an.sigma_minus(0, 0.5)
        with pytest.raises(DomainError):
            an.sigma_plus(-1, 0.5)


class TestModeRoots:
    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 8), st.floats(0.05, 0.95), st.floats(1.0, 30.0))
    def test_against_generalized_eigvals(self, l, r0, c):
        got = an._mode_roots(l, r0, c)
        want = _det_roots(l, r0, c)
        if l == 0:
            want = [0.0] + [v for v in want if abs(v) > 1e-12]
        assert got[0] == pytest.approx(want[0], rel=1e-9, abs=1e-12)
        assert got[1] == pytest.approx(want[-1], rel=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 10), st.floats(0.02, 0.98))
    def test_weighted_case_factors(self, l, r0):
        lo, hi = an._mode_roots(l, r0, 1 / r0)
        assert lo == pytest.approx(an.sigma_minus(l, r0), rel=1e-11)
        assert hi == pytest.approx(an.sigma_plus(l, r0), rel=1e-11)

    def test_radial_weighted(self):
        assert an._mode_roots(0, 0.3, 1 / 0.3)[1] == pytest.approx(an.sigma_plus(0, 0.3), rel=1e-14)


class TestAnnulusSpectrum:
    def test_example_list(self):
        form = an.annulus_spectrum(0.5, 2.0, 8)
        vals = form.values()
        assert vals[0] == 0.0
        assert vals[1] == vals[2] == pytest.approx(1 / 3)
        assert any(m.l == 0 and m.value == pytest.approx(2.8853900818) for m in form.modes)

    def test_sorted_and_complete(self):
        form = an.annulus_spectrum(0.2, 5.0, 12)
        vals = form.values()
        assert np.all(np.diff(vals) >= 0)
        # brute force over many l
        brute = sorted(v for l in range(60) for i, v in enumerate(an._mode_roots(l, 0.2, 5.0))
                       for _ in range(1 if l == 0 else 2))
        np.testing.assert_allclose(form.first(12), brute[:12], rtol=1e-13, atol=1e-14)

    def test_small_radius_grows_l_max(self):
        form = an.annulus_spectrum(0.02, 1 / 0.02, 30, l_max=1)
        assert form.l_max > 1
        brute = sorted(v for l in range(80) for v in an._mode_roots(l, 0.02, 50.0)
                       for _ in range(1 if l == 0 else 2))
        np.testing.assert_allclose(form.first(30), brute[:30], rtol=1e-13, atol=1e-14)

    def test_smallest_positive_radial_regime(self):
        m = an.annulus_spectrum(0.05, 20.0, 4).smallest_positive()
        assert m.l == 0 and m.multiplicity == 1

    def test_smallest_positive_angular_regime(self):
        m = an.annulus_spectrum(0.5, 2.0, 4).smallest_positive()
        assert m.l == 1 and m.multiplicity == 2

    def test_weight_below_one_rejected(self):
        with pytest.raises(DomainError):
            an.annulus_spectrum(0.5, 0.5, 4)


class TestCylinderAndSegment:
    def test_example(self):
        np.testing.assert_allclose(an.cylinder_spectrum(1.0, 4), [0, math.tanh(1), math.tanh(1), 1.0],
                                   rtol=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.05, 4.0), st.integers(1, 20))
    def test_matches_weighted_annulus(self, T, k):
        r0 = math.exp(-2 * T)
        cyl = an.cylinder_spectrum(T, k)
        ann = an.annulus_spectrum(r0, 1 / r0, k).first(k)
        np.testing.assert_allclose(cyl, ann, rtol=1e-10, atol=1e-12)

    def test_segment(self):
        assert an.segment_spectrum(2.0) == (0.0, 0.5)
        with pytest.raises(DomainError):
            an.segment_spectrum(0.0)
        with pytest.raises(DomainError):
            an.cylinder_spectrum(-1.0, 3)


class TestRoots:
    def test_T_star(self):
        T = an.find_T_star()
        assert abs(T * math.tanh(T) - 1) < 1e-10
        assert T == pytest.approx(1.19967864, abs=1e-8)

    def test_R_star_relation(self):
        R, T = an.find_R_star(), an.find_T_star()
        assert abs(R - math.exp(-2 * T)) < 1e-10
        assert abs(R - an.crossover_radius()) < 1e-8

    def test_regime_direction(self):
        R = an.find_R_star()
        assert an.radial_first(0.5 * R)
        assert not an.radial_first(min(0.99, 2 * R))


class TestRadialEigenfunction:
    def test_nodal_radius_and_boundary_condition(self):
        r0 = 0.05
        u = an.radial_eigenfunction(r0)
        assert u(u.nodal_radius) == pytest.approx(0.0, abs=1e-15)
        h = 1e-6
        # u_r(1) = sigma u(1); -u_r(r0) = sigma (1/r0) u(r0)
        du1 = (u(1.0) - u(1.0 - h)) / h
        assert du1 == pytest.approx(u.eigenvalue * u(1.0), rel=1e-5)
        du0 = (u(r0 + h * r0) - u(r0)) / (h * r0)
        assert -du0 == pytest.approx(u.eigenvalue * u(r0) / r0, rel=1e-5)

    def test_normalization(self):
        u = an.radial_eigenfunction(0.05)
        assert u.weighted_boundary_norm2() == pytest.approx(1.0, rel=1e-14)
        outer = integrate.quad(lambda t: u(1.0) ** 2, 0, 2 * math.pi)[0]
        inner = integrate.quad(lambda t: (1 / 0.05) * u(0.05) ** 2 * 0.05, 0, 2 * math.pi)[0]
        assert outer + inner == pytest.approx(1.0, rel=1e-12)

    def test_outside_domain(self):
        with pytest.raises(DomainError):
            an.radial_eigenfunction(0.2)(0.1)
        with pytest.raises(DomainError):
            an.radial_eigenfunction(1.2)
