"""Acceptance suite: twelve criteria at their stated tolerances.

Each test prints one ``criterion N: PASS|FAIL`` line to the terminal (even
under output capture) before asserting.
"""

import math
import time

import numpy as np
import pytest

from steklov_lab import analysis as A
from steklov_lab import analytic
from steklov_lab.cli import main as cli_main
from steklov_lab.fem import BoundaryWeight, UNIT_WEIGHT, steklov_solve
from steklov_lab.geometry import Annulus, Disk, Ellipse, ellipse_boundary_x2, ellipse_perimeter
from steklov_lab.mesh import build_mesh

NR, NA = 64, 256
STUDY_R0 = 0.081
STUDY_EPS = (0.02, 0.01, 0.005)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return emit


def _solve(spec, weight=UNIT_WEIGHT, k=8, nr=NR, na=NA):
    return steklov_solve(build_mesh(spec, n_radial=nr, n_angular=na), weight, k)


@pytest.fixture(scope="module")
def ellipse21():
    return _solve(Ellipse(2.0, 1.0), k=9)


@pytest.fixture(scope="module")
def disk_run():
    t0 = time.perf_counter()
    coarse = _solve(Disk(1.0), k=5)
    fine = _solve(Disk(1.0), k=5, nr=2 * NR, na=2 * NA)
    return coarse, fine, time.perf_counter() - t0


@pytest.fixture(scope="module")
def weighted_runs():
    out = {}
    for r0 in (0.5, 0.2):
        t0 = time.perf_counter()
        sol = _solve(Annulus(r0), BoundaryWeight(inner=1 / r0), k=7)
        out[r0] = (sol, time.perf_counter() - t0)
    return out


@pytest.fixture(scope="module")
def study():
    t0 = time.perf_counter()
    rows = A.oscillation_convergence_study(STUDY_R0, STUDY_EPS)
    return rows, time.perf_counter() - t0


def test_criterion_01_closed_form_identities(report):
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    worst_prod = worst_cyl = 0.0
    for _ in range(100):
        l = int(rng.integers(1, 11))
        r0 = float(rng.uniform(0.01, 0.99))
        worst_prod = max(worst_prod, abs(analytic.sigma_minus(l, r0) * analytic.sigma_plus(l, r0) - l * l) / l**2)
        T = -0.5 * math.log(r0)
        want = l * math.tanh(l * T)
        worst_cyl = max(worst_cyl, abs(analytic.sigma_minus(l, math.exp(-2 * T)) - want) / want)
    dt = time.perf_counter() - t0
    ok = worst_prod < 1e-12 and worst_cyl < 1e-12 and dt < 1.0
    report(1, ok, f"product rel err {worst_prod:.1e}, cylinder rel err {worst_cyl:.1e}, {dt:.3f} s")
    assert ok


def test_criterion_02_roots(report):
    t0 = time.perf_counter()
    T = analytic.find_T_star()
    R = analytic.find_R_star()
    cross = analytic.crossover_radius()
    dt = time.perf_counter() - t0
    e1, e2, e3 = abs(T * math.tanh(T) - 1), abs(R - math.exp(-2 * T)), abs(R - cross)
    ok = e1 < 1e-10 and e2 < 1e-10 and e3 < 1e-8 and dt < 1.0
    report(2, ok, f"T*={T:.10f} R*={R:.10f} residuals {e1:.1e} {e2:.1e} {e3:.1e}, {dt:.3f} s")
    assert ok


def test_criterion_03_disk_accuracy(report, disk_run):
    coarse, fine, dt = disk_run
    s = coarse.eigenvalues
    errs = [abs(s[1] - 1), abs(s[2] - 1), abs(s[3] - 2) / 2, abs(s[4] - 2) / 2]
    ratio = abs(s[1] - 1) / abs(fine.eigenvalues[1] - 1)
    ok = errs[0] < 0.01 and errs[1] < 0.01 and errs[2] < 0.02 and errs[3] < 0.02 and ratio >= 3 and dt < 60
    report(3, ok, f"rel errors {', '.join(f'{e:.1e}' for e in errs)}, refinement ratio {ratio:.2f}, {dt:.1f} s")
    assert ok


@pytest.mark.parametrize("r0", [0.5, 0.2])
def test_criterion_04_weighted_annulus(report, weighted_runs, r0):
    sol, dt = weighted_runs[r0]
    want = analytic.annulus_spectrum(r0, 1 / r0, 7).first(7)[1:]
    got = sol.eigenvalues[1:7]
    err = float(np.max(np.abs(got - want) / want))
    ok = err < 0.02 and dt < 60
    report(4, ok, f"r0={r0}: max rel err {err:.1e} over 6 positive eigenvalues, {dt:.1f} s")
    assert ok


def test_criterion_05_triple_eigenvalue(report):
    R = analytic.find_R_star()
    sol = _solve(Annulus(R), BoundaryWeight(inner=1 / R), k=5)
    s = sol.eigenvalues[1:4]
    spread = float((s.max() - s.min()) / s.min())
    ok = spread < 0.03
    report(5, ok, f"r0=R*: sigma1..3 = {np.array2string(s, precision=5)}, spread {spread:.1e}")
    assert ok


def test_criterion_06_ellipse_bounds(report, ellipse21, tmp_path):
    s1 = float(ellipse21.eigenvalues[1])
    weinstock = 2 * math.pi / ellipse_perimeter(2.0, 1.0)
    code = cli_main(["bounds", "--domain", "ellipse", "--a", "2", "--b", "1", "--out", str(tmp_path)])
    ok = 0.25 * 0.99 <= s1 and s1 < 1.0 and s1 < weinstock and code == 0
    report(6, ok, f"sigma1={s1:.6f} in [0.2475, min(1, {weinstock:.6f})), bounds exit {code}")
    assert ok


def test_criterion_07_ellipse_simplicity(report):
    rows = A.ellipse_family_sweep([1.2, 1.5, 2.0, 3.0], n_radial=NR, n_angular=NA, refine=True)
    disk = _solve(Disk(1.0), k=4)
    disk_gap = A.spectral_gap(disk)
    ok = all(r.gap > 10 * r.error_estimate and r.sigma1_class == "OE" for r in rows) and disk_gap < A.PAIR_RTOL
    detail = "; ".join(f"a/b={r.a:g}: gap {r.gap:.3f} err {r.error_estimate:.1e} {r.sigma1_class}" for r in rows)
    report(7, ok, f"{detail}; disk gap {disk_gap:.1e}")
    assert ok


def test_criterion_08_thin_ellipse_upper_bound(report):
    a, b = 1.0, 0.05
    sol = _solve(Ellipse(a, b), k=4)
    x2 = ellipse_boundary_x2(a, b)
    bound = math.pi * a * b / x2
    s1 = float(sol.eigenvalues[1])
    lim = abs(x2 - 4 * a**3 / 3) / (4 * a**3 / 3)
    ok = s1 <= bound and lim < 0.02
    report(8, ok, f"sigma1={s1:.6f} <= {bound:.6f}; boundary x^2 integral {x2:.6f} vs 4/3 ({lim:.2%})")
    assert ok


def test_criterion_09_closed_nodal_line(report, study):
    rows, dt = study
    assert analytic.radial_first(STUDY_R0)
    errs = [r.rel_error for r in rows]
    last = rows[-1]
    decreasing = all(e1 > e2 for e1, e2 in zip(errs, errs[1:]))
    nodal_ok = (last.closed and abs(last.winding) == 1 and last.contacts == 0
                and abs(last.mean_radius - math.sqrt(STUDY_R0)) < 0.05 * math.sqrt(STUDY_R0))
    ok = decreasing and errs[-1] < 0.05 and nodal_ok and dt < 300
    report(9, ok, f"r0={STUDY_R0} errors {', '.join(f'{e:.2e}' for e in errs)}; smallest eps: {last.nodal}"
                  f" (sqrt r0 {math.sqrt(STUDY_R0):.6f}); {dt:.0f} s")
    assert ok


def test_criterion_10_foliation_eigenpairs(report, ellipse21):
    classes = A.classify_spectrum(ellipse21, 9)
    vals = ellipse21.eigenvalues
    eo = [(i, vals[i]) for i in range(1, 9) if classes[i].label == "EO"]
    oe = [(i, vals[i]) for i in range(1, 9) if classes[i].label == "OE"]
    ok = bool(eo) and bool(oe) and all(v >= 0.99 * 1.0 for _, v in eo) and all(v >= 0.99 * 0.25 for _, v in oe)
    report(10, ok, f"EO {[f'{v:.4f}' for _, v in eo]} >= 0.99; OE {[f'{v:.4f}' for _, v in oe]} >= 0.2475")
    assert ok


def test_criterion_11_scaling(report, ellipse21):
    t = 3.0
    scaled = steklov_solve(ellipse21.mesh.scaled(t), UNIT_WEIGHT, 9)
    a, b = ellipse21.eigenvalues[1:], scaled.eigenvalues[1:] * t
    err = float(np.max(np.abs(a - b) / a))
    ok = err < 1e-12
    report(11, ok, f"max rel deviation {err:.1e}")
    assert ok


def test_criterion_12_courant(report, disk_run, ellipse21, weighted_runs, study):
    counts = {
        "disk": A.count_nodal_domains(disk_run[0].mesh, disk_run[0].vector(1)),
        "ellipse": A.count_nodal_domains(ellipse21.mesh, ellipse21.vector(1)),
    }
    for r0, (sol, _) in weighted_runs.items():
        counts[f"annulus r0={r0}"] = A.count_nodal_domains(sol.mesh, sol.vector(1))
    for r in study[0]:
        counts[f"osc eps={r.eps}"] = r.nodal_domains
    ok = all(c == 2 for c in counts.values())
    report(12, ok, ", ".join(f"{k}: {v}" for k, v in counts.items()))
    assert ok
