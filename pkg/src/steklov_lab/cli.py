"""Command-line entry point: ``steklov <command> [options]``.

Exit codes: 0 ok, 2 invalid configuration, 3 solver failure, 4 a bound verdict failed.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analysis, analytic
from .errors import DomainError, MeshError, SolverError
from .fem import UNIT_WEIGHT, BoundaryWeight, steklov_solve
from .geometry import Annulus, Disk, Ellipse, OscAnnulus, oscillating_inner_boundary, rectangle
from .io import atomic_write_text, coo_text, csv_text
from .mesh import build_mesh, format_mesh

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VERDICT = 4

DOMAINS = ("disk", "ellipse", "annulus", "osc-annulus", "rectangle")
OSC_RADIAL = 96

log = logging.getLogger("steklov_lab")


class ConfigError(Exception):
    pass


@dataclass
class RunResult:
    """Files to write and lines to print; nothing touches disk until the run succeeded."""

    files: dict = field(default_factory=dict)
    lines: list = field(default_factory=list)
    code: int = EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: {text!r}") from exc


def _common(p: argparse.ArgumentParser, solve: bool = True) -> None:
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--config", help="key=value file; command-line flags override it")
    p.add_argument("-v", "--verbose", action="store_true")
    if not solve:
        return
    p.add_argument("--domain", choices=DOMAINS, default="disk")
    p.add_argument("--radius", type=float, default=1.0, help="disk radius")
    p.add_argument("--a", type=float, default=2.0, help="x semi-axis (ellipse, rectangle)")
    p.add_argument("--b", type=float, default=1.0, help="y semi-axis (ellipse, rectangle)")
    p.add_argument("--r0", type=float, default=0.5, help="inner radius (annuli)")
    p.add_argument("--eps", type=float, default=0.01, help="oscillation amplitude bound (osc-annulus)")
    p.add_argument("--weight-inner", "--c", dest="weight_inner", type=float, default=1.0,
                   help="boundary weight on the inner circle (annulus)")
    p.add_argument("--k", type=int, default=6, help="number of eigenvalues")
    p.add_argument("--nr", type=int, default=None, help="radial resolution (default 64; 96 for osc-annulus)")
    p.add_argument("--na", type=int, default=256, help="angular resolution")
    p.add_argument("--per-wave", dest="per_wave", type=int, default=24,
                   help="angular vertices per wave (osc-annulus)")
    p.add_argument("--nx", type=int, default=64, help="x columns (rectangle)")
    p.add_argument("--ny", type=int, default=32, help="y rows (rectangle)")
    p.add_argument("--method", choices=("auto", "dense", "sparse"), default="auto")
    p.add_argument("--dump-mesh", dest="dump_mesh", action="store_true")
    p.add_argument("--dump-matrices", dest="dump_matrices", action="store_true")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = _Parser(prog="steklov", description="Steklov eigenvalues on planar domains.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {}

    p = subs["spectrum"] = sub.add_parser("spectrum", help="solve and write spectrum.csv")
    _common(p)

    p = subs["closed-form"] = sub.add_parser("closed-form", help="analytic annulus, cylinder or segment spectra")
    p.add_argument("kind", choices=("annulus", "cylinder", "segment"))
    _common(p, solve=False)
    p.add_argument("--r0", type=float, default=0.5)
    p.add_argument("--c", "--weight-inner", dest="c", type=float, default=None, help="inner weight (default 1/r0)")
    p.add_argument("--T", type=float, default=1.0, help="cylinder half-height")
    p.add_argument("--L", type=float, default=1.0, help="segment half-length")
    p.add_argument("--k", type=int, default=6)

    p = subs["bounds"] = sub.add_parser("bounds", help="check eigenvalue inequalities, write bounds.csv")
    _common(p)
    p.add_argument("--tol", type=float, default=analysis.DISCRETIZATION_RTOL, help="relative verdict tolerance")

    p = subs["nodal"] = sub.add_parser("nodal", help="nodal curves of one eigenfunction")
    _common(p)
    p.add_argument("--mode", type=int, default=1, help="eigenfunction index (0 is the constant)")

    p = subs["sweep"] = sub.add_parser("sweep", help="oscillation study or ellipse family sweep")
    _common(p)
    p.add_argument("--kind", choices=("eps", "ellipse"), default="eps")
    p.add_argument("--eps-list", dest="eps_list", type=_float_list, default=[0.02, 0.01, 0.005])
    p.add_argument("--aspects", type=_float_list, default=[1.2, 1.5, 2.0, 3.0])
    p.add_argument("--no-refine", dest="refine", action="store_false")
    p.set_defaults(r0=None)

    p = subs["roots"] = sub.add_parser("roots", help="critical half-height and radius")
    _common(p, solve=False)
    return parser, subs


def read_config(path: str) -> dict:
    """``key=value`` lines; ``#`` starts a comment. Keys use flag names with or without dashes."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _convert(parser: argparse.ArgumentParser, values: dict) -> dict:
    actions = {a.dest: a for a in parser._actions}
    out = {}
    for key, raw in values.items():
        if key == "weight_inner" and "c" in actions:
            key = "c"
        if key in ("config", "help") or key not in actions:
            raise ConfigError(f"unknown config key {key!r}")
        a = actions[key]
        if isinstance(a, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            flag = raw.lower() in ("1", "true", "yes", "on")
            out[key] = flag
            continue
        try:
            val = a.type(raw) if a.type else raw
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        if a.choices is not None and val not in a.choices:
            raise ConfigError(f"{key} must be one of {sorted(a.choices)}")
        out[key] = val
    return out


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sp = subs[args.command]
        sp.set_defaults(**_convert(sp, read_config(args.config)))
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------------------
# domain set-up
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Problem:
    spec: object
    weight: BoundaryWeight
    mesh: object
    wave: Optional[object] = None


def make_problem(args) -> Problem:
    """Validate every parameter, then mesh. Raises DomainError or MeshError."""
    if args.k < 2:
        raise DomainError("k must be at least 2")
    nr = args.nr if args.nr is not None else (OSC_RADIAL if args.domain == "osc-annulus" else 64)
    weight, wave = UNIT_WEIGHT, None
    if args.domain == "disk":
        spec = Disk(args.radius)
    elif args.domain == "ellipse":
        spec = Ellipse(args.a, args.b)
    elif args.domain == "rectangle":
        spec = rectangle(args.a, args.b)
    elif args.domain == "annulus":
        spec = Annulus(args.r0)
        weight = BoundaryWeight(inner=args.weight_inner)
    else:
        Annulus(args.r0)
        wave = oscillating_inner_boundary(args.r0, 1.0 / args.r0, args.eps)
        spec = OscAnnulus(args.r0, wave.amplitude, wave.n_waves)
    na = args.na
    if isinstance(spec, OscAnnulus):
        if args.per_wave < 16:
            raise DomainError("per-wave must be at least 16")
        na = 8 * math.ceil(args.per_wave * spec.n_waves / 8)
    mesh = build_mesh(spec, n_radial=nr, n_angular=na, n_x=args.nx, n_y=args.ny)
    return Problem(spec, weight, mesh, wave)


def _config_of(args) -> dict:
    skip = {"out", "config", "verbose", "dump_mesh", "dump_matrices"}
    return {k: (",".join(f"{x:g}" for x in v) if isinstance(v, list) else v)
            for k, v in sorted(vars(args).items()) if k not in skip}


def _dumps(args, prob: Problem, sol, res: RunResult) -> None:
    if args.dump_mesh:
        res.files["mesh.txt"] = format_mesh(prob.mesh)
    if args.dump_matrices:
        res.files["stiffness.coo"] = coo_text(sol.K)
        res.files["mass.coo"] = coo_text(sol.M)


def _reference(prob: Problem, k: int) -> Optional[np.ndarray]:
    spec = prob.spec
    if isinstance(spec, Disk):
        vals = [0.0] + [l / spec.R for l in range(1, k) for _ in range(2)]
        return np.array(vals[:k])
    if isinstance(spec, Annulus):
        return analytic.annulus_spectrum(spec.r0, prob.weight.inner, k).first(k)
    if isinstance(spec, OscAnnulus):
        return analytic.annulus_spectrum(spec.r0, 1.0 / spec.r0, k).first(k)
    return None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_spectrum(args) -> RunResult:
    prob = make_problem(args)
    sol = steklov_solve(prob.mesh, prob.weight, args.k, method=args.method)
    try:
        classes = [c.label for c in analysis.classify_spectrum(sol)]
    except MeshError:
        classes = ["-"] * len(sol)
    ref = _reference(prob, args.k)
    rows = []
    for i, s in enumerate(sol.eigenvalues):
        nd = analysis.count_nodal_domains(prob.mesh, sol.vector(i))
        if ref is None:
            cf, err = "", ""
        else:
            cf = float(ref[i])
            err = abs(s - cf) / cf if cf > 0 else abs(s)
            err = float(err)
        rows.append((i, float(s), classes[i], nd, cf, err))
    res = RunResult()
    cols = ("index", "eigenvalue", "symmetry_class", "nodal_domains", "closed_form", "rel_error")
    res.files["spectrum.csv"] = csv_text(cols, rows, _config_of(args))
    res.lines = [f"sigma_{i} = {s:.12e}" for i, s in enumerate(sol.eigenvalues)]
    _dumps(args, prob, sol, res)
    return res


def cmd_closed_form(args) -> RunResult:
    if args.k < 1:
        raise DomainError("k must be at least 1")
    res = RunResult()
    if args.kind == "annulus":
        c = 1.0 / args.r0 if args.c is None and 0 < args.r0 < 1 else args.c
        form = analytic.annulus_spectrum(args.r0, c, 2 * args.k)
        modes = form.modes[:args.k]
        rows = [(i, m.value, m.l, m.branch, m.multiplicity) for i, m in enumerate(modes)]
        cols = ("index", "eigenvalue", "l", "branch", "multiplicity")
        res.lines = [f"l={m.l} {m.branch}: {m.value:.12e} (x{m.multiplicity})" for m in modes]
    else:
        vals = analytic.cylinder_spectrum(args.T, args.k) if args.kind == "cylinder" else \
            list(analytic.segment_spectrum(args.L))
        rows = [(i, float(v)) for i, v in enumerate(vals)]
        cols = ("index", "eigenvalue")
        res.lines = [f"{v:.12e}" for v in vals]
    res.files["closedform.csv"] = csv_text(cols, rows, _config_of(args))
    return res


def cmd_roots(args) -> RunResult:
    T = analytic.find_T_star()
    R = analytic.find_R_star()
    res = RunResult()
    res.lines = [
        f"T* = {T:.12e}",
        f"R* = {R:.12e}",
        f"|R* - exp(-2T*)| = {abs(R - math.exp(-2 * T)):.3e}",
        f"crossover radius = {analytic.crossover_radius():.12e}",
    ]
    return res


def cmd_bounds(args) -> RunResult:
    prob = make_problem(args)
    sol = steklov_solve(prob.mesh, prob.weight, max(args.k, 8), method=args.method)
    report = analysis.check_bounds(prob.spec, sol, tol=args.tol)
    res = RunResult()
    cols = ("name", "source", "lhs", "relation", "rhs", "tol", "status", "applicable")
    res.files["bounds.csv"] = csv_text(cols, report.rows(), _config_of(args))
    res.lines = [f"{v.name} : {v.status}" + ("" if v.applicable else " (not applicable)")
                 for v in report.verdicts]
    res.code = EXIT_OK if report.all_hold else EXIT_VERDICT
    _dumps(args, prob, sol, res)
    return res


def cmd_nodal(args) -> RunResult:
    prob = make_problem(args)
    if not 0 <= args.mode < args.k:
        raise DomainError(f"mode must lie in [0, {args.k})")
    sol = steklov_solve(prob.mesh, prob.weight, args.k, method=args.method)
    curves = analysis.extract_nodal_set(prob.mesh, sol.vector(args.mode))
    verdict = analysis.nodal_summary(curves)
    if isinstance(prob.spec, (Annulus, OscAnnulus)):
        verdict += f" target=sqrt(r0)={math.sqrt(prob.spec.r0):.6f}"
    res = RunResult()
    res.files["nodal.txt"] = analysis.format_nodal_curves(curves)
    res.files["nodal_verdict.txt"] = verdict + "\n"
    res.lines = [f"sigma_{args.mode} = {sol.eigenvalues[args.mode]:.12e}", verdict]
    _dumps(args, prob, sol, res)
    return res


def cmd_sweep(args) -> RunResult:
    res = RunResult()
    if args.kind == "eps":
        if not args.eps_list or any(e < 0 for e in args.eps_list):
            raise DomainError("eps-list must hold non-negative amplitudes")
        r0 = args.r0 if args.r0 is not None else analysis.radial_first_radius(max(args.eps_list))
        Annulus(r0)
        for e in args.eps_list:
            if e > 0:
                oscillating_inner_boundary(r0, 1.0 / r0, e)
        nr = args.nr if args.nr is not None else OSC_RADIAL
        rows = analysis.oscillation_convergence_study(r0, args.eps_list, n_radial=nr, n_angular=args.na,
                                                      per_wave=args.per_wave, k=args.k)
        cols = analysis.StudyRow.columns
        res.lines = [f"eps={r.eps:g} sigma1={r.sigma1:.12e} rel_error={r.rel_error:.3e} {r.nodal}" for r in rows]
    else:
        if not args.aspects or any(t < 1 for t in args.aspects):
            raise DomainError("aspects must be >= 1")
        if not args.b > 0:
            raise DomainError("b must be positive")
        nr = args.nr if args.nr is not None else 64
        rows = analysis.ellipse_family_sweep(args.aspects, b=args.b, n_radial=nr, n_angular=args.na,
                                             refine=args.refine)
        cols = analysis.EllipseRow.columns
        res.lines = [f"a/b={r.a / r.b:g} sigma1={r.sigma1:.12e} gap={r.gap:.4f} class={r.sigma1_class}"
                     for r in rows]
    res.files["sweep.csv"] = csv_text(cols, [r.row() for r in rows], _config_of(args))
    return res


COMMANDS = {
    "spectrum": cmd_spectrum,
    "closed-form": cmd_closed_form,
    "bounds": cmd_bounds,
    "nodal": cmd_nodal,
    "sweep": cmd_sweep,
    "roots": cmd_roots,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except ConfigError as exc:
        print(f"steklov: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        res = COMMANDS[args.command](args)
    except (DomainError, MeshError) as exc:
        print(f"steklov: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"steklov: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out = Path(args.out)
    for name, text in res.files.items():
        atomic_write_text(out / name, text)
    for line in res.lines:
        print(line)
    return res.code


if __name__ == "__main__":
    sys.exit(main())
