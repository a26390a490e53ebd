"""Command-line front end for spectra, transforms, fits and verification.

Commands
--------
spectrum   solve a boundary pair and write truncated spectral data as JSON
transform  apply the slope-to-potential map and write the potential CSV
invert     recover a slope from a potential CSV (Newton with continuation)
verify     run the estimate/equivalence/identity battery, write a report
fit        reconstruct a potential or slope from spectral targets
export     re-emit spectral JSON or solution traces as plot-ready CSV

All outputs are deterministic: identical inputs (and seed) produce
byte-identical files.  Problem descriptions come either from CSV files or
inline: ``zero`` or ``fourier:[c1,c2,...]`` (sine modes for slopes, cosine
modes for potentials, both orthonormal).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .errors import (BracketError, ConditionError, DegenerateEigenfunctionError,
                     FitError, IntegrationError, InversionError,
                     PoleCollisionError, RangeError, TargetError)
from .grid import GridFunction, l2_norm, resample
from .inverse import (FitTarget, InversionConfig, fit_impedance_detailed,
                      fit_potential_detailed, invert_transform_detailed)
from .ode import INF, ImpedanceProblem, SchrodingerProblem, shoot_forward
from .serialize import (atomic_write_text, condition_from_dict, dump_json,
                        json_text, load_json, read_grid_csv, spectral_from_dict,
                        spectral_to_dict, target_from_dict, write_grid_csv)
from .spectral import (SolverOptions, characterize, equivalence_report,
                       hadamard_wronskian, identity_ab, identity_b,
                       normalizing_constants, regime_of, solve_spectrum,
                       unperturbed_eigenvalues)
from .transform import (ConditionU, DecayTerm, Impedance, Potential,
                        estimate_suite, forward_transform, frechet_apply)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_SOLVER = 3
EXIT_INVERSION = 4
EXIT_VERIFY = 5
EXIT_FIT = 6

_SOLVER_ERRORS = (BracketError, ConditionError, DegenerateEigenfunctionError,
                  IntegrationError, PoleCollisionError, RangeError)


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters shared by every command."""

    command: str
    out: str | None
    grid: int
    N: int
    tol: float
    seed: int
    jobs: int

    def __post_init__(self):
        n = self.grid
        if n < 256 or n > 16384 or (n & (n - 1)) != 0:
            raise ValueError(
                f"grid size must be a power of two in [256, 16384], got {n}")
        if not (1 <= self.N <= 64):
            raise ValueError(f"N must lie in [1, 64], got {self.N}")
        if self.tol <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")


def _default_jobs() -> int:
    raw = os.environ.get("LIOUVILLE_SPEC_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _run_config(args) -> RunConfig:
    return RunConfig(command=args.command, out=getattr(args, "out", None),
                     grid=args.grid, N=getattr(args, "N", 10), tol=args.tol,
                     seed=getattr(args, "seed", 0), jobs=args.jobs)


def _parse_series(text: str) -> np.ndarray:
    coeffs = json.loads(text)
    if not isinstance(coeffs, list) or not coeffs:
        raise ValueError("fourier coefficients must be a non-empty list")
    return np.asarray([float(c) for c in coeffs])


def _grid_values(spec: str, n: int, trig: str) -> GridFunction:
    """Grid function from ``zero``, ``fourier:[...]`` or a CSV path."""
    if spec == "zero":
        return GridFunction(np.zeros(n + 1))
    if spec.startswith("fourier:"):
        coeffs = _parse_series(spec[len("fourier:"):])
        x = np.linspace(0.0, 1.0, n + 1)
        k = np.arange(1, coeffs.size + 1)[:, None]
        wave = np.sin if trig == "sine" else np.cos
        return GridFunction(coeffs @ (math.sqrt(2.0) * wave(math.pi * k * x)))
    f = read_grid_csv(spec)
    if f.n != n:
        f = resample(f, n)
    return f


def _load_q(spec: str, n: int) -> Impedance:
    return Impedance(_grid_values(spec, n, "sine"))


def _load_p(spec: str, n: int) -> Potential:
    return Potential(_grid_values(spec, n, "cos"))


def _load_u(spec: str) -> ConditionU:
    if spec == "zero":
        return ConditionU.zero()
    if spec.startswith("exp:"):
        amp, rate = (float(v) for v in spec[4:].split(","))
        return ConditionU(u2=DecayTerm(kind="exp", E=amp, beta=rate))
    if spec.startswith("poly:"):
        coeffs = tuple(float(c) for c in json.loads(spec[5:]))
        return ConditionU(u2=DecayTerm(kind="poly", coeffs=coeffs))
    return condition_from_dict(load_json(spec))


def _boundary(args) -> tuple:
    a = getattr(args, "a", None)
    b = getattr(args, "b", None)
    bc = getattr(args, "bc", None)
    if bc == "dirichlet":
        if a is not None or b is not None:
            raise ValueError("dirichlet takes no --a/--b values")
        return INF, INF
    if bc == "mixed":
        if b is None:
            raise ValueError("mixed boundary needs --b")
        if a is not None:
            raise ValueError("mixed boundary keeps the left end Dirichlet")
        return INF, float(b)
    if bc == "generic":
        if a is None or b is None:
            raise ValueError("generic boundary needs --a and --b")
        return float(a), float(b)
    return (INF if a is None else float(a), INF if b is None else float(b))


def _problem(args, cfg: RunConfig):
    """Impedance or normal-form problem from --q/--p flags."""
    q_spec = getattr(args, "q", None)
    p_spec = getattr(args, "p", None)
    if (q_spec is None) == (p_spec is None):
        raise ValueError("give exactly one of --q or --p")
    if q_spec is not None:
        ucfg = _load_u(getattr(args, "u", "zero") or "zero")
        return ImpedanceProblem(_load_q(q_spec, cfg.grid), ucfg)
    return SchrodingerProblem(_load_p(p_spec, cfg.grid))


def _write_series_csv(path: str, labels, values) -> None:
    rows = ["n,value"]
    rows.extend(f"{int(n)},{v:.17g}" for n, v in zip(labels, values))
    atomic_write_text(path, "\n".join(rows) + "\n")


def _slot_labels(regime: str, N: int) -> np.ndarray:
    return np.arange(N) + (1 if regime == "dirichlet" else 0)


def cmd_spectrum(args, cfg: RunConfig) -> int:
    prob = _problem(args, cfg)
    a, b = _boundary(args)
    data = solve_spectrum(prob, a, b, cfg.N, SolverOptions())
    dump_json(spectral_to_dict(data), cfg.out)
    if args.emit_plot:
        _write_series_csv(args.emit_plot,
                          _slot_labels(data.regime, data.N), data.eigenvalues)
    print(f"wrote {cfg.out} ({data.regime}, N={data.N})")
    return EXIT_OK


def cmd_transform(args, cfg: RunConfig) -> int:
    ucfg = _load_u(args.u or "zero")
    q = _load_q(args.q, cfg.grid)
    p = forward_transform(q, ucfg)
    write_grid_csv(cfg.out, p.f)
    if args.emit_plot:
        write_grid_csv(args.emit_plot, p.f)
    print(f"wrote {cfg.out} (|p| = {l2_norm(p.f):.6g})")
    return EXIT_OK


def cmd_invert(args, cfg: RunConfig) -> int:
    ucfg = _load_u(args.u or "zero")
    p = _load_p(args.p, cfg.grid)
    icfg = InversionConfig(basis_size=args.basis, tol=cfg.tol, jobs=cfg.jobs)
    try:
        report = invert_transform_detailed(p, ucfg, icfg)
    except InversionError as exc:
        if args.report:
            dump_json({"converged": False, "error": str(exc),
                       "residuals": [float(r) for r in exc.residuals]},
                      args.report)
        print(f"inversion failed: {exc}", file=sys.stderr)
        return EXIT_INVERSION
    write_grid_csv(cfg.out, report.q.f)
    if args.report:
        dump_json({"converged": True, "used_homotopy": report.used_homotopy,
                   "iterations": report.iterations,
                   "full_residual": float(report.full_residual),
                   "residuals": [float(r) for r in report.residuals]},
                  args.report)
    if args.emit_plot:
        write_grid_csv(args.emit_plot, report.q.f)
    print(f"wrote {cfg.out} (iterations={report.iterations}, "
          f"homotopy={report.used_homotopy})")
    return EXIT_OK


def _fit_target(args) -> FitTarget:
    if args.target:
        return target_from_dict(load_json(args.target))
    data = spectral_from_dict(load_json(args.data))
    return FitTarget.from_spectral_data(data, regime=args.regime or None)


def cmd_fit(args, cfg: RunConfig) -> int:
    icfg = InversionConfig(basis_size=args.basis, tol=cfg.tol,
                           fit_grid=cfg.grid, jobs=cfg.jobs)
    try:
        target = _fit_target(args)
        if args.impedance:
            ucfg = _load_u(args.u or "zero")
            rep = fit_impedance_detailed(target, ucfg, icfg)
            result = rep.q.f
            report = {"converged": True, "kind": "impedance",
                      "fit_residuals": [float(r) for r in rep.fit.residuals],
                      "fit_iterations": rep.fit.iterations,
                      "inversion_residuals":
                          [float(r) for r in rep.inversion.residuals],
                      "used_homotopy": rep.inversion.used_homotopy}
        else:
            rep = fit_potential_detailed(target, icfg)
            result = rep.potential.f
            report = {"converged": True, "kind": "potential",
                      "fit_residuals": [float(r) for r in rep.residuals],
                      "fit_iterations": rep.iterations}
    except (FitError, TargetError) as exc:
        if args.report:
            residuals = [float(r) for r in getattr(exc, "residuals", [])]
            dump_json({"converged": False, "error": str(exc),
                       "fit_residuals": residuals}, args.report)
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except InversionError as exc:
        if args.report:
            dump_json({"converged": False, "error": str(exc),
                       "inversion_residuals":
                           [float(r) for r in exc.residuals]}, args.report)
        print(f"fit inversion stage failed: {exc}", file=sys.stderr)
        return EXIT_INVERSION
    write_grid_csv(cfg.out, result)
    if args.report:
        dump_json(report, args.report)
    if args.emit_plot:
        write_grid_csv(args.emit_plot, result)
    print(f"wrote {cfg.out} ({report['kind']} fit, "
          f"{report['fit_iterations']} iterations)")
    return EXIT_OK


def _check(name: str, margin: float, passed: bool) -> dict:
    return {"name": name, "margin": float(margin), "passed": bool(passed)}


def _verify_battery(args, cfg: RunConfig) -> list:
    ucfg = _load_u(args.u or "zero")
    q = _load_q(args.q or "zero", cfg.grid)
    a, b = _boundary(args)
    checks = []

    est = estimate_suite(q, ucfg)
    for row in est.rows:
        checks.append(_check(f"estimate:{row.name}", row.margin,
                             row.satisfied))

    eq = equivalence_report(q, ucfg, a, b, cfg.N)
    checks.append(_check("equivalence:eigenvalues",
                         eq.eigenvalue_discrepancy,
                         eq.eigenvalue_discrepancy <= 1e-6))
    checks.append(_check("equivalence:norming", eq.norming_discrepancy,
                         eq.norming_discrepancy <= 1e-6))

    prob = ImpedanceProblem(q, ucfg)
    data = solve_spectrum(prob, a, b, cfg.N, SolverOptions())
    alphas = normalizing_constants(prob, data) \
        if data.regime == "dirichlet" else None
    adm = characterize(data, normalizing=alphas)
    checks.append(_check("admissibility:ordering",
                         0.0 if adm.ordering_ok else 1.0, adm.ordering_ok))
    checks.append(_check("admissibility:remainder_tail", adm.remainder_growth,
                         adm.remainder_tail_ok))
    checks.append(_check("admissibility:norming_tail", adm.norming_growth,
                         adm.norming_tail_ok))
    if alphas is not None:
        checks.append(_check("admissibility:normalizing_tail",
                             adm.alpha_growth, adm.alpha_tail_ok))

    # Product-formula consistency: the truncated product must approach the
    # directly integrated characteristic function as the ladder grows.  Both
    # probe points sit below the shorter ladder's coverage, where adding
    # factors only appends shrinking far-slot corrections.
    gaps = unperturbed_eigenvalues(data.regime, cfg.N + 1)
    probe_points = [-4.0, gaps[1] + 0.37 * (gaps[2] - gaps[1])]
    worst_ratio, monotone = 0.0, True
    for lam in probe_points:
        direct = _direct_w(prob, lam, a, b)
        half = abs(hadamard_wronskian(data, lam, max(1, cfg.N // 2)) - direct)
        full = abs(hadamard_wronskian(data, lam, cfg.N) - direct)
        scale = max(abs(direct), 1e-30)
        worst_ratio = max(worst_ratio, full / scale)
        if full > half + 1e-12 * scale:
            monotone = False
    checks.append(_check("product:refines", worst_ratio, monotone))

    if data.regime == "mixed":
        sums = identity_b(prob, data, cfg.N)
        mid = abs(sums[cfg.N // 2] - b)
        final = abs(sums[-1] - b)
        checks.append(_check("identity:b", final,
                             final <= mid + 1e-12 * max(1.0, abs(b))))
    elif data.regime == "generic":
        sums_b, sums_a = identity_ab(prob, data, cfg.N)
        err = max(abs(sums_b[-1] - b), abs(sums_a[-1] - a))
        mid = max(abs(sums_b[cfg.N // 2] - b), abs(sums_a[cfg.N // 2] - a))
        checks.append(_check("identity:ab", err,
                             err <= mid + 1e-12 * max(1.0, abs(a), abs(b))))

    checks.append(_frechet_spot_check(q, ucfg, cfg.seed))

    if args.data:
        ext = spectral_from_dict(load_json(args.data))
        ext_adm = characterize(ext)
        checks.append(_check("file:ordering",
                             0.0 if ext_adm.ordering_ok else 1.0,
                             ext_adm.ordering_ok))
        checks.append(_check("file:remainder_tail", ext_adm.remainder_growth,
                             ext_adm.remainder_tail_ok))
        checks.append(_check("file:norming_tail", ext_adm.norming_growth,
                             ext_adm.norming_tail_ok))
    return checks


def _direct_w(prob, lam: float, a: float, b: float) -> float:
    from .ode import wronskian
    return float(wronskian(prob, lam, a, b))


def _frechet_spot_check(q: Impedance, ucfg: ConditionU, seed: int) -> dict:
    """Directional derivative of the forward map against central differences."""
    rng = np.random.default_rng(seed)
    n = q.f.n
    x = np.linspace(0.0, 1.0, n + 1)
    worst = 0.0
    delta = 1e-6
    for _ in range(3):
        coeffs = rng.normal(size=4)
        k = np.arange(1, 5)[:, None]
        d = GridFunction(coeffs @ np.sin(math.pi * k * x))
        plus = Impedance(GridFunction(q.f.values + delta * d.values))
        minus = Impedance(GridFunction(q.f.values - delta * d.values))
        fd = (forward_transform(plus, ucfg).f - forward_transform(minus, ucfg).f) \
            * (0.5 / delta)
        exact = frechet_apply(q, ucfg, d)
        err = l2_norm(fd - exact) / max(l2_norm(exact), 1.0)
        worst = max(worst, err)
    return _check("frechet:consistency", worst, worst <= 1e-4)


def cmd_verify(args, cfg: RunConfig) -> int:
    checks = _verify_battery(args, cfg)
    all_passed = all(c["passed"] for c in checks)
    report = {"checks": checks, "all_passed": all_passed, "seed": cfg.seed,
              "N": cfg.N, "grid": cfg.grid}
    out = cfg.out or "verify-report.json"
    dump_json(report, out)
    for c in checks:
        state = "pass" if c["passed"] else "FAIL"
        print(f"{state}  {c['name']}  margin={c['margin']:.3e}")
    print(f"wrote {out}")
    return EXIT_OK if all_passed else EXIT_VERIFY


def cmd_export(args, cfg: RunConfig) -> int:
    wrote = []
    if args.data:
        data = spectral_from_dict(load_json(args.data))
        labels = _slot_labels(data.regime, data.N)
        for name, values in (("eigenvalues", data.eigenvalues),
                             ("norming", data.norming),
                             ("remainders", data.remainders.entries)):
            path = f"{args.prefix}_{name}.csv"
            _write_series_csv(path, labels, values)
            wrote.append(path)
    if args.q or args.p:
        if args.lam is None:
            raise ValueError("trace export needs --lam")
        prob = _problem(args, cfg)
        trace = shoot_forward(prob, args.lam)
        path = f"{args.prefix}_trace.csv"
        write_grid_csv(path, trace.y)
        wrote.append(path)
    if not wrote:
        raise ValueError("nothing to export: give --data and/or --q/--p")
    print("wrote " + ", ".join(wrote))
    return EXIT_OK


def _add_common(sub, *, out_required=True, with_N=True):
    sub.add_argument("--grid", type=int, default=2048,
                     help="grid cells, power of two in [256, 16384]")
    if with_N:
        sub.add_argument("--N", type=int, default=10,
                         help="number of eigenvalues (1..64)")
    sub.add_argument("--tol", type=float, default=1e-9,
                     help="iteration tolerance")
    sub.add_argument("--jobs", type=int, default=_default_jobs(),
                     help="worker threads (default $LIOUVILLE_SPEC_JOBS or 1)")
    sub.add_argument("--seed", type=int, default=0,
                     help="seed for randomized checks")
    sub.add_argument("--out", required=out_required, help="output path")
    sub.add_argument("--emit-plot", default=None,
                     help="also write plot-ready CSV here")


def _add_boundary(sub):
    sub.add_argument("--bc", choices=["dirichlet", "mixed", "generic"],
                     default=None)
    sub.add_argument("--a", type=float, default=None,
                     help="left boundary parameter (omit for Dirichlet)")
    sub.add_argument("--b", type=float, default=None,
                     help="right boundary parameter (omit for Dirichlet)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liouville",
        description="Impedance-form spectra, the slope-to-potential "
                    "transform, and desk-scale inverse problems on [0,1].")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("spectrum", help="solve one boundary pair")
    sp.add_argument("--q", help="slope: zero | fourier:[...] | file.csv")
    sp.add_argument("--p", help="potential: zero | fourier:[...] | file.csv")
    sp.add_argument("--u", default="zero",
                    help="perturbation: zero | exp:E,beta | poly:[...] | file.json")
    _add_boundary(sp)
    _add_common(sp)
    sp.set_defaults(func=cmd_spectrum)

    tr = subs.add_parser("transform", help="apply the forward map")
    tr.add_argument("--q", required=True)
    tr.add_argument("--u", default="zero")
    _add_common(tr, with_N=False)
    tr.set_defaults(func=cmd_transform, N=10)

    inv = subs.add_parser("invert", help="invert the forward map")
    inv.add_argument("--p", required=True)
    inv.add_argument("--u", default="zero")
    inv.add_argument("--basis", type=int, default=16,
                     help="Galerkin dimension of the inversion")
    inv.add_argument("--report", default=None,
                     help="write iteration report JSON here")
    _add_common(inv, with_N=False)
    inv.set_defaults(func=cmd_invert, N=10)

    ver = subs.add_parser("verify", help="run the verification battery")
    ver.add_argument("--q", default="zero")
    ver.add_argument("--u", default="zero")
    ver.add_argument("--data", default=None,
                     help="also characterize this spectral JSON file")
    _add_boundary(ver)
    _add_common(ver, out_required=False)
    ver.set_defaults(func=cmd_verify)

    fit = subs.add_parser("fit", help="fit to spectral targets")
    fit.add_argument("--target", default=None, help="fit-target JSON")
    fit.add_argument("--data", default=None, help="spectral-data JSON")
    fit.add_argument("--regime", default=None,
                     help="override target regime (e.g. symmetric-dirichlet)")
    fit.add_argument("--impedance", action="store_true",
                     help="recover the slope, not just the potential")
    fit.add_argument("--u", default="zero")
    fit.add_argument("--basis", type=int, default=16)
    fit.add_argument("--report", default=None)
    _add_common(fit, with_N=False)
    fit.set_defaults(func=cmd_fit, N=10)

    ex = subs.add_parser("export", help="re-emit results as plot CSV")
    ex.add_argument("--data", default=None, help="spectral-data JSON")
    ex.add_argument("--q", default=None)
    ex.add_argument("--p", default=None)
    ex.add_argument("--u", default="zero")
    ex.add_argument("--lam", type=float, default=None,
                    help="spectral parameter for trace export")
    ex.add_argument("--prefix", required=True, help="output path prefix")
    _add_common(ex, out_required=False, with_N=False)
    ex.set_defaults(func=cmd_export, N=10)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = _run_config(args)
        if args.command == "fit" and not (args.target or args.data):
            raise ValueError("fit needs --target or --data")
        return args.func(args, cfg)
    except InversionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVERSION
    except (FitError, TargetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except _SOLVER_ERRORS as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, KeyError, TypeError, OSError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
