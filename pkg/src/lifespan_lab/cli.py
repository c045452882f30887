"""Command line interface: ``lifespan-lab <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .errors import BlowupReached, InvalidArgument, NumericFailure, ResourceLimit, StepSizeFailure

log = logging.getLogger("lifespan_lab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class _ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _ConfigError(message)


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _lab_config(args):
    from .lab import LabConfig

    raw = {}
    if args.config:
        raw = LabConfig.load(args.config).raw
    over = {}
    if getattr(args, "u0", None) or getattr(args, "u1", None):
        over["data"] = {**raw.get("data", {}), **{k: v for k, v in (("u0", args.u0), ("u1", args.u1)) if v}}
    if getattr(args, "wavespeed", None):
        over["wavespeed"] = args.wavespeed
    if getattr(args, "form", None):
        over["form"] = args.form
    if getattr(args, "eps", None):
        over["epsilons"] = args.eps
    return LabConfig.from_dict({**raw, **over})


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump(path: Path, obj) -> None:
    from .lab import _encode

    path.write_text(json.dumps(_encode(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) for x in row])


# --- subcommands -----------------------------------------------------------------------

def cmd_radiation(args) -> int:
    from .radiation_field import radiation_field

    cfg = _lab_config(args)
    rf = radiation_field(cfg.u0, cfg.u1)
    out = _out(args)
    _csv(out / "radiation.csv", ["sigma", "F0", "F0p", "F0pp"],
         zip(rf.sigma_grid, rf.F0, rf.F0_prime, rf.F0_double_prime))
    summary = {k: rf.summary()[k] for k in ("M", "rho0", "tau0", "rho0_tilde", "nu0")}
    _dump(out / "radiation.json", summary)
    print(json.dumps(summary))
    return EXIT_OK


def cmd_profile(args) -> int:
    from .asymptotic_profile import characteristic_solution
    from .radiation_field import radiation_field

    cfg = _lab_config(args)
    rf = radiation_field(cfg.u0, cfg.u1)
    sol = characteristic_solution(rf, args.variant)
    out = _out(args)
    sigma = np.linspace(args.sigma_min, rf.M, args.points)
    rows = []
    for tau in args.tau:
        if sol.blowup is not None and tau >= sol.blowup.tau_star:
            raise InvalidArgument(f"tau = {tau} is at or past the blowup time {sol.blowup.tau_star}")
        V, W = sol.V(tau, sigma), sol.W(tau, sigma)
        rows.extend(zip(np.full_like(sigma, tau), sigma, V, W))
    _csv(out / "profile.csv", ["tau", "sigma", "V", "W"], rows)
    summary = {"variant": sol.variant.value,
               "tau_star": sol.blowup.tau_star if sol.blowup else math.inf,
               "sigma_star": sol.blowup.sigma_star if sol.blowup else math.nan}
    _dump(out / "profile.json", summary)
    print(json.dumps({k: (v if not isinstance(v, float) or math.isfinite(v) else str(v)) for k, v in summary.items()}))
    return EXIT_OK


def cmd_approx(args) -> int:
    from .approx_solution import build_ua, residual_integral
    from .radiation_field import radiation_field

    cfg = _lab_config(args)
    case = cfg.case
    rf = radiation_field(cfg.u0, cfg.u1)
    horizon = rf.nu0 if case.value == "case_II" else rf.tau0
    eps_list = cfg.epsilons or [0.1]
    out = _out(args)
    results = []
    for eps in eps_list:
        ua = build_ua(case, eps, args.b_frac * horizon, cfg.u0, cfg.u1, cfg.wavespeed, rf=rf)
        ri = residual_integral(ua, method=args.method)
        _csv(out / f"approx_eps{eps:g}.csv", ["t", "residual_norm"], zip(ri.t, ri.norm))
        results.append((eps, ri.integral))
    exponent = None
    if len(results) >= 2:
        x = np.log([e for e, _ in results])
        y = np.log([v for _, v in results])
        exponent = float(np.polyfit(x, y, 1)[0])
    summary = {"epsilon": [e for e, _ in results], "case": case.value,
               "integral": [v for _, v in results], "fitted_exponent": exponent}
    if len(results) == 1:
        summary["epsilon"], summary["integral"] = results[0]
    _dump(out / "approx.json", summary)
    print(json.dumps(summary))
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .pde_solver import run

    cfg = _lab_config(args)
    eps_list = cfg.epsilons
    if len(eps_list) != 1:
        raise InvalidArgument("simulate needs exactly one eps (--eps or epsilons in the config)")
    extra = {}
    if args.record or args.snapshots:
        extra["record_interval"] = args.record_interval
    if args.t_max:
        raw = dict(cfg.raw)
        raw["budgets"] = {**raw["budgets"], "t_max": args.t_max}
        cfg = type(cfg).from_dict(raw)
    sim = cfg.sim_config(eps_list[0], args.dr, **extra)
    rep = run(sim)
    out = _out(args)
    manifest = {**rep.manifest(), "seed": args.seed, "config": sim.identity()}
    _dump(out / "manifest.json", manifest)
    if rep.record is not None:
        if args.record:
            rep.record.save(out / "record.bin")
        for ts in args.snapshots or []:
            k = int(np.argmin(np.abs(np.asarray(rep.record.t) - ts)))
            r = rep.record.r0[k] + rep.record.dr * np.arange(len(rep.record.u[k]))
            _csv(out / f"snapshot_t{rep.record.t[k]:g}.csv", ["r", "u", "p", "q"],
                 zip(r, rep.record.u[k], rep.record.p[k], rep.record.q[k]))
    print(json.dumps({"outcome": rep.outcome.value, "T_eps": rep.T_eps if math.isfinite(rep.T_eps) else None,
                      "config_hash": rep.config_hash}))
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .lab import report, sweep

    cfg = _lab_config(args)

    def progress(row):
        status = "censored" if row.censored else f"T = {row.T:.6g}, scaled = {row.scaled:.6g}"
        log.info("eps = %g: %s", row.eps, status)

    rep = sweep(cfg, threads=args.threads, progress=progress)
    report(rep, _out(args))
    _print_report(rep)
    return EXIT_OK


def _print_report(rep) -> None:
    print(f"case {rep.case}, prediction {rep.target!r}")
    print("eps,T,scaled,dr,converged,censored")
    for r in rep.rows:
        print(f"{r.eps:g},{r.T},{r.scaled},{r.dr:g},{r.converged},{r.censored}")
    if rep.extrapolation:
        e = rep.extrapolation
        unc = "n/a" if e["uncertainty"] is None else f"{e['uncertainty']:.2g}"
        print(f"extrapolated limit {e['limit']:.6g} +- {unc} (fit residual {e['residual']:.2g})")


def cmd_riccati(args) -> int:
    from .riccati import CoefficientTrack, hormander_bound, integrate_riccati

    track = CoefficientTrack.from_csv(args.track)
    if np.any(track.a0 < 0):
        track, w = track.flipped(), -args.w_start
        if np.any(track.a0 < 0):
            raise InvalidArgument("a0 changes sign along the track")
    else:
        w = args.w_start
    bound = hormander_bound(track, w)
    sol = integrate_riccati(track, w)
    result = {"K": bound.K, "bound": bound.upper_bound_T, "oracle_blowup": sol.blowup_time,
              "reason": bound.reason}
    print(json.dumps(result))
    if args.out:
        _dump(_out(args) / "riccati.json", result)
    return EXIT_OK


def cmd_report(args) -> int:
    from .lab import load_report, report

    rep = load_report(args.source)
    if args.out:
        report(rep, _out(args))
    _print_report(rep)
    return EXIT_OK


# --- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config {data, wavespeed, form, epsilons, grid, budgets}")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="seed recorded in manifests")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("-v", "--verbose", action="store_true")
    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--u0", help="profile preset, e.g. zero or bump:M=1,amp=1")
    data.add_argument("--u1", help="profile preset, e.g. poly:M=1,power=3,amp=1")
    data.add_argument("--wavespeed", help="1+u, 1+u^2, exp, lc:alpha=1,beta=2, ...")
    data.add_argument("--form", choices=["divergence", "variational"])
    data.add_argument("--eps", type=_floats, help="comma-separated eps values")

    p = _Parser(prog="lifespan-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("radiation", parents=[common, data], help="radiation field F0 and constants")
    s.set_defaults(func=cmd_radiation)

    s = sub.add_parser("profile", parents=[common, data], help="asymptotic profile slices")
    s.add_argument("--variant", default="div_I", choices=["div_I", "div_II", "var_I", "var_II"])
    s.add_argument("--tau", type=_floats, default=[0.0, 1.0])
    s.add_argument("--sigma-min", type=float, default=-20.0)
    s.add_argument("--points", type=int, default=2001)
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("approx", parents=[common, data], help="approximate-solution residuals")
    s.add_argument("--b-frac", type=float, default=0.6, help="horizon b as a fraction of tau0 (nu0)")
    s.add_argument("--method", default="analytic", choices=["analytic", "fd"])
    s.set_defaults(func=cmd_approx)

    s = sub.add_parser("simulate", parents=[common, data], help="one full PDE run")
    s.add_argument("--dr", type=float)
    s.add_argument("--t-max", type=float)
    s.add_argument("--record", action="store_true", help="write the space-time record")
    s.add_argument("--record-interval", type=float, default=0.5)
    s.add_argument("--snapshots", type=_floats, help="times for CSV snapshots (r, u, p, q)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", parents=[common, data], help="eps sweep with scaling report")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("riccati", parents=[common], help="Hormander bound and ODE oracle for a track")
    s.add_argument("--track", required=True, help="CSV with columns t, a0, a1, a2")
    s.add_argument("--w-start", type=float, required=True)
    s.set_defaults(func=cmd_riccati, out=None)

    s = sub.add_parser("report", parents=[common], help="reload a sweep and re-emit its files")
    s.add_argument("source", help="directory holding summary.json")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _ConfigError as exc:
        print(f"lifespan-lab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InvalidArgument, ValueError, KeyError, OSError) as exc:
        print(f"lifespan-lab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, ResourceLimit, BlowupReached, StepSizeFailure, FloatingPointError,
            ArithmeticError) as exc:
        print(f"lifespan-lab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
