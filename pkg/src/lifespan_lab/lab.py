"""Experiment harness: JSON configs, epsilon sweeps, scaling reports and plot data.

Config schema (unknown keys are rejected at every level):

    {"data":      {"u0": "zero", "u1": "poly:M=1,power=3,amp=1"},
     "wavespeed": "1+u",
     "form":      "divergence",
     "epsilons":  [0.2, 0.1],
     "grid":      {"dr": 0.02, "cfl": 0.4, "window_width": 16.0, "refinement": "affordable"},
     "budgets":   {"t_max": 1e4, "refine_work": 2e8, "converged_tol": 0.02}}
"""
from __future__ import annotations

import concurrent.futures as cf
import copy
import csv
import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .asymptotic_profile import profile_blowup_time
from .errors import InvalidArgument
from .pde_solver import EquationForm, Outcome, SimConfig, run
from .radial_profiles import CaseTag, classify_wavespeed, parse_profile, parse_wavespeed
from .radiation_field import lifespan_constants, radiation_field

DEFAULTS = {
    "data": {"u0": "zero", "u1": "poly:M=1,power=3,amp=1"},
    "wavespeed": "1+u",
    "form": "divergence",
    "epsilons": [],
    "grid": {"dr": 0.02, "cfl": 0.4, "window_width": 16.0, "refinement": "affordable"},
    "budgets": {"t_max": 1e4, "refine_work": 2e8, "converged_tol": 0.02},
}
REFINEMENT_POLICIES = ("none", "affordable", "all")
CASE_II_MIN_EPS = 0.35
CSV_COLUMNS = ("eps", "T", "scaled", "dr", "converged", "censored", "config_hash")
SERIES_POINTS = 400


# --- configuration ---------------------------------------------------------------------

def _merge(defaults: dict, given: dict, where: str) -> dict:
    unknown = set(given) - set(defaults)
    if unknown:
        raise InvalidArgument(f"unknown config keys in {where}: {sorted(unknown)}")
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(defaults[k], dict):
            if not isinstance(v, dict):
                raise InvalidArgument(f"{where}.{k} must be an object")
            out[k] = _merge(defaults[k], v, f"{where}.{k}")
        else:
            out[k] = v
    return out


@dataclass(frozen=True)
class LabConfig:
    raw: dict

    @classmethod
    def from_dict(cls, d: dict) -> "LabConfig":
        if not isinstance(d, dict):
            raise InvalidArgument("config must be a JSON object")
        raw = _merge(DEFAULTS, d, "config")
        cfg = cls(raw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "LabConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InvalidArgument(f"cannot read config {path}: {exc}") from exc
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"{path}: invalid JSON ({exc})") from exc

    def validate(self) -> None:
        self.u0, self.u1, self.wavespeed  # parse eagerly
        if self.form not in {f.value for f in EquationForm}:
            raise InvalidArgument(f"form must be one of {[f.value for f in EquationForm]}")
        eps = self.epsilons
        if any(not isinstance(e, (int, float)) or not e > 0 for e in eps):
            raise InvalidArgument("epsilons must be positive numbers")
        g, b = self.raw["grid"], self.raw["budgets"]
        if g["refinement"] not in REFINEMENT_POLICIES:
            raise InvalidArgument(f"grid.refinement must be one of {REFINEMENT_POLICIES}")
        for key in ("dr", "cfl", "window_width"):
            if not g[key] > 0:
                raise InvalidArgument(f"grid.{key} must be positive")
        for key in ("t_max", "refine_work", "converged_tol"):
            if not b[key] > 0:
                raise InvalidArgument(f"budgets.{key} must be positive")
        if self.case is CaseTag.CASE_II and any(e < CASE_II_MIN_EPS for e in eps):
            raise InvalidArgument(f"case II sweeps are limited to eps >= {CASE_II_MIN_EPS}")

    @property
    def u0(self):
        return parse_profile(self.raw["data"]["u0"])

    @property
    def u1(self):
        return parse_profile(self.raw["data"]["u1"])

    @property
    def wavespeed(self):
        return parse_wavespeed(self.raw["wavespeed"])

    @property
    def form(self) -> str:
        return self.raw["form"]

    @property
    def epsilons(self) -> list:
        return list(self.raw["epsilons"])

    @property
    def case(self) -> CaseTag:
        return classify_wavespeed(self.wavespeed)

    def canonical(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def with_epsilons(self, eps) -> "LabConfig":
        raw = copy.deepcopy(self.raw)
        raw["epsilons"] = list(eps)
        return LabConfig.from_dict(raw)

    def sim_config(self, eps: float, dr: Optional[float] = None, **extra) -> SimConfig:
        g = self.raw["grid"]
        return SimConfig(eps=float(eps), wavespeed=self.wavespeed, u0=self.u0, u1=self.u1, form=self.form,
                         dr=float(dr or g["dr"]), cfl=float(g["cfl"]), window_width=float(g["window_width"]),
                         t_max=float(self.raw["budgets"]["t_max"]), **extra)


# --- predictions -----------------------------------------------------------------------

def predict(u0, u1, var_II: bool = False) -> dict:
    """tau0, nu0, rho0, rho0_tilde and the blowup constant of each profile variant."""
    rf = radiation_field(u0, u1)
    tau0, nu0 = lifespan_constants(rf)
    inf = math.inf
    if rf.is_trivial:
        return {"tau0": inf, "nu0": inf, "rho0": inf, "rho0_tilde": inf,
                "variants": {"div_I": inf, "var_I": inf, "div_II": inf, "var_II": inf}}
    variants = {"div_I": tau0, "var_I": profile_blowup_time(rf, "var_I"), "div_II": nu0,
                "var_II": profile_blowup_time(rf, "var_II") if var_II else None}
    return {"tau0": tau0, "nu0": nu0, "rho0": rf.rho0, "rho0_tilde": rf.rho0_tilde, "variants": variants}


def scaled_lifespan(case: CaseTag, eps: float, T: float) -> float:
    """eps sqrt(T) (case I) or eps^2 ln T (case II)."""
    if CaseTag(case) is CaseTag.CASE_II:
        return eps * eps * math.log(T)
    return eps * math.sqrt(T)


def _estimated_lifespan(case: CaseTag, eps: float, prediction: dict) -> float:
    if case is CaseTag.CASE_II:
        x = prediction["nu0"] / eps ** 2
        return math.exp(min(x, 700.0))
    return (prediction["tau0"] / eps) ** 2


# --- reports ---------------------------------------------------------------------------

@dataclass
class ScalingRow:
    eps: float
    T: Optional[float]
    scaled: Optional[float]
    dr: float
    converged: Optional[bool]
    censored: bool
    config_hash: str
    fit: dict = field(default_factory=dict)
    refined: dict = field(default_factory=dict)
    clock: list = field(default_factory=list)
    inv_w1: list = field(default_factory=list)


@dataclass
class ScalingReport:
    case: str
    rows: list
    prediction: dict
    extrapolation: Optional[dict]
    config: dict
    config_hash: str

    @property
    def target(self) -> float:
        return self.prediction["nu0" if self.case == CaseTag.CASE_II.value else "tau0"]


def extrapolate(rows: list, n: int = 3) -> Optional[dict]:
    """Fit scaled = limit + k eps^(1/2) through the n smallest uncensored eps."""
    pts = sorted((r.eps, r.scaled) for r in rows if not r.censored and r.scaled is not None)[:n]
    if len(pts) < 2:
        return None
    x = np.sqrt([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = len(pts) - 2
    err = None
    if dof > 0:
        s2 = float(resid @ resid) / dof
        err = math.sqrt(s2 * float(np.linalg.inv(A.T @ A)[0, 0]))
    return {"limit": float(coef[0]), "k": float(coef[1]), "uncertainty": err,
            "residual": float(np.sqrt(np.mean(resid ** 2))), "eps": [p[0] for p in pts]}


def _thin(x: np.ndarray, y: np.ndarray, n: int = SERIES_POINTS):
    if x.size <= n:
        return x, y
    idx = np.unique(np.linspace(0, x.size - 1, n).round().astype(int))
    return x[idx], y[idx]


def run_row(cfg: LabConfig, eps: float, refine: bool) -> ScalingRow:
    """One sweep row: the run at the base grid, plus the halved grid when refine is set."""
    sim = cfg.sim_config(eps)
    rep = run(sim)
    censored = rep.outcome is not Outcome.BLOWUP
    T = None if censored else float(rep.T_eps)
    scaled = None if censored else scaled_lifespan(sim.case_tag, eps, T)
    s = rep.series
    w = np.asarray(s["max_w1"])
    ok = w > 0
    clock, inv = _thin(np.asarray(sim.clock(np.asarray(s["t"])[ok])), 1.0 / w[ok])
    converged, refined = None, {}
    if refine:
        fine = run(cfg.sim_config(eps, sim.dr / 2.0))
        T_fine = float(fine.T_eps) if fine.outcome is Outcome.BLOWUP else None
        refined = {"dr": sim.dr / 2.0, "T": T_fine, "config_hash": fine.config_hash}
        if T is not None and T_fine is not None:
            converged = abs(T - T_fine) / T_fine <= cfg.raw["budgets"]["converged_tol"]
        else:
            converged = False
    fit = {k: (v if not isinstance(v, float) or math.isfinite(v) else None) for k, v in rep.fit.items()}
    return ScalingRow(float(eps), T, scaled, sim.dr, converged, censored, rep.config_hash, fit, refined,
                      clock.tolist(), inv.tolist())


def _run_row_job(raw: dict, eps: float, refine: bool) -> dict:
    return asdict(run_row(LabConfig.from_dict(raw), eps, refine))


def _wants_refinement(cfg: LabConfig, eps: float, prediction: dict) -> bool:
    policy = cfg.raw["grid"]["refinement"]
    if policy != "affordable":
        return policy == "all"
    g = cfg.raw["grid"]
    T = min(_estimated_lifespan(cfg.case, eps, prediction), cfg.raw["budgets"]["t_max"])
    h = g["dr"] / 2.0
    work = (g["window_width"] / h) * T / (g["cfl"] * h / 2.0)
    return work <= cfg.raw["budgets"]["refine_work"]


def sweep(cfg: LabConfig, epsilons=None, threads: int = 1,
          progress: Optional[Callable[[ScalingRow], None]] = None) -> ScalingReport:
    """Run every eps (largest first), flag grid convergence, fit the eps -> 0 trend."""
    if epsilons is not None:
        cfg = cfg.with_epsilons(epsilons)
    prediction = predict(cfg.u0, cfg.u1)
    case = cfg.case
    eps_list = sorted(cfg.epsilons, reverse=True)
    if case is not CaseTag.GLOBAL:
        target = prediction["nu0" if case is CaseTag.CASE_II else "tau0"]
        for e in eps_list:
            slow = e * e * math.log1p(1.0 / e) if case is CaseTag.CASE_II else e * math.sqrt(1.0 + 1.0 / e)
            if not slow < target:
                raise InvalidArgument(f"eps = {e} is too large: slow time at t = 1/eps exceeds the prediction")
    plans = [(e, _wants_refinement(cfg, e, prediction)) for e in eps_list]
    rows = []
    if threads > 1 and len(plans) > 1:
        with cf.ProcessPoolExecutor(max_workers=threads) as pool:
            futs = [pool.submit(_run_row_job, cfg.raw, e, ref) for e, ref in plans]
            for fut in futs:
                row = ScalingRow(**fut.result())
                rows.append(row)
                if progress:
                    progress(row)
    else:
        for e, ref in plans:
            row = run_row(cfg, e, ref)
            rows.append(row)
            if progress:
                progress(row)
    rows.sort(key=lambda r: -r.eps)
    return ScalingReport(case.value, rows, prediction, extrapolate(rows), cfg.raw, cfg.hash())


# --- persistence -----------------------------------------------------------------------

def _encode(x):
    if isinstance(x, float) and not math.isfinite(x):
        return {"__float__": repr(x)}
    if isinstance(x, dict):
        return {k: _encode(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_encode(v) for v in x]
    if isinstance(x, np.generic):
        return _encode(x.item())
    return x


def _decode(x):
    if isinstance(x, dict):
        if set(x) == {"__float__"}:
            return float(x["__float__"])
        return {k: _decode(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_decode(v) for v in x]
    return x


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_dict(rep: ScalingReport) -> dict:
    return _encode({"case": rep.case, "prediction": rep.prediction, "extrapolation": rep.extrapolation,
                    "config": rep.config, "config_hash": rep.config_hash,
                    "rows": [asdict(r) for r in rep.rows]})


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def report(rep: ScalingReport, out_dir) -> list:
    """results.csv, summary.json, plot data and a gnuplot script; returns the paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc}") from exc
    paths = []
    p = out / "results.csv"
    try:
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for r in rep.rows:
                w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    except OSError as exc:
        raise OSError(f"cannot write {p}: {exc}") from exc
    paths.append(p)
    p = out / "summary.json"
    _write(p, json.dumps(report_dict(rep), indent=2, sort_keys=True) + "\n")
    paths.append(p)
    target = rep.target
    lines = ["# eps scaled prediction"] + [f"{r.eps!r} {r.scaled!r} {target!r}"
                                            for r in rep.rows if r.scaled is not None]
    p = out / "scaled_vs_eps.dat"
    _write(p, "\n".join(lines) + "\n")
    paths.append(p)
    for r in rep.rows:
        p = out / f"inv_w1_eps{r.eps:g}.dat"
        _write(p, "# clock 1/max|w1|\n" + "".join(f"{c!r} {v!r}\n" for c, v in zip(r.clock, r.inv_w1)))
        paths.append(p)
    label = "eps^2 ln T" if rep.case == CaseTag.CASE_II.value else "eps sqrt(T)"
    gp = [
        "set terminal pngcairo size 900,600",
        "set output 'scaling.png'",
        "set xlabel 'eps'",
        f"set ylabel '{label}'",
        "set key left top",
        "plot 'scaled_vs_eps.dat' using 1:2 with linespoints title 'simulation', \\",
        "     'scaled_vs_eps.dat' using 1:3 with lines title 'prediction'",
    ]
    if rep.extrapolation:
        e = rep.extrapolation
        gp[-1] += ", \\"
        gp.append(f"     {e['limit']!r} + {e['k']!r}*sqrt(x) title 'fit limit + k eps^(1/2)'")
    p = out / "scaling.gp"
    _write(p, "\n".join(gp) + "\n")
    paths.append(p)
    return paths


def load_report(out_dir) -> ScalingReport:
    p = Path(out_dir) / "summary.json"
    try:
        d = _decode(json.loads(p.read_text(encoding="utf-8")))
    except OSError as exc:
        raise OSError(f"cannot read {p}: {exc}") from exc
    rows = [ScalingRow(**r) for r in d["rows"]]
    return ScalingReport(d["case"], rows, d["prediction"], d["extrapolation"], d["config"], d["config_hash"])


def timed_sweep(cfg: LabConfig, **kw):
    """sweep plus wall time in seconds (kept out of the report for determinism)."""
    t0 = time.perf_counter()
    rep = sweep(cfg, **kw)
    return rep, time.perf_counter() - t0
