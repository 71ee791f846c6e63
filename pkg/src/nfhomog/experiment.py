"""Configuration-driven experiments: single solves, eps-sweeps, suites.

A configuration is a YAML mapping; :data:`DEFAULT_CONFIG` documents every
key. :func:`validate` lists violated constraints and :func:`run` executes
one mode, writing artifacts atomically under the output directory.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .grid import (CellGrid, MacroField, MacroGrid, TwoScaleField, _atomic_write, corrector_trace,
                   read_field, write_field)
from .micro import CellSampled, LimitAtInfinity, MicroFunction, TrigPoly
from .model import FiringRate, KernelSpec, Linear, Sigmoid, kernel_mass
from .profiles import Profile
from .sigma import (PairingReport, _report, default_family, is_commensurate, spacetime_limit_pairing,
                    spacetime_pairing)
from .solver import (PicardConfig, Solution, TimeGrid, apriori_monitor, homog_solve, picard_solve,
                     rk4_solve)

__all__ = [
    "DEFAULT_CONFIG",
    "MODES",
    "ExperimentConfig",
    "SweepResult",
    "default_config",
    "control_config",
    "load_config",
    "parse_micro",
    "validate",
    "run",
    "run_sweep",
    "ValidationError",
    "THREADS_ENV",
]

logger = logging.getLogger(__name__)

MODES = ("solve-hetero", "solve-homog", "sweep", "verify", "oracle")
THREADS_ENV = "NFHOMOG_THREADS"

DEFAULT_CONFIG = {
    "dimension": 1,
    "half_width": 8.0,
    # 16 grid points per micro period at the finest eps
    "points_per_axis": 8192,
    # same macro grid for both problems, so quadrature of the truncated kernel
    # contributes no eps-independent mismatch
    "homog_points_per_axis": 8192,
    # J ** F keeps only the cell modes of P (here 0 and +-1); 16 nodes resolve them exactly
    "cell_points_per_axis": 16,
    "kernel": {
        "target_mass": 0.9,
        "terms": [
            {"profile": {"kind": "gaussian", "width": 0.5, "cutoff": 3.0},
             "micro": {"trig": [[[0], 1.0, 0.0], [[1], 0.5, 0.0]]}},
        ],
    },
    "firing": {
        "g": {"trig": [[[0], 1.0, 0.0], [[1], 0.5, 0.0]]},
        "h": {"kind": "sigmoid", "beta": 2.0, "theta": 0.5},
    },
    # cut at 8 widths: the truncation jump is below 1e-13
    "initial": {"kind": "gaussian", "width": 0.1875, "cutoff": 1.5},
    "time": {"T": 2.0, "dt": 1e-3, "stride": 100},
    "picard": {"rho": None, "max_sweeps": 60, "tol": 1e-10},
    "eps": [0.25, 0.125, 0.0625, 0.03125],
    "family": {
        "profiles": [
            {"kind": "gaussian", "width": 0.5, "cutoff": 4.0, "center": [0.37]},
            {"kind": "gaussian", "width": 0.7, "cutoff": 5.6, "center": [-1.13]},
        ],
        "kmax": 2,
    },
    "integrator": "picard",
    "mode": "sweep",
    "output": "nfhomog-out",
    "margin": 0.5,
    "min_points_per_period": 16,
    "threads": 1,
    "seed": 0,
    "dump_fields": True,
}


class ValidationError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


# variant records: an override replaces them whole instead of merging key by key
_ATOMIC = ("initial", "g", "h", "micro", "profile", "core")


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in _ATOMIC:
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class ExperimentConfig:
    """Thin wrapper over the configuration mapping with typed accessors."""

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULT_CONFIG))
    base_dir: Path = field(default_factory=Path.cwd)

    def __getitem__(self, key):
        return self.data[key]

    def replace(self, **overrides) -> "ExperimentConfig":
        return ExperimentConfig(_merge(self.data, overrides), self.base_dir)

    @property
    def dim(self) -> int:
        return int(self.data["dimension"])

    @property
    def macro(self) -> MacroGrid:
        return MacroGrid(self.dim, self.data["half_width"], int(self.data["points_per_axis"]))

    @property
    def homog_macro(self) -> MacroGrid:
        M = self.data.get("homog_points_per_axis") or self.data["points_per_axis"]
        return MacroGrid(self.dim, self.data["half_width"], int(M))

    @property
    def cell(self) -> CellGrid:
        return CellGrid(self.dim, int(self.data["cell_points_per_axis"]))

    @property
    def eps(self) -> list:
        return [float(e) for e in self.data["eps"]]

    @property
    def time_grid(self) -> TimeGrid:
        t = self.data["time"]
        return TimeGrid(float(t["T"]), float(t["dt"]), int(t.get("stride", 1)))

    @property
    def picard(self) -> PicardConfig:
        p = self.data.get("picard") or {}
        rho = p.get("rho")
        return PicardConfig(None if rho is None else float(rho), int(p.get("max_sweeps", 60)),
                            float(p.get("tol", 1e-10)))

    def micro(self, literal) -> MicroFunction:
        return parse_micro(literal, self.dim, self.base_dir)

    def kernel_terms(self) -> list:
        return [(Profile.from_dict(t["profile"]), self.micro(t["micro"])) for t in self.data["kernel"]["terms"]]

    def kernel(self) -> KernelSpec:
        target = float(self.data["kernel"].get("target_mass", 1.0 - 1e-6))
        return KernelSpec.normalized(self.kernel_terms(), self.macro, self.eps, target_mass=target)

    def firing(self) -> FiringRate:
        fd = self.data["firing"]
        hd = dict(fd.get("h") or {"kind": "sigmoid"})
        kind = hd.pop("kind", "sigmoid")
        if kind == "sigmoid":
            h = Sigmoid(float(hd.get("beta", 1.0)), float(hd.get("theta", 0.0)))
        elif kind == "linear":
            h = Linear()
        else:
            raise ValueError(f"unknown firing nonlinearity {kind!r}")
        return FiringRate(self.micro(fd["g"]), h)

    def initial_profile(self) -> Profile:
        return Profile.from_dict(self.data["initial"])

    def family(self) -> list:
        fam = self.data["family"]
        profiles = [Profile.from_dict(p) for p in fam["profiles"]]
        return default_family(profiles, self.dim, int(fam.get("kmax", 2)))

    def threads(self, override: int | None = None) -> int:
        if override:
            return max(1, int(override))
        env = os.environ.get(THREADS_ENV)
        if env:
            return max(1, int(env))
        return max(1, int(self.data.get("threads", 1)))


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


def control_config() -> ExperimentConfig:
    """Default setup without microstructure (kernel and firing rate constant in y)."""
    flat = {"trig": [[[0], 1.0, 0.0]]}
    cfg = default_config()
    cfg.data["kernel"]["terms"][0]["micro"] = flat
    cfg.data["firing"]["g"] = flat
    cfg.data["cell_points_per_axis"] = 8
    cfg.data["homog_points_per_axis"] = cfg.data["points_per_axis"]
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    data = yaml.safe_load(path.read_text()) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: configuration must be a mapping")
    return ExperimentConfig(_merge(DEFAULT_CONFIG, data), path.parent)


def parse_micro(literal, dim: int = 1, base_dir: Path | None = None) -> MicroFunction:
    """Build a micro function from its configuration literal.

    Exactly one of the keys ``trig`` (list of ``[k, amplitude, phase]``,
    optional ``generators``), ``cell_file`` (NFH1 file of cell samples),
    ``cell_values`` (nested list of samples) or ``limit`` (with a ``core``
    profile) must be present.
    """
    if isinstance(literal, MicroFunction):
        return literal
    if isinstance(literal, (int, float)):
        return TrigPoly.constant(float(literal), dim)
    keys = [k for k in ("trig", "cell_file", "cell_values", "limit") if k in literal]
    if len(keys) != 1:
        raise ValueError(f"micro literal must use exactly one variant, got {keys or list(literal)}")
    kind = keys[0]
    if kind == "trig":
        terms = [(t[0], float(t[1]), float(t[2]) if len(t) > 2 else 0.0) for t in literal["trig"]]
        gens = literal.get("generators")
        if gens is not None:
            gens = tuple(tuple(float(v) for v in np.atleast_1d(g)) for g in gens)
        return TrigPoly.from_terms(terms, dim=dim, generators=gens)
    if kind == "cell_values":
        return CellSampled(np.asarray(literal["cell_values"], dtype=float))
    if kind == "cell_file":
        p = Path(literal["cell_file"])
        if base_dir is not None and not p.is_absolute():
            p = Path(base_dir) / p
        fld = read_field(p)
        if not isinstance(fld, MacroField):
            raise ValueError("cell_file must hold a macro-kind NFH1 record of cell samples")
        return CellSampled(np.array(fld.values))
    core = Profile.from_dict(literal["core"]) if "core" in literal else Profile("bump", 1.0, amplitude=0.0)
    return LimitAtInfinity(core, float(literal["limit"]), dim=dim)


def validate(cfg: ExperimentConfig) -> list:
    """All violated constraints, as human-readable strings (empty when valid)."""
    v = []
    d = cfg.data
    if d.get("mode") not in MODES:
        v.append(f"mode must be one of {MODES}, got {d.get('mode')!r}")
    if d.get("integrator") not in ("picard", "rk4", "both"):
        v.append(f"integrator must be picard, rk4 or both, got {d.get('integrator')!r}")
    try:
        macro = cfg.macro
        hmacro = cfg.homog_macro
        cell = cfg.cell
    except (ValueError, KeyError) as exc:
        return v + [f"grid: {exc}"]
    if hmacro.M > macro.M:
        v.append("homog_points_per_axis must not exceed points_per_axis")
    try:
        eps = cfg.eps
    except (TypeError, ValueError):
        return v + ["eps schedule must be a list of numbers"]
    if not eps:
        v.append("eps schedule is empty")
    if any(e <= 0 for e in eps):
        v.append("eps values must be positive")
    if any(b >= a for a, b in zip(eps[:-1], eps[1:])):
        v.append("eps schedule must be strictly decreasing")
    for e in eps:
        if e > 0 and not is_commensurate(e, macro):
            v.append(f"eps={e} is not grid-commensurate: 2L/eps = {2 * macro.L / e:.6g} is not an integer")
        elif e > 0:
            per_period = e / macro.h
            if per_period < float(d.get("min_points_per_period", 1)):
                v.append(f"eps={e} is under-resolved: {per_period:.3g} grid points per micro period "
                         f"< min_points_per_period={d.get('min_points_per_period')}")
    try:
        tg = cfg.time_grid
    except (ValueError, KeyError) as exc:
        return v + [f"time grid: {exc}"]
    try:
        terms = cfg.kernel_terms()
        f = cfg.firing()
        u_init = cfg.initial_profile()
    except (ValueError, KeyError, TypeError) as exc:
        return v + [f"model: {exc}"]
    for prof, w in terms:
        if w.dim != cfg.dim:
            v.append("kernel micro factor dimension differs from the configured dimension")
        if w.algebra.kind == "quasiPeriodic":
            v.append("quasi-periodic kernel micro factors are not supported by the double convolution")
    if f.g.algebra.kind == "quasiPeriodic":
        v.append("quasi-periodic firing-rate micro factors are not supported by the double convolution")
    if f.dim != cfg.dim:
        v.append("firing-rate micro factor dimension differs from the configured dimension")
    r_j = max(p.support_radius for p, _ in terms)
    r_u = u_init.support_radius
    if u_init.kind == "gaussian" and not np.isfinite(r_u):
        # radius where the datum drops below 1e-12 of its peak
        r_u = u_init.width * np.sqrt(2 * np.log(1e12))
    margin = float(d.get("margin", 0.0))
    need = r_u + tg.T * r_j + margin
    if not macro.L >= need - 1e-12:
        v.append(f"domain too small: L={macro.L} < support(u0) + T*support(J) + margin = "
                 f"{r_u:.6g} + {tg.T}*{r_j:.6g} + {margin} = {need:.6g}")
    pc = cfg.picard
    rho = pc.rho if pc.rho is not None else 0.9 / (2 * (f.k1 + 1))
    if not 2 * (f.k1 + 1) * rho < 1:
        v.append(f"contraction condition 2(k1+1)rho<1 violated: 2({f.k1:.6g}+1)*{rho:.6g} = "
                 f"{2 * (f.k1 + 1) * rho:.6g}")
    if rho < tg.dt:
        v.append("Picard window rho is shorter than one time step")
    if not v:
        J = cfg.kernel()
        for e in eps:
            m = kernel_mass(J, e, macro)
            if m > 1 + 1e-12:
                v.append(f"kernel mass {m:.12g} > 1 at eps={e}")
    try:
        fam = d["family"]
        for p in fam["profiles"]:
            prof = Profile.from_dict(p)
            c = np.asarray(prof.center or (0.0,) * cfg.dim)
            if np.any(np.abs(c) + prof.support_radius >= macro.L):
                v.append(f"test profile {p} is not supported strictly inside the box")
    except (KeyError, ValueError, TypeError) as exc:
        v.append(f"test family: {exc}")
    return v


# sweeps ----------------------------------------------------------------------

@dataclass
class SweepResult:
    eps: list
    solve_reports: list
    bound_reports: list
    pairing_reports: list
    corrector_l2: list
    corrector_weak: list
    homog_report: object
    integrator_gaps: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    solutions: dict = field(default_factory=dict)
    homog: Solution | None = None

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())


def _solve_one(J, f, eps, u0, tg, pc, integrator):
    if integrator == "rk4":
        return {"rk4": rk4_solve(J, f, eps, u0, tg)}
    out = {"picard": picard_solve(J, f, eps, u0, tg, pc)}
    if integrator == "both":
        out["rk4"] = rk4_solve(J, f, eps, u0, tg)
    return out


def _corrector_errors(sol: Solution, homog: Solution, eps: float, family) -> tuple:
    grid = sol.states[0].grid
    traces = [corrector_trace(u0, eps, grid) for u0 in homog.states]
    diffs = [u - c for u, c in zip(sol.states, traces)]
    times = sol.times
    dt = times[1] - times[0] if len(times) > 1 else 0.0
    w = np.full(len(times), dt)
    if len(times) > 1:
        w[0] = w[-1] = 0.5 * dt
    sq = np.array([grid.cell_volume * np.sum(d.values ** 2) for d in diffs])
    l2 = float(np.sqrt(np.dot(w, sq))) if len(times) > 1 else float(np.sqrt(sq[0]))
    weak = max(abs(spacetime_pairing(times, diffs, psi, eps)) for psi in family)
    return l2, float(weak)


def run_sweep(cfg: ExperimentConfig, threads: int | None = None, keep_solutions: bool = True) -> SweepResult:
    """Solve the eps-problem for every scheduled eps and the homogenized problem once."""
    problems = validate(cfg)
    if problems:
        raise ValidationError(problems)
    macro, hmacro, cell = cfg.macro, cfg.homog_macro, cfg.cell
    J, f, tg, pc = cfg.kernel(), cfg.firing(), cfg.time_grid, cfg.picard
    prof = cfg.initial_profile()
    u_init = macro.sample(prof)
    integrator = cfg["integrator"]
    eps_list = cfg.eps
    workers = cfg.threads(threads)

    def job(e):
        try:
            return _solve_one(J, f, e, u_init, tg, pc, integrator)
        except Exception as exc:
            raise type(exc)(f"[eps={e}] {exc}") from exc

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(job, e) for e in eps_list]
        homog_integrator = "rk4" if integrator == "rk4" else "picard"
        homog = homog_solve(J, f, hmacro.sample(prof), tg, pc, cell, homog_integrator)
        results = [fut.result() for fut in futures]

    primary = [r["rk4"] if integrator == "rk4" else r["picard"] for r in results]
    gaps = []
    if integrator == "both":
        from .grid import lp_norm
        gaps = [max(lp_norm(a - b, 2) for a, b in zip(r["picard"].states, r["rk4"].states)) for r in results]

    bounds = [apriori_monitor(s, f) for s in primary]
    family = cfg.family()
    reports = []
    for psi in family:
        lim = spacetime_limit_pairing(homog.times, homog.states, psi)
        pairs = [spacetime_pairing(s.times, s.states, psi, e) for s, e in zip(primary, eps_list)]
        mag = max(spacetime_pairing(s.times, s.states, psi, e, magnitude=True) for s, e in zip(primary, eps_list))
        reports.append(_report(eps_list, pairs, lim, psi.label, skip_first=True, scale=mag))
    corr = [_corrector_errors(s, homog, e, family) for s, e in zip(primary, eps_list)]

    sups = [b.sup_l1_plus_l2 for b in bounds]
    spread = (max(sups) - min(sups)) / max(min(sups), 1e-300)
    verdicts = {
        "apriori_bound": all(b.passed for b in bounds),
        "uniform_bound_spread_le_20pct": spread <= 0.2,
        "pairings_decrease": all(r.passed for r in reports),
    }
    if integrator in ("picard", "both"):
        verdicts["picard_contraction"] = all(
            s.report.max_ratio <= s.report.contraction_bound + 0.05 for s in primary)
    if integrator == "both":
        verdicts["integrator_agreement"] = all(g <= max(10 * pc.tol, 1e-6) for g in gaps)
    res = SweepResult(eps_list, [s.report for s in primary], bounds, reports,
                      [c[0] for c in corr], [c[1] for c in corr], homog.report, gaps, verdicts)
    res.verdicts_detail = {"sup_l1_plus_l2": sups, "spread": spread}
    if keep_solutions:
        res.solutions = {e: s for e, s in zip(eps_list, primary)}
        res.homog = homog
    return res


# artifact writing ------------------------------------------------------------

def _csv(rows, header) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue().encode()


def _json(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n").encode()


def _kv(d: dict) -> bytes:
    return "".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n"
                   for k, v in d.items()).encode()


def _dump_solution(sol: Solution, folder: Path, stem: str, meta: dict | None = None):
    tg_dt = sol.report.dt
    for t, s in zip(sol.times, sol.states):
        step = int(round(t / tg_dt))
        m = {"time": repr(float(t)), "step": step}
        m.update(meta or {})
        write_field(folder / f"{stem}_t{step:07d}.nfh", s, m)


def _write_report(sol: Solution, folder: Path, stem: str):
    rep = sol.report
    _atomic_write(folder / f"{stem}_report.txt", _kv(rep.records()))
    rows = [(float(t), float(a), float(b)) for t, a, b in zip(rep.times, rep.l1, rep.l2)]
    _atomic_write(folder / f"{stem}_norms.csv", _csv(rows, ["t", "l1", "l2"]))
    if rep.integrator == "picard":
        rows = [(k, n, ", ".join(repr(float(r)) for r in rs)) for k, (n, rs) in enumerate(zip(rep.sweeps, rep.ratios))]
        _atomic_write(folder / f"{stem}_sweeps.csv", _csv(rows, ["window", "sweeps", "ratios"]))


def write_sweep(res: SweepResult, out: Path, dump_fields: bool = True):
    out = Path(out)
    rows = []
    for e, rep, b, cl2, cw in zip(res.eps, res.solve_reports, res.bound_reports,
                                  res.corrector_l2, res.corrector_weak):
        r = rep.records()
        rows.append((float(e), r["integrator"], r.get("total_sweeps", ""), r.get("max_observed_ratio", ""),
                     float(b.sup_l1_plus_l2), bool(b.passed), float(b.c1), float(b.k1), cl2, cw))
    _atomic_write(out / "sweep.csv", _csv(rows, ["eps", "integrator", "total_sweeps", "max_ratio",
                                                 "sup_l1_plus_l2", "apriori_ok", "c1", "k1",
                                                 "corrector_l2", "corrector_weak"]))
    for rep in res.pairing_reports:
        name = rep.label.replace("*", "_").replace("[", "_").replace("]", "").replace(",", "_")
        _atomic_write(out / "pairings" / f"{name}.csv", rep.to_csv().encode())
    summary = {
        "eps": res.eps,
        "verdicts": res.verdicts,
        "pairings": [r.summary() for r in res.pairing_reports],
        "corrector_l2": res.corrector_l2,
        "corrector_weak": res.corrector_weak,
        "sup_l1_plus_l2": [b.sup_l1_plus_l2 for b in res.bound_reports],
        "homog": res.homog_report.records(),
        "integrator_gaps": res.integrator_gaps,
    }
    _atomic_write(out / "summary.json", _json(summary))
    if dump_fields and res.solutions:
        for k, (e, sol) in enumerate(res.solutions.items()):
            _dump_solution(sol, out / "hetero" / f"eps{k}", "u", {"eps": repr(e)})
            _write_report(sol, out / "hetero" / f"eps{k}", "u")
    if dump_fields and res.homog is not None:
        _dump_solution(res.homog, out / "homog", "u0")
        _write_report(res.homog, out / "homog", "u0")


def run(cfg: ExperimentConfig, mode: str | None = None, out=None, threads: int | None = None,
        seed: int | None = None) -> int:
    """Execute one mode; returns a process exit status.

    0 means success with all verdicts passing, 1 a completed run with a
    failing verdict, 2 an invalid configuration.
    """
    if mode is not None:
        cfg = cfg.replace(mode=mode)
    mode = cfg["mode"]
    out = Path(out or cfg["output"])
    seed = int(cfg.data.get("seed", 0) if seed is None else seed)
    problems = validate(cfg)
    if problems:
        for p in problems:
            logger.error("invalid configuration: %s", p)
        return 2
    dump = bool(cfg.data.get("dump_fields", True))
    if mode == "sweep":
        res = run_sweep(cfg, threads)
        write_sweep(res, out, dump)
        for k, v in res.verdicts.items():
            logger.info("%-32s %s", k, "PASS" if v else "FAIL")
        return 0 if res.passed else 1
    if mode == "solve-hetero":
        J, f, tg, pc = cfg.kernel(), cfg.firing(), cfg.time_grid, cfg.picard
        u_init = cfg.macro.sample(cfg.initial_profile())
        integrator = cfg["integrator"]
        with ThreadPoolExecutor(max_workers=cfg.threads(threads)) as pool:
            futs = [pool.submit(_solve_one, J, f, e, u_init, tg, pc, integrator) for e in cfg.eps]
            results = [fu.result() for fu in futs]
        for k, (e, r) in enumerate(zip(cfg.eps, results)):
            for name, sol in r.items():
                folder = out / "hetero" / f"eps{k}"
                if dump:
                    _dump_solution(sol, folder, f"u_{name}", {"eps": repr(e)})
                _write_report(sol, folder, f"u_{name}")
        return 0
    if mode == "solve-homog":
        J, f, tg, pc = cfg.kernel(), cfg.firing(), cfg.time_grid, cfg.picard
        integ = "rk4" if cfg["integrator"] == "rk4" else "picard"
        sol = homog_solve(J, f, cfg.homog_macro.sample(cfg.initial_profile()), tg, pc, cfg.cell, integ)
        if dump:
            _dump_solution(sol, out / "homog", "u0")
        _write_report(sol, out / "homog", "u0")
        return 0
    from .verification import run_suites, write_results
    results = run_suites(cfg, seed=seed, oracle_only=(mode == "oracle"))
    write_results(results, out / f"{mode}.csv")
    for r in results:
        logger.info("%-48s %s  %s", r.name, "PASS" if r.passed else "FAIL", r.detail)
    return 0 if all(r.passed for r in results) else 1
