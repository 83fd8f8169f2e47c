"""Experiment harness: schemes, Monte Carlo sweeps and CSV reporting.

Four schemes are compared under one total power budget: no RIS at all, a
fully passive RIS, hybrid RISs with a few amplifying elements, and a fully
active RIS.  Schemes with active elements surrender their RIS budget at the
base station (linear mW subtraction), so every scheme spends the same total
power.

All schemes at a given (seed, drop) consume the identical channel
realization: geometry and channels are derived from per-purpose streams
keyed only by the root seed and drop index.

Result rows go to ``<output>`` with the fixed header
``scheme,sweep_dbm,drop,min_rate_nats,iterations,converged``; per-(scheme,
sweep) means go to ``<output stem>.summary.csv``.  Convergence traces use
``scheme,sweep_dbm,drop,iteration,tau_nats``.
"""

import csv
import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from risbeam.channel import drop_users, generate_channels
from risbeam.rng import stream
from risbeam.sca import ScaOptions, bca_solve
from risbeam.system_model import dbm_to_mw, paper_scenario

__all__ = [
    "SchemeSpec",
    "ExperimentConfig",
    "ResultRow",
    "default_schemes",
    "load_config",
    "effective_bs_budget",
    "scheme_scenario",
    "run_single_drop",
    "run_convergence",
    "run_pt_sweep",
    "run_pris_sweep",
    "read_results_csv",
    "summarize",
]

RESULT_HEADER = ["scheme", "sweep_dbm", "drop", "min_rate_nats", "iterations", "converged"]
TRACE_HEADER = ["scheme", "sweep_dbm", "drop", "iteration", "tau_nats"]
SUMMARY_HEADER = ["scheme", "sweep_dbm", "mean_min_rate_nats", "drops"]


@dataclass(frozen=True)
class SchemeSpec:
    """One compared configuration: active-element count and RIS budget."""

    name: str
    n_active: int = 0
    p_ris_max_dbm: float = -1.0
    ris_enabled: bool = True

    def __post_init__(self):
        if self.n_active < 0:
            raise ValueError("n_active must be non-negative")
        if not self.ris_enabled and self.n_active:
            raise ValueError(f"scheme {self.name!r} disables the RIS but has active elements")


def default_schemes(n_ris: int, p_ris_max_dbm: float = -1.0, include_full_active: bool = False):
    schemes = [
        SchemeSpec("no-ris", 0, p_ris_max_dbm, ris_enabled=False),
        SchemeSpec("passive", 0, p_ris_max_dbm),
        SchemeSpec("hybrid4", min(4, n_ris), p_ris_max_dbm),
    ]
    if n_ris >= 8:
        schemes.append(SchemeSpec("hybrid8", 8, p_ris_max_dbm))
    if include_full_active:
        schemes.append(SchemeSpec("active-full", n_ris, p_ris_max_dbm))
    return schemes


@dataclass
class ExperimentConfig:
    """Scenario dimensions, scheme list, sweep grids and run bookkeeping.

    Desk-scale defaults (N = 16, K = 3) keep runs in CI territory; the CLI's
    ``--paper-scale`` flag restores N = 50, K = 5.
    """

    n_tx: int = 2
    n_users: int = 3
    n_ris: int = 16
    p_t_max_dbm: float = 20.0
    schemes: list = None
    pt_grid_dbm: list = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])
    pris_grid_dbm: list = field(default_factory=lambda: [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0])
    num_drops: int = 50
    seed: int = 1
    output: str = "results.csv"
    convergence_tol: float = 1e-3
    max_outer_iterations: int = 50

    def __post_init__(self):
        if self.schemes is None:
            self.schemes = default_schemes(self.n_ris)
        self.schemes = [s if isinstance(s, SchemeSpec) else SchemeSpec(**s) for s in self.schemes]
        if self.num_drops < 1:
            raise ValueError("num_drops must be >= 1")
        if not self.pt_grid_dbm or not self.pris_grid_dbm:
            raise ValueError("sweep grids must be non-empty")


def load_config(path) -> ExperimentConfig:
    """Parse a JSON config whose keys mirror ExperimentConfig field names.

    Unknown keys are rejected so committed configs reproduce bit-exactly.
    """
    with open(path) as fh:
        raw = json.load(fh)
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "schemes" in raw and raw["schemes"] is not None:
        scheme_known = {f.name for f in dataclasses.fields(SchemeSpec)}
        parsed = []
        for entry in raw["schemes"]:
            bad = set(entry) - scheme_known
            if bad:
                raise ValueError(f"unknown scheme keys: {sorted(bad)}")
            parsed.append(SchemeSpec(**entry))
        raw["schemes"] = parsed
    return ExperimentConfig(**raw)


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    sweep_dbm: float
    drop: int
    min_rate_nats: float
    iterations: int
    converged: bool

    def __post_init__(self):
        if self.min_rate_nats < 0:
            raise ValueError("min rate cannot be negative")


def effective_bs_budget(scheme: SchemeSpec, config: ExperimentConfig) -> float:
    """BS power budget in mW under the fair total-power rule.

    Schemes with active elements give up their RIS budget at the BS; the
    subtraction happens in linear mW because powers add linearly.
    """
    total = dbm_to_mw(config.p_t_max_dbm)
    if scheme.n_active == 0:
        return total
    budget = total - dbm_to_mw(scheme.p_ris_max_dbm)
    if budget < 0:
        raise ValueError(
            f"scheme {scheme.name!r}: RIS budget {scheme.p_ris_max_dbm} dBm exceeds "
            f"the total budget {config.p_t_max_dbm} dBm"
        )
    return budget


def scheme_scenario(scheme: SchemeSpec, config: ExperimentConfig):
    """Scenario + loop options realizing one scheme under the fair budget."""
    scenario = paper_scenario(
        n_tx=config.n_tx,
        n_users=config.n_users,
        n_ris=config.n_ris,
        n_active=scheme.n_active,
        p_bs_max=effective_bs_budget(scheme, config),
        p_ris_max=dbm_to_mw(scheme.p_ris_max_dbm),
    )
    options = ScaOptions(
        convergence_tol=config.convergence_tol,
        max_outer_iterations=config.max_outer_iterations,
        blocks="beamforming" if not scheme.ris_enabled else "both",
        init_alpha="zero" if not scheme.ris_enabled else "random",
    )
    return scenario, options


def run_single_drop(config: ExperimentConfig, scheme: SchemeSpec, drop: int):
    """Solve one (scheme, drop) pair on its paired channel realization."""
    scenario, options = scheme_scenario(scheme, config)
    geometry = drop_users(scenario, stream(config.seed, "geometry", drop))
    channels = generate_channels(scenario, geometry, stream(config.seed, "channels", drop))
    return bca_solve(scenario, channels, options, stream(config.seed, "init", drop))


def _worker(args):
    config_dict, scheme, sweep_key, drop = args
    config = ExperimentConfig(**config_dict)
    result = run_single_drop(config, scheme, drop)
    return (scheme.name, sweep_key, drop), result


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("RISBEAM_THREADS", "1")))
    except ValueError:
        return 1


def _execute_into(tasks, out, progress=None):
    """Run (config, scheme, sweep_key, drop) tasks, possibly in parallel,
    filling ``out`` incrementally; results are keyed and deterministic
    regardless of schedule."""
    threads = _thread_count()
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for key, result in pool.map(_worker, tasks):
                out[key] = result
                if progress:
                    progress(key)
    else:
        for args in tasks:
            key, result = _worker(args)
            out[key] = result
            if progress:
                progress(key)
    return out


def _config_dict(config: ExperimentConfig) -> dict:
    d = dataclasses.asdict(config)
    d["schemes"] = [SchemeSpec(**s) for s in d["schemes"]]
    return d


def _resolved(config, scheme, axis, sweep_dbm):
    """Config and scheme with the sweep value substituted on its axis."""
    if axis == "pt":
        return dataclasses.replace(config, p_t_max_dbm=float(sweep_dbm)), scheme
    if axis == "pris":
        return config, dataclasses.replace(scheme, p_ris_max_dbm=float(sweep_dbm))
    return config, scheme


def _write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
            fh.flush()
    return path


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def summarize(rows) -> list:
    """Mean min-rate per (scheme, sweep value), in first-seen order."""
    groups = {}
    order = []
    for r in rows:
        key = (r.scheme, r.sweep_dbm)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r.min_rate_nats)
    return [
        (scheme, sweep, float(np.mean(groups[(scheme, sweep)])), len(groups[(scheme, sweep)]))
        for scheme, sweep in order
    ]


def _sweep(config: ExperimentConfig, axis: str, grid, progress=None):
    """Shared sweep driver.  Schemes that ignore the swept quantity (passive
    and no-RIS schemes on the RIS-power axis) are solved once per drop and
    replicated across the grid.  On interrupt, rows computed so far are
    written to the output before the interrupt propagates."""
    tasks = {}
    for scheme in config.schemes:
        for sweep in grid:
            rcfg, rscheme = _resolved(config, scheme, axis, sweep)
            invariant = axis == "pris" and scheme.n_active == 0
            sweep_key = None if invariant else float(sweep)
            key = (scheme.name, sweep_key)
            if key not in tasks:
                tasks[key] = [
                    (_config_dict(rcfg), rscheme, sweep_key, drop) for drop in range(config.num_drops)
                ]
    flat = [t for group in tasks.values() for t in group]
    results = {}
    interrupted = None
    try:
        _execute_into(flat, results, progress)
    except KeyboardInterrupt as exc:
        interrupted = exc

    rows = []
    for scheme in config.schemes:
        for sweep in grid:
            invariant = axis == "pris" and scheme.n_active == 0
            sweep_key = None if invariant else float(sweep)
            for drop in range(config.num_drops):
                res = results.get((scheme.name, sweep_key, drop))
                if res is None:
                    continue
                rows.append(
                    ResultRow(
                        scheme=scheme.name,
                        sweep_dbm=float(sweep),
                        drop=drop,
                        min_rate_nats=max(0.0, float(res.tau)),
                        iterations=int(res.iterations),
                        converged=bool(res.converged and res.failure is None),
                    )
                )
    if interrupted is not None:
        _write_rows(config.output, RESULT_HEADER, [_result_record(r) for r in rows])
        raise interrupted
    return rows


def _result_record(r: ResultRow) -> list:
    return [r.scheme, _format(float(r.sweep_dbm)), r.drop, _format(r.min_rate_nats), r.iterations, _format(r.converged)]


def _emit_sweep_outputs(config, rows):
    out = Path(config.output)
    result_path = _write_rows(out, RESULT_HEADER, [_result_record(r) for r in rows])
    summary = summarize(rows)
    summary_path = _write_rows(
        out.with_suffix(".summary.csv"),
        SUMMARY_HEADER,
        [[s, _format(float(v)), _format(m), n] for s, v, m, n in summary],
    )
    return result_path, summary_path, summary


def run_pt_sweep(config: ExperimentConfig, progress=None):
    """Minimum rate versus the total power budget, per scheme and drop."""
    rows = _sweep(config, "pt", config.pt_grid_dbm, progress)
    result_path, summary_path, summary = _emit_sweep_outputs(config, rows)
    return rows, result_path, summary_path


def run_pris_sweep(config: ExperimentConfig, progress=None):
    """Minimum rate versus the RIS power budget, per scheme and drop."""
    rows = _sweep(config, "pris", config.pris_grid_dbm, progress)
    result_path, summary_path, summary = _emit_sweep_outputs(config, rows)
    return rows, result_path, summary_path


def run_convergence(config: ExperimentConfig, progress=None):
    """Per-iteration objective traces for the first scheme at each total
    power in the pt grid (one trace per drop).  Partial traces survive an
    interrupt."""
    scheme = config.schemes[0]
    trace_rows = []
    try:
        for sweep in config.pt_grid_dbm:
            rcfg, rscheme = _resolved(config, scheme, "pt", sweep)
            for drop in range(config.num_drops):
                res = run_single_drop(rcfg, rscheme, drop)
                for rec in res.trace:
                    trace_rows.append(
                        [scheme.name, _format(float(sweep)), drop, rec.iteration, _format(rec.tau)]
                    )
                if progress:
                    progress((scheme.name, float(sweep), drop))
    except KeyboardInterrupt:
        _write_rows(config.output, TRACE_HEADER, trace_rows)
        raise
    path = _write_rows(config.output, TRACE_HEADER, trace_rows)
    return trace_rows, path


def read_results_csv(path) -> list:
    """Round-trip parser for the fixed result schema."""
    rows = []
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != RESULT_HEADER:
            raise ValueError(f"unexpected header {header}")
        for rec in reader:
            rows.append(
                ResultRow(
                    scheme=rec[0],
                    sweep_dbm=float(rec[1]),
                    drop=int(rec[2]),
                    min_rate_nats=float(rec[3]),
                    iterations=int(rec[4]),
                    converged=rec[5] == "true",
                )
            )
    return rows
