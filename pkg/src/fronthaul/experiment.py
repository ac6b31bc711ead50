"""Seeded Monte Carlo sweeps over (realization, W, G, FS, scheme) and result files.

Seeds
-----
Every random stage gets its own 64-bit seed derived from the master seed and
a tuple of labels::

    x = splitmix64(master)
    for part in labels: x = splitmix64(x XOR code(part))

where ``code`` is the integer itself for ints and 64-bit FNV-1a of the UTF-8
bytes for strings. The AP field depends only on the realization, the
grouping on (realization, W, G), and link budgets on (realization, W, G) as
well, so both schemes, all functional splits and all methods of a
realization are compared on the same randomness.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import RunConfig
from .cost import Tech
from .demand import DemandMode, build_demand, generate_traffic_field
from .planner import build_ilp, plan_all
from .resilience import FailureReport, resilience_runs
from .linkbudget import build_link_budgets
from .topology import Scheme, generate_ap_field, nofac

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
METHODS = ("optimized", "all_fiber", "all_mmw", "heuristic")
FS_MODES = {"7.2x": DemandMode.FS72X, "8": DemandMode.FS8}
SCHEMA_VERSION = 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


def derive_seed(master: int, *parts) -> int:
    x = splitmix64(master & MASK64)
    for part in parts:
        code = _fnv1a64(part) if isinstance(part, str) else int(part) & MASK64
        x = splitmix64(x ^ code)
    return x


SEED_SCHEME = {
    "mixing_function": "splitmix64",
    "derivation": "x = splitmix64(master); for part in labels: x = splitmix64(x ^ code(part)); "
                  "code(int) = int mod 2^64, code(str) = FNV-1a-64(utf8)",
    "stages": {
        "field": ["'field'", "realization"],
        "topology": ["'topology'", "realization", "W", "G"],
        "budget": ["'budget'", "realization", "W", "G"],
        "traffic": ["'traffic'", "realization"],
        "resilience": ["'resilience'", "realization", "G"],
    },
}


# ------------------------------------------------------------------ records


@dataclass(frozen=True)
class ExperimentRecord:
    realization: int
    W: int
    G: int
    fs: str  # "7.2x", "8" or "traffic"
    traffic_scale: float
    scheme: str
    method: str
    groups: int  # groups actually formed
    n_aps: int
    total_cents: int
    tier1_cents: int
    tier2_cents: int
    per_ap_cents: int  # total / L, rounded half up
    surplus_bps: int
    n_fiber: int
    n_mmw: int
    n_fso: int
    n_excluded: int
    feasible: bool
    optimal: bool
    n_violations: int
    error: str = ""
    runtime: float = 0.0  # seconds; reported in run_meta.json, not in records.csv

    def sort_key(self):
        return (self.realization, self.W, self.G, self.fs, self.traffic_scale, self.scheme,
                METHODS.index(self.method) if self.method in METHODS else len(METHODS))


RECORD_COLUMNS = tuple(f.name for f in dataclasses.fields(ExperimentRecord) if f.name != "runtime")


def _record_row(r: ExperimentRecord) -> list:
    row = []
    for name in RECORD_COLUMNS:
        v = getattr(r, name)
        if isinstance(v, bool):
            row.append(int(v))
        elif isinstance(v, float):
            row.append(f"{v:g}")
        else:
            row.append(v)
    return row


def read_records(path: str | Path) -> list[ExperimentRecord]:
    """Parse a records.csv written by :func:`emit`."""
    types = {f.name: f.type for f in dataclasses.fields(ExperimentRecord)}
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for name, text in row.items():
                t = types[name]
                if t == "int":
                    kw[name] = int(text)
                elif t == "bool":
                    kw[name] = bool(int(text))
                elif t == "float":
                    kw[name] = float(text)
                else:
                    kw[name] = text
            out.append(ExperimentRecord(**kw))
    return out


# ------------------------------------------------------------------ one work unit


def _per_ap(total: int, L: int) -> int:
    return (2 * total + L) // (2 * L) if L else 0


def _error_records(r, W, G, fs, scale, scheme, L, msg, runtime):
    return [ExperimentRecord(r, W, G, fs, scale, scheme, m, 0, L, 0, 0, 0, 0, 0, 0, 0, 0, 0,
                             False, False, 0, msg, runtime) for m in METHODS]


def _demand_cases(config: RunConfig, r: int, fs_list: Sequence[str]):
    """(fs label, traffic scale, demand builder) for one realization."""
    if config.demand_mode == "traffic":
        seed = derive_seed(config.master_seed, "traffic", r)
        tf = generate_traffic_field(config.topology.region_side, config.traffic, seed)
        for scale in config.sweep.traffic_scale:
            field_s = tf.scaled(scale)
            yield "traffic", float(scale), (lambda sc, f=field_s: build_demand(
                sc, DemandMode.TRAFFIC, config.ofdm, f, config.cp_overhead))
    else:
        for fs in fs_list:
            yield fs, 1.0, (lambda sc, m=FS_MODES[fs]: build_demand(
                sc, m, config.ofdm, None, config.cp_overhead))


def run_unit(config: RunConfig, r: int, W: int, G: int, fs_list: Sequence[str],
             schemes: Sequence[str], with_resilience: bool = False):
    """All cells of one (realization, W, G): records, failure fractions, runtime."""
    t0 = time.perf_counter()
    master = config.master_seed
    L = config.topology.L
    records: list[ExperimentRecord] = []
    failures = []
    try:
        base = config.topology.topology(W, G, Scheme.RS)
        field = generate_ap_field(base, seed=derive_seed(master, "field", r))
        topo_seed = derive_seed(master, "topology", r, W, G)
        scenarios = {s: nofac(config.topology.topology(W, G, s), field, seed=topo_seed) for s in schemes}
    except Exception as e:  # noqa: BLE001 - recorded per cell, the sweep continues
        log.exception("scenario generation failed for r=%d W=%d G=%d", r, W, G)
        dt = time.perf_counter() - t0
        for fs, scale, _ in _demand_cases(config, r, fs_list):
            for s in schemes:
                records += _error_records(r, W, G, fs, scale, s, L, f"{type(e).__name__}: {e}", dt)
        return records, failures, dt

    budget_seed = derive_seed(master, "budget", r, W, G)
    cache: dict = {}
    for s in schemes:
        sc = scenarios[s]
        t_cell = time.perf_counter()
        try:
            budgets = build_link_budgets(sc, config.fiber, config.mmw, config.fso,
                                         seed=budget_seed, cache=cache)
        except Exception as e:  # noqa: BLE001
            log.exception("link budgets failed")
            for fs, scale, _ in _demand_cases(config, r, fs_list):
                records += _error_records(r, W, G, fs, scale, s, L, f"{type(e).__name__}: {e}",
                                          time.perf_counter() - t_cell)
            continue
        for fs, scale, make_demand in _demand_cases(config, r, fs_list):
            t_cell = time.perf_counter()
            try:
                inst = build_ilp(sc, budgets, make_demand(sc), config.costs, sla=config.sla,
                                 include_du_pool=config.include_du_pool)
                sols = plan_all(inst)
            except Exception as e:  # noqa: BLE001
                log.exception("planning failed")
                records += _error_records(r, W, G, fs, scale, s, L, f"{type(e).__name__}: {e}",
                                          time.perf_counter() - t_cell)
                continue
            dt = time.perf_counter() - t_cell
            for sol in sols:
                counts = sol.tech_counts()
                b = sol.breakdown
                records.append(ExperimentRecord(
                    realization=r, W=W, G=G, fs=fs, traffic_scale=scale, scheme=s,
                    method=sol.method, groups=sc.G, n_aps=L, total_cents=b.total,
                    tier1_cents=b.tier1, tier2_cents=b.tier2, per_ap_cents=_per_ap(b.total, L),
                    surplus_bps=int(round(sol.surplus)),
                    n_fiber=counts[Tech.FIBER], n_mmw=counts[Tech.MMW],
                    n_fso=counts[Tech.FSO], n_excluded=len(inst.excluded),
                    feasible=sol.feasible, optimal=sol.optimal,
                    n_violations=len(sol.violations), runtime=dt))

    if with_resilience:
        rep = resilience_runs(scenarios, config.sweep.p, config.resilience_runs,
                              derive_seed(master, "resilience", r, G), G=G)
        for key in rep.keys():
            failures.append((key, rep.runs[key]))
    return records, failures, time.perf_counter() - t0


def _unit_args(config: RunConfig, fs_list, schemes):
    first_w = config.sweep.W[0]
    for r in range(config.realizations):
        for W in config.sweep.W:
            for G in config.sweep.G:
                yield (config, r, W, G, tuple(fs_list), tuple(schemes), W == first_w)


def _run_packed(args):
    return args[1:4], run_unit(*args)


@dataclass
class SweepResult:
    records: list
    failures: FailureReport
    runtimes: dict  # "r/W/G" -> seconds

    @property
    def total_runtime(self) -> float:
        return float(sum(self.runtimes.values()))


def run_sweep(config: RunConfig, jobs: int = 1, fs_list: Sequence[str] | None = None,
              schemes: Sequence[str] | None = None) -> SweepResult:
    fs_list = tuple(fs_list or config.sweep.fs)
    schemes = tuple(schemes or config.sweep.schemes)
    units = list(_unit_args(config, fs_list, schemes))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_packed, units))
    else:
        results = [_run_packed(u) for u in units]

    records = []
    report = FailureReport()
    runtimes = {}
    for (r, W, G), (recs, fails, dt) in sorted(results, key=lambda x: x[0]):
        records += recs
        for (scheme, g, p), fractions in fails:
            report.add(scheme, g, p, fractions, np.zeros(0))
        runtimes[f"{r}/{W}/{G}"] = dt
    records.sort(key=ExperimentRecord.sort_key)
    return SweepResult(records, report, runtimes)


def run_experiment(config: RunConfig, jobs: int = 1) -> list[ExperimentRecord]:
    return run_sweep(config, jobs).records


# ------------------------------------------------------------------ statistics


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _stats(values: np.ndarray) -> dict:
    if len(values) == 0:
        return {k: float("nan") for k in ("mean", "std", "min", "q1", "median", "q3", "max")}
    return {
        "mean": float(np.mean(values)), "std": float(np.std(values)),
        "min": float(np.min(values)), "q1": float(np.percentile(values, 25)),
        "median": float(np.median(values)), "q3": float(np.percentile(values, 75)),
        "max": float(np.max(values)),
    }


CELL_KEYS = ("W", "G", "fs", "traffic_scale", "scheme", "method")
SUMMARY_COLUMNS = CELL_KEYS + (
    "n", "n_errors", "mean_per_ap_cents", "std_per_ap_cents", "median_per_ap_cents",
    "q1_per_ap_cents", "q3_per_ap_cents", "mean_total_cents", "mean_surplus_bps",
    "std_surplus_bps", "share_fiber", "share_mmw", "share_fso", "feasible_fraction")


def summarize(records: Iterable[ExperimentRecord]) -> list[dict]:
    """Per-cell statistics over realizations (population std; shares in percent)."""
    cells: dict[tuple, list[ExperimentRecord]] = {}
    for r in records:
        key = (r.W, r.G, r.fs, r.traffic_scale, r.scheme, r.method)
        cells.setdefault(key, []).append(r)
    out = []
    for key in sorted(cells, key=lambda k: (k[0], k[1], k[2], k[3], k[4],
                                            METHODS.index(k[5]) if k[5] in METHODS else 99)):
        group = cells[key]
        ok = [r for r in group if not r.error]
        per_ap = _stats(np.array([r.per_ap_cents for r in ok], dtype=float))
        surplus = _stats(np.array([r.surplus_bps for r in ok], dtype=float))
        total = _stats(np.array([r.total_cents for r in ok], dtype=float))
        n_f = sum(r.n_fiber for r in ok)
        n_m = sum(r.n_mmw for r in ok)
        n_o = sum(r.n_fso for r in ok)
        links = n_f + n_m + n_o
        share = (lambda n: 100.0 * n / links) if links else (lambda n: 0.0)
        out.append({
            **dict(zip(CELL_KEYS, key)),
            "n": len(ok), "n_errors": len(group) - len(ok),
            "mean_per_ap_cents": per_ap["mean"], "std_per_ap_cents": per_ap["std"],
            "median_per_ap_cents": per_ap["median"], "q1_per_ap_cents": per_ap["q1"],
            "q3_per_ap_cents": per_ap["q3"], "min_per_ap_cents": per_ap["min"],
            "max_per_ap_cents": per_ap["max"], "mean_total_cents": total["mean"],
            "mean_surplus_bps": surplus["mean"], "std_surplus_bps": surplus["std"],
            "share_fiber": share(n_f), "share_mmw": share(n_m), "share_fso": share(n_o),
            "feasible_fraction": (sum(r.feasible for r in ok) / len(ok)) if ok else 0.0,
        })
    return out


PLOT_FILES = {
    "tco_vs_g": CELL_KEYS + ("mean_per_ap_cents", "std_per_ap_cents"),
    "surplus_vs_g": CELL_KEYS + ("mean_surplus_bps", "std_surplus_bps"),
    "tech_share_vs_w": CELL_KEYS + ("share_fiber", "share_mmw", "share_fso"),
    "boxplot": CELL_KEYS + ("n", "min_per_ap_cents", "q1_per_ap_cents", "median_per_ap_cents",
                            "q3_per_ap_cents", "max_per_ap_cents"),
    "failure_vs_p": ("scheme", "G", "p", "runs", "mean", "std"),
}


def failure_rows(report: FailureReport) -> list[dict]:
    rows = []
    for key in report.keys():
        scheme, G, p = key
        v = report.runs[key]
        rows.append({"scheme": scheme, "G": G, "p": p, "runs": len(v),
                     "mean": float(np.mean(v)), "std": float(np.std(v))})
    return rows


SCHEMA = {
    "records.csv": {
        "realization": "realization index", "W": "number of DUs", "G": "requested groups",
        "fs": "functional split (7.2x | 8) or 'traffic'",
        "traffic_scale": "hotspot amplitude multiplier (1 outside traffic mode)",
        "scheme": "rs | hs", "method": "optimized | all_fiber | all_mmw | heuristic",
        "groups": "groups actually formed", "n_aps": "L",
        "total_cents": "TCO in integer cents", "tier1_cents": "intra-group cost, cents",
        "tier2_cents": "leading links plus DU-side equipment, cents",
        "per_ap_cents": "total / L rounded half up, cents",
        "surplus_bps": "sum over leading links of (assigned rate - threshold), integer bit/s",
        "n_fiber": "leading links on fiber", "n_mmw": "leading links on mmWave",
        "n_fso": "leading links on FSO", "n_excluded": "leading APs no technology can serve",
        "feasible": "1 if no constraint violated", "optimal": "1 if proven optimal and feasible",
        "n_violations": "number of violated constraints", "error": "exception text, empty if ok",
    },
    "summary.csv": "per (W, G, fs, traffic_scale, scheme, method): counts, per-AP cost mean/std "
                   "(population)/median/quartiles, mean total, surplus mean/std, technology "
                   "shares in percent of leading links, feasible fraction",
    "plotdata": {name: list(cols) for name, cols in PLOT_FILES.items()},
}


def _write_rows(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) if isinstance(row[c], float) and c not in ("traffic_scale", "p")
                        else (f"{row[c]:g}" if isinstance(row[c], float) else row[c])
                        for c in columns])


def _versions() -> dict:
    import numba
    import scipy

    from . import __version__
    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__, "fronthaul": __version__}


def emit(records: Sequence[ExperimentRecord], summaries: Sequence[dict], output_dir: str | Path,
         failures: FailureReport | None = None, config: RunConfig | None = None,
         extra_meta: dict | None = None) -> Path:
    out = Path(output_dir)
    (out / "plotdata").mkdir(parents=True, exist_ok=True)
    with open(out / "records.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(RECORD_COLUMNS)
        for r in sorted(records, key=ExperimentRecord.sort_key):
            w.writerow(_record_row(r))
    _write_rows(out / "summary.csv", SUMMARY_COLUMNS, summaries)
    fail_rows = failure_rows(failures) if failures is not None else []
    for name, cols in PLOT_FILES.items():
        _write_rows(out / "plotdata" / f"{name}.csv", cols,
                    fail_rows if name == "failure_vs_p" else summaries)
    meta = {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict() if config is not None else None,
        "master_seed": config.master_seed if config is not None else None,
        "seeds": SEED_SCHEME,
        "versions": _versions(),
        "schema": SCHEMA,
    }
    if extra_meta:
        meta.update(extra_meta)
    with open(out / "run_meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out
