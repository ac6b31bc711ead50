"""Command line entry point: ``fronthaul {plan,sweep,resilience,linkbudget,traffic-field}``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import experiment as ex
from .config import ParseError, RunConfig, ValidationError, parse_config
from .cost import Tech
from .demand import fs8_rate, fs72x_rate, generate_traffic_field, sample_traffic_field
from .linkbudget import build_link_budgets, fiber_rate, fso_rate, mmw_rate, write_budgets_csv
from .planner import build_ilp, plan_all, write_solution_csv
from .resilience import FailureReport, resilience_runs, write_runs_csv, write_summary_csv
from .topology import Scheme, generate_ap_field, nofac

log = logging.getLogger("fronthaul")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration (defaults if omitted)")
    p.add_argument("--seed", type=int, help="master seed, unsigned 64-bit")
    p.add_argument("--realizations", type=int, help="number of Monte Carlo realizations")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--scheme", choices=("rs", "hs", "both"), help="intra-group topology scheme")
    p.add_argument("--fs", choices=("7.2x", "8", "both"), help="functional split")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fronthaul",
                                     description="Hybrid fiber/mmWave/FSO fronthaul planning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan one scenario and write per-method solutions")
    _common(p)
    p.add_argument("--realization", type=int, default=0)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over the configured grid")
    _common(p)

    p = sub.add_parser("resilience", help="cascading failure simulation for RS and HS")
    _common(p)

    p = sub.add_parser("linkbudget", help="rates of each technology at given distances")
    _common(p)
    p.add_argument("distances", type=float, nargs="+", metavar="D", help="link length in m")
    p.add_argument("--draws", type=int, help="mmWave channel draws to average")

    p = sub.add_parser("traffic-field", help="sample a hotspot traffic field on a grid")
    _common(p)
    p.add_argument("--grid", type=int, default=50, help="grid points per side")
    return parser


def _load(args) -> RunConfig:
    cfg = parse_config(args.config)
    sweep = cfg.sweep
    if args.scheme:
        sweep = dataclasses.replace(sweep, schemes=("rs", "hs") if args.scheme == "both" else (args.scheme,))
    if args.fs:
        sweep = dataclasses.replace(sweep, fs=("7.2x", "8") if args.fs == "both" else (args.fs,))
    changes: dict = {"sweep": sweep}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.realizations is not None:
        changes["realizations"] = args.realizations
    if args.out is not None:
        changes["output_dir"] = str(args.out)
    return dataclasses.replace(cfg, **changes).validate()


def cmd_plan(cfg: RunConfig, args) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    r, W, G = args.realization, cfg.sweep.W[0], cfg.sweep.G[0]
    scheme = Scheme(cfg.sweep.schemes[0])
    topo = cfg.topology.topology(W, G, scheme)
    field = generate_ap_field(topo, seed=ex.derive_seed(cfg.master_seed, "field", r))
    sc = nofac(topo, field, seed=ex.derive_seed(cfg.master_seed, "topology", r, W, G))
    budgets = build_link_budgets(sc, cfg.fiber, cfg.mmw, cfg.fso,
                                 seed=ex.derive_seed(cfg.master_seed, "budget", r, W, G))
    with open(out / "budgets.csv", "w", newline="", encoding="utf-8") as fh:
        write_budgets_csv(budgets, fh)
    plans = {}
    for fs, scale, make_demand in ex._demand_cases(cfg, r, cfg.sweep.fs[:1]):
        inst = build_ilp(sc, budgets, make_demand(sc), cfg.costs, sla=cfg.sla,
                         include_du_pool=cfg.include_du_pool)
        for sol in plan_all(inst):
            plans[sol.method] = sol.to_dict()
            with open(out / f"plan_{sol.method}.csv", "w", newline="", encoding="utf-8") as fh:
                write_solution_csv(sol, fh)
            c = sol.tech_counts()
            print(f"{sol.method:10s} total ${sol.total / 100:>14,.2f}  per AP ${sol.breakdown.per_ap:>10,.2f}"
                  f"  fiber/mmw/fso {c[Tech.FIBER]}/{c[Tech.MMW]}/{c[Tech.FSO]}"
                  f"  surplus {sol.surplus / 1e9:8.2f} Gbps  feasible={sol.feasible}")
        break
    with open(out / "plan.json", "w", encoding="utf-8") as fh:
        json.dump({"realization": r, "W": W, "G": G, "scheme": scheme.value, "fs": fs,
                   "traffic_scale": scale, "groups": sc.G, "plans": plans}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    t0 = time.perf_counter()
    res = ex.run_sweep(cfg, jobs=args.jobs)
    summary = ex.summarize(res.records)
    ex.emit(res.records, summary, cfg.output_dir, res.failures, cfg,
            extra_meta={"runtime_s": {"wall": time.perf_counter() - t0, "units": res.runtimes}})
    n_err = sum(bool(r.error) for r in res.records)
    print(f"{len(res.records)} records written to {cfg.output_dir} ({n_err} with errors)")
    return 0


def cmd_resilience(cfg: RunConfig, args) -> int:
    out = Path(cfg.output_dir)
    (out / "plotdata").mkdir(parents=True, exist_ok=True)
    W = cfg.sweep.W[0]
    report = FailureReport()
    for G in cfg.sweep.G:
        for r in range(cfg.realizations):
            field = generate_ap_field(cfg.topology.topology(W, G, Scheme.RS),
                                      seed=ex.derive_seed(cfg.master_seed, "field", r))
            seed = ex.derive_seed(cfg.master_seed, "topology", r, W, G)
            pair = {s: nofac(cfg.topology.topology(W, G, s), field, seed=seed) for s in cfg.sweep.schemes}
            resilience_runs(pair, cfg.sweep.p, cfg.resilience_runs,
                            ex.derive_seed(cfg.master_seed, "resilience", r, G), report, G=G)
    with open(out / "resilience_runs.csv", "w", newline="", encoding="utf-8") as fh:
        write_runs_csv(report, fh)
    with open(out / "resilience_summary.csv", "w", newline="", encoding="utf-8") as fh:
        write_summary_csv(report, fh)
    ex._write_rows(out / "plotdata" / "failure_vs_p.csv", ex.PLOT_FILES["failure_vs_p"],
                   ex.failure_rows(report))
    for key in report.keys():
        print(f"{key[0]} G={key[1]} p={key[2]:g}: mean {report.mean(*key):.4f} "
              f"std {report.std(*key):.4f} over {len(report.runs[key])} runs")
    return 0


def cmd_linkbudget(cfg: RunConfig, args) -> int:
    mmw = cfg.mmw if args.draws is None else dataclasses.replace(cfg.mmw, n_draws=args.draws)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["d_m", "rate_fiber_bps", "rate_mmw_bps", "rate_fso_bps",
                "meets_fs7.2x", "meets_fs8"])
    t72, t8 = fs72x_rate(cfg.ofdm), fs8_rate(cfg.ofdm)
    for d in args.distances:
        rates = (fiber_rate(cfg.fiber, d), mmw_rate(d, mmw, seed=cfg.master_seed), fso_rate(d, cfg.fso))
        ok = lambda t: "".join(name for name, r in zip("FMO", rates) if r >= t) or "-"  # noqa: E731
        w.writerow([f"{d:.3f}", *(int(round(x)) for x in rates), ok(t72), ok(t8)])
    return 0


def cmd_traffic_field(cfg: RunConfig, args) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    side = cfg.topology.region_side
    tf = generate_traffic_field(side, cfg.traffic, ex.derive_seed(cfg.master_seed, "traffic", 0))
    tf = tf.scaled(cfg.sweep.traffic_scale[0])
    axis = (np.arange(args.grid) + 0.5) * side / args.grid
    xx, yy = np.meshgrid(axis, axis, indexing="xy")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    values = sample_traffic_field(tf, pts)
    with open(out / "traffic_grid.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["x_m", "y_m", "demand_bps"])
        for (x, y), v in zip(pts, values):
            w.writerow([f"{x:.3f}", f"{y:.3f}", int(round(v))])
    with open(out / "traffic_field.json", "w", encoding="utf-8") as fh:
        json.dump({"baseline_bps": tf.baseline, "cap_bps": tf.cap,
                   "hotspots": [{"center_m": list(h.center), "amplitude_bps": h.amplitude,
                                 "sigma_m": h.sigma} for h in tf.hotspots]}, fh, indent=2)
        fh.write("\n")
    print(f"traffic field with {tf.n_hotspots} hotspots, peak {values.max() / 1e9:.2f} Gbps, "
          f"written to {out}")
    return 0


COMMANDS = {"plan": cmd_plan, "sweep": cmd_sweep, "resilience": cmd_resilience,
            "linkbudget": cmd_linkbudget, "traffic-field": cmd_traffic_field}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
    except (ParseError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return 2
    return COMMANDS[args.command](cfg, args)


if __name__ == "__main__":
    sys.exit(main())
