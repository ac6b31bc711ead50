"""Cascading AP outages in serial (radio stripe) and tree groups.

A failed AP takes down every AP whose path to the group's leading AP runs
through it. Runs are vectorized: one boolean row per Monte Carlo run, and
failures are pushed from parent to child in breadth-first order.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from typing import IO, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class FailureScenario:
    p: float
    seed: int
    main_failed: frozenset
    cascaded: frozenset  # disjoint from main_failed
    n_aps: int

    @property
    def total(self) -> frozenset:
        return self.main_failed | self.cascaded

    @property
    def fraction(self) -> float:
        return len(self.total) / self.n_aps if self.n_aps else 0.0


@dataclass
class FailureReport:
    """Per-run failure fractions keyed by (scheme, G, p)."""

    runs: dict = field(default_factory=dict)  # (scheme, G, p) -> np.ndarray
    # (scheme, G, p) -> list of per-batch arrays: mean failed APs per group
    per_group: dict = field(default_factory=dict)

    def mean(self, scheme: str, G: int, p: float) -> float:
        return float(np.mean(self.runs[(scheme, G, p)]))

    def std(self, scheme: str, G: int, p: float) -> float:
        return float(np.std(self.runs[(scheme, G, p)], ddof=1)) if len(self.runs[(scheme, G, p)]) > 1 else 0.0

    def add(self, scheme: str, G: int, p: float, fractions: np.ndarray, per_group: np.ndarray):
        """Append runs; per-group means are kept per batch since batches may use different fields."""
        key = (scheme, G, p)
        prev = self.runs.get(key)
        fractions = np.asarray(fractions, dtype=float)
        self.runs[key] = fractions if prev is None else np.concatenate([prev, fractions])
        self.per_group.setdefault(key, []).append(per_group)

    def keys(self):
        return sorted(self.runs, key=lambda k: (k[0], k[1], k[2]))


def n_main_failures(L: int, p: float) -> int:
    """round(p*L) with halves rounded up."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"failure fraction {p} outside [0, 1]")
    return min(L, int(math.floor(p * L + 0.5)))


def failure_order(L: int, seed) -> np.ndarray:
    """Random order in which APs fail; the first ``round(p*L)`` are the main failures.

    Taking prefixes of one permutation makes the failure sets nested in p.
    """
    return np.random.default_rng(seed).permutation(L)


def draw_main_failures(L: int, p: float, seed) -> frozenset:
    n = n_main_failures(L, p)
    return frozenset(int(i) for i in failure_order(L, seed)[:n])


def dependency_order(scenario) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Non-leading APs in breadth-first order from their leading AP, with parents.

    Also returns the group id of every AP.
    """
    nodes, parents = [], []
    group_of = np.full(scenario.L, -1, dtype=np.int64)
    for gid, topo in enumerate(scenario.topologies):
        adj: dict[int, list[int]] = {m: [] for m in topo.members}
        for a, b, *_ in topo.edges:
            adj[a].append(b)
            adj[b].append(a)
        root = topo.leading_ap
        seen = {root}
        queue = deque([root])
        group_of[list(topo.members)] = gid
        while queue:
            u = queue.popleft()
            for w in sorted(adj[u]):
                if w not in seen:
                    seen.add(w)
                    nodes.append(w)
                    parents.append(u)
                    queue.append(w)
    return np.array(nodes, dtype=np.int64), np.array(parents, dtype=np.int64), group_of


def propagate_batch(scenario, main: np.ndarray, order=None) -> np.ndarray:
    """``main`` is a (runs, L) boolean mask; returns the mask of all failed APs."""
    nodes, parents, _ = order if order is not None else dependency_order(scenario)
    dead = np.array(main, dtype=bool, copy=True)
    for u, par in zip(nodes, parents):
        dead[:, u] |= dead[:, par]
    return dead


def propagate_failures(scenario, main_failed, p: float = float("nan"), seed: int = -1) -> FailureScenario:
    main = np.zeros((1, scenario.L), dtype=bool)
    main[0, list(main_failed)] = True
    dead = propagate_batch(scenario, main)[0]
    km = frozenset(int(i) for i in main_failed)
    kc = frozenset(int(i) for i in np.flatnonzero(dead)) - km
    return FailureScenario(p, seed, km, kc, scenario.L)


def resilience_runs(scenarios: Mapping[str, object], p_values: Sequence[float], runs: int,
                    seed, report: FailureReport | None = None, G: int | None = None) -> FailureReport:
    """Apply the same main failures to every scenario in ``scenarios``.

    All scenarios must share the AP field (same L and AP indices); typically
    the RS and HS builds of one grouping.
    """
    report = report or FailureReport()
    first = next(iter(scenarios.values()))
    L = first.L
    orders = np.stack([failure_order(L, [*np.atleast_1d(seed).tolist(), r]) for r in range(runs)])
    prepared = {name: dependency_order(sc) for name, sc in scenarios.items()}
    for p in p_values:
        n = n_main_failures(L, p)
        main = np.zeros((runs, L), dtype=bool)
        np.put_along_axis(main, orders[:, :n], True, axis=1)
        for name, sc in scenarios.items():
            dead = propagate_batch(sc, main, prepared[name])
            group_of = prepared[name][2]
            per_group = np.bincount(group_of, weights=dead.sum(axis=0), minlength=len(sc.topologies)) / runs
            g = G if G is not None else sc.G
            report.add(name, g, p, dead.sum(axis=1) / L, per_group)
    return report


def resilience_sweep(pair: Mapping[str, object], p_values: Sequence[float], runs: int,
                     seed: int = 0) -> FailureReport:
    """Mean and spread of the outage fraction for each scheme and p."""
    return resilience_runs(pair, p_values, runs, seed)


RUN_COLUMNS = ("scheme", "G", "p", "run", "failure_fraction")
SUMMARY_COLUMNS = ("scheme", "G", "p", "runs", "mean", "std")


def write_runs_csv(report: FailureReport, fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow(RUN_COLUMNS)
    for key in report.keys():
        scheme, G, p = key
        for r, frac in enumerate(report.runs[key]):
            w.writerow([scheme, G, f"{p:g}", r, f"{frac:.6f}"])


def write_summary_csv(report: FailureReport, fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow(SUMMARY_COLUMNS)
    for key in report.keys():
        scheme, G, p = key
        w.writerow([scheme, G, f"{p:g}", len(report.runs[key]),
                    f"{report.mean(*key):.6f}", f"{report.std(*key):.6f}"])
