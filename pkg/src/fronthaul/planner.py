"""Tier-2 technology selection: exact ILP solve plus the benchmark schemes.

Each leading AP gets exactly one of fiber, mmWave or FSO. The objective is
the sum of link costs plus, per DU, one OTN for every ``otn_capacity`` fiber
links and one mmWave array if any mmWave link is used. Constraints are the
per-AP capacity threshold and a per-DU average availability floor.

The problem separates by DU, so each DU is solved on its own by
branch-and-bound on LP relaxations (HiGHS through ``scipy.optimize.linprog``).
All costs are integer cents; candidate solutions are always priced exactly,
the LP is only used for bounds.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .cost import (TECHS, CostBreakdown, CostParams, Tech, assemble_breakdown, cents,
                   link_cents, otn_count, tier1_cents)
from .linkbudget import LinkBudget

log = logging.getLogger(__name__)

EPSILON = 1e-6
_INT_TOL = 1e-6


class InfeasibleLink(Exception):
    """No technology reaches the AP's demand threshold."""


@dataclass(frozen=True)
class Violation:
    constraint: str  # "capacity" | "availability"
    target: int  # AP id for capacity, DU id for availability
    magnitude: float  # bit/s short of threshold, or availability units short

    def to_dict(self) -> dict:
        return {"constraint": self.constraint, "id": self.target, "magnitude": self.magnitude}


@dataclass(frozen=True)
class DuSubproblem:
    """One DU's slice of the ILP.

    ``cost[i, t]`` is the link cost in cents of AP ``aps[i]`` on technology
    ``TECHS[t]``; ``allowed[i, t]`` is False where the rate misses the
    threshold (the variable is fixed to 0). Availability is held as exact
    integers: ``slack[i, t] = D * (zeta_t - zeta_SLA)``, and the constraint
    reads ``sum_i slack[i, t_i] >= 0``.
    """

    du: int
    aps: tuple[int, ...]
    cost: np.ndarray
    allowed: np.ndarray
    slack: np.ndarray

    @property
    def size(self) -> int:
        return len(self.aps)


@dataclass(frozen=True)
class IlpInstance:
    subproblems: tuple[DuSubproblem, ...]
    excluded: tuple[int, ...]  # leading APs with no capacity-feasible technology
    theta: int
    du_fiber: int  # cents
    du_mmw: int  # cents
    sla: float
    epsilon: float
    tier1: int
    n_aps: int
    n_du: int
    du_pool: int  # cents added to totals, 0 unless requested
    budgets: dict = field(repr=False, default_factory=dict)  # ap -> LinkBudget
    thresholds: dict = field(repr=False, default_factory=dict)  # ap -> bit/s
    params: CostParams = field(repr=False, default_factory=CostParams)

    def n_variables(self) -> int:
        return sum(int(s.allowed.sum()) + 2 for s in self.subproblems)


@dataclass(frozen=True)
class ApRow:
    ap: int
    du: int
    tech: Tech
    distance: float
    rate: float
    threshold: float
    link_cost: int


@dataclass
class PlanSolution:
    method: str
    assignment: dict  # ap -> Tech
    kappa: dict  # du -> int
    v: dict  # du -> bool
    breakdown: CostBreakdown
    feasible: bool
    optimal: bool
    surplus: float
    surplus_per_ap: dict
    violations: list
    rows: list
    nodes: int = 0

    @property
    def total(self) -> int:
        return self.breakdown.total

    def tech_counts(self) -> dict:
        out = {t: 0 for t in TECHS}
        for t in self.assignment.values():
            out[t] += 1
        return out

    def to_dict(self) -> dict:
        b = self.breakdown
        return {
            "method": self.method,
            "feasible": self.feasible,
            "optimal": self.optimal,
            "assignment": {str(ap): t.value for ap, t in self.assignment.items()},
            "kappa": {str(w): k for w, k in self.kappa.items()},
            "v": {str(w): bool(x) for w, x in self.v.items()},
            "breakdown_cents": {
                "tier1": b.tier1, "tier2_fiber": b.tier2_fiber, "tier2_mmw": b.tier2_mmw,
                "tier2_fso": b.tier2_fso, "du_side_fiber": b.du_side_fiber,
                "du_side_mmw": b.du_side_mmw, "du_pool": b.du_pool, "total": b.total,
            },
            "per_ap_dollars": b.per_ap,
            "surplus_bps": self.surplus,
            "violations": [x.to_dict() for x in self.violations],
        }


# ------------------------------------------------------------------ building


def _exact(x: float) -> Fraction:
    return Fraction(str(x))


def build_ilp(scenario, budgets: Sequence[LinkBudget], demand, params: CostParams,
              sla: float = 0.9999, epsilon: float = EPSILON,
              include_du_pool: bool = False) -> IlpInstance:
    """Collect cost, capacity and availability data per DU.

    ``demand`` is anything indexable by leading AP id (a ``DemandProfile`` or
    a plain dict of thresholds).
    """
    by_ap = {b.ap: b for b in budgets}
    thresholds = {b.ap: float(demand[b.ap]) for b in budgets}

    zetas = [_exact(sla)]
    for b in budgets:
        zetas += [_exact(b.avail_fiber), _exact(b.avail_mmw), _exact(b.avail_fso)]
    den = 1
    for z in zetas:
        den = den * z.denominator // math.gcd(den, z.denominator)
    sla_int = int(_exact(sla) * den)

    groups: dict[int, list[LinkBudget]] = {}
    for b in budgets:
        groups.setdefault(b.du, []).append(b)

    subs = []
    excluded = []
    for du in sorted(groups):
        rows = sorted(groups[du], key=lambda b: b.ap)
        aps, cost, allowed, slack = [], [], [], []
        for b in rows:
            rates = (b.rate_fiber, b.rate_mmw, b.rate_fso)
            ok = [r >= thresholds[b.ap] for r in rates]
            if not any(ok):
                excluded.append(b.ap)
                continue
            aps.append(b.ap)
            allowed.append(ok)
            cost.append([link_cents(t, b.distance, params) for t in TECHS])
            slack.append([int(_exact(z) * den) - sla_int
                          for z in (b.avail_fiber, b.avail_mmw, b.avail_fso)])
        subs.append(DuSubproblem(
            du, tuple(aps),
            np.array(cost, dtype=np.int64).reshape(-1, 3),
            np.array(allowed, dtype=bool).reshape(-1, 3),
            np.array(slack, dtype=np.int64).reshape(-1, 3)))
    if excluded:
        log.info("%d leading APs have no capacity-feasible technology", len(excluded))

    n_du = scenario.W if scenario is not None else (max(groups) + 1 if groups else 0)
    return IlpInstance(
        subproblems=tuple(subs), excluded=tuple(sorted(excluded)),
        theta=params.otn_capacity, du_fiber=cents(params.du_fiber), du_mmw=cents(params.mmw_du),
        sla=sla, epsilon=epsilon,
        tier1=tier1_cents(scenario, params) if scenario is not None else 0,
        n_aps=scenario.L if scenario is not None else len(budgets), n_du=n_du,
        du_pool=n_du * cents(params.du_pool) if include_du_pool else 0,
        budgets=by_ap, thresholds=thresholds, params=params)


# ------------------------------------------------------------------ exact pricing


def _price(sub: DuSubproblem, choice: np.ndarray, theta: int, du_fiber: int, du_mmw: int) -> int:
    idx = np.arange(sub.size)
    n_fiber = int(np.sum(choice == 0))
    has_mmw = bool(np.any(choice == 1))
    return (int(sub.cost[idx, choice].sum()) + otn_count(n_fiber, theta) * du_fiber
            + int(has_mmw) * du_mmw)


def _available(sub: DuSubproblem, choice: np.ndarray) -> bool:
    return int(sub.slack[np.arange(sub.size), choice].sum()) >= 0


# ------------------------------------------------------------------ branch and bound


class _Relaxation:
    """LP relaxation over one or more DU subproblems with per-node bounds."""

    def __init__(self, subs: Sequence[DuSubproblem], theta: int, du_fiber: int, du_mmw: int,
                 epsilon: float, availability: bool):
        self.subs = subs
        cols = []  # (sub index, ap row, tech)
        for s, sub in enumerate(subs):
            for i in range(sub.size):
                for t in range(3):
                    if sub.allowed[i, t]:
                        cols.append((s, i, t))
        self.cols = cols
        ny = len(cols)
        nd = len(subs)
        self.ny = ny
        self.kappa0 = ny
        self.v0 = ny + nd
        n = ny + 2 * nd
        c = np.zeros(n)
        for j, (s, i, t) in enumerate(cols):
            c[j] = subs[s].cost[i, t]
        c[self.kappa0:self.v0] = du_fiber
        c[self.v0:] = du_mmw
        self.c = c

        a_eq, b_eq = [], []
        for s, sub in enumerate(subs):
            for i in range(sub.size):
                row = np.zeros(n)
                for j, col in enumerate(cols):
                    if col[0] == s and col[1] == i:
                        row[j] = 1.0
                a_eq.append(row)
                b_eq.append(1.0)
        a_ub, b_ub = [], []
        for s, sub in enumerate(subs):
            fiber = np.zeros(n)
            mmw = np.zeros(n)
            avail = np.zeros(n)
            for j, (s2, i, t) in enumerate(cols):
                if s2 != s:
                    continue
                avail[j] = sub.slack[i, t]
                if t == 0:
                    fiber[j] = 1.0
                elif t == 1:
                    mmw[j] = 1.0
            k, v = self.kappa0 + s, self.v0 + s
            # theta*kappa >= n_fiber and theta*kappa <= n_fiber + theta - theta*eps
            r = fiber.copy()
            r[k] = -theta
            a_ub.append(r)
            b_ub.append(0.0)
            r = -fiber
            r[k] = theta
            a_ub.append(r)
            b_ub.append(theta - theta * epsilon)
            # M*v >= n_mmw and n_mmw >= v
            r = mmw.copy()
            r[v] = -max(sub.size, 1)
            a_ub.append(r)
            b_ub.append(0.0)
            r = -mmw
            r[v] = 1.0
            a_ub.append(r)
            b_ub.append(0.0)
            if availability:
                a_ub.append(-avail)
                b_ub.append(0.0)
        self.a_eq = np.array(a_eq) if a_eq else None
        self.b_eq = np.array(b_eq) if b_eq else None
        self.a_ub = np.array(a_ub) if a_ub else None
        self.b_ub = np.array(b_ub) if b_ub else None
        self.kappa_max = [math.ceil(sub.size / theta) for sub in subs]

    def solve(self, fixed_tech: dict, fixed_kappa: dict, fixed_v: dict):
        bounds = []
        for (s, i, t) in self.cols:
            f = fixed_tech.get((s, i))
            bounds.append((0.0, 1.0) if f is None else ((1.0, 1.0) if f == t else (0.0, 0.0)))
        for s in range(len(self.subs)):
            k = fixed_kappa.get(s)
            bounds.append((0.0, float(self.kappa_max[s])) if k is None else (float(k), float(k)))
        for s in range(len(self.subs)):
            v = fixed_v.get(s)
            bounds.append((0.0, 1.0) if v is None else (float(v), float(v)))
        res = linprog(self.c, A_ub=self.a_ub, b_ub=self.b_ub, A_eq=self.a_eq, b_eq=self.b_eq,
                      bounds=bounds, method="highs")
        if res.status != 0:
            return None, None
        return float(res.fun), res.x


def _branch_and_bound(subs: Sequence[DuSubproblem], theta: int, du_fiber: int, du_mmw: int,
                      epsilon: float, availability: bool = True):
    """Exact minimum over the joint choices of ``subs``.

    Returns ``(choices, cost, nodes)`` with one technology-index array per
    subproblem, or ``(None, None, nodes)`` if no choice satisfies the
    constraints.
    """
    if all(sub.size == 0 for sub in subs):
        return [np.zeros(0, dtype=np.int64) for _ in subs], 0, 0
    lp = _Relaxation(subs, theta, du_fiber, du_mmw, epsilon, availability)

    def price(choices):
        return sum(_price(sub, ch, theta, du_fiber, du_mmw) for sub, ch in zip(subs, choices))

    def admissible(choices):
        return all(np.all(sub.allowed[np.arange(sub.size), ch]) and
                   (not availability or _available(sub, ch))
                   for sub, ch in zip(subs, choices))

    # start from the cheapest capacity-feasible link per AP if it is admissible
    best_choice, best_cost = None, None
    greedy = []
    for sub in subs:
        masked = np.where(sub.allowed, sub.cost, np.iinfo(np.int64).max)
        greedy.append(np.argmin(masked, axis=1) if sub.size else np.zeros(0, dtype=np.int64))
    if admissible(greedy):
        best_choice, best_cost = greedy, price(greedy)

    spreads = []
    for sub in subs:
        sp = []
        for i in range(sub.size):
            vals = sorted(int(sub.cost[i, t]) for t in range(3) if sub.allowed[i, t])
            sp.append(vals[1] - vals[0] if len(vals) > 1 else 0)
        spreads.append(sp)

    nodes = 0
    stack = [({}, {}, {})]
    while stack:
        fixed_tech, fixed_kappa, fixed_v = stack.pop()
        nodes += 1
        bound, x = lp.solve(fixed_tech, fixed_kappa, fixed_v)
        if bound is None:
            continue
        if best_cost is not None:
            margin = 1e-6 * max(1.0, abs(bound)) + 1e-3
            if bound - margin > best_cost - 1:
                continue

        # v first, then kappa, then the fractional AP with the largest cost spread
        s_v = next((s for s in range(len(subs)) if s not in fixed_v and subs[s].size), None)
        if s_v is not None:
            for val in (1, 0):
                nv = dict(fixed_v)
                nv[s_v] = val
                stack.append((fixed_tech, fixed_kappa, nv))
            continue
        s_k = next((s for s in range(len(subs)) if s not in fixed_kappa and subs[s].size), None)
        if s_k is not None:
            for k in range(lp.kappa_max[s_k], -1, -1):
                nk = dict(fixed_kappa)
                nk[s_k] = k
                stack.append((fixed_tech, nk, fixed_v))
            continue

        frac = {}
        for j, (s, i, t) in enumerate(lp.cols):
            if abs(x[j] - round(x[j])) > _INT_TOL:
                frac[(s, i)] = True
        if frac:
            s, i = max(frac, key=lambda key: (spreads[key[0]][key[1]], -key[0], -key[1]))
            techs = [t for t in range(3) if subs[s].allowed[i, t]]
            techs.sort(key=lambda t: -subs[s].cost[i, t])  # cheapest popped first
            for t in techs:
                nt = dict(fixed_tech)
                nt[(s, i)] = t
                stack.append((nt, fixed_kappa, fixed_v))
            continue

        choices = [np.zeros(sub.size, dtype=np.int64) for sub in subs]
        for j, (s, i, t) in enumerate(lp.cols):
            if x[j] > 0.5:
                choices[s][i] = t
        if not admissible(choices):
            continue
        cost = price(choices)
        if best_cost is None or cost < best_cost:
            best_choice, best_cost = choices, cost
    return best_choice, best_cost, nodes


# ------------------------------------------------------------------ solutions


def _finish(method: str, inst: IlpInstance, assignment: dict, violations: list,
            optimal: bool, nodes: int = 0) -> PlanSolution:
    p = inst.params
    distances = {ap: inst.budgets[ap].distance for ap in assignment}
    du_of = {ap: inst.budgets[ap].du for ap in assignment}
    bd = assemble_breakdown(inst.tier1, assignment, distances, du_of, p, inst.n_aps)
    if inst.du_pool:
        bd = CostBreakdown(bd.tier1, bd.tier2_fiber, bd.tier2_mmw, bd.tier2_fso,
                           bd.du_side_fiber, bd.du_side_mmw, inst.du_pool, bd.n_aps)
    kappa = {w: 0 for w in range(inst.n_du)}
    v = {w: False for w in range(inst.n_du)}
    n_fiber: dict[int, int] = {}
    for ap, t in assignment.items():
        w = du_of[ap]
        n_fiber[w] = n_fiber.get(w, 0) + (t is Tech.FIBER)
        if t is Tech.MMW:
            v[w] = True
    for w, n in n_fiber.items():
        kappa[w] = otn_count(n, inst.theta)

    rows = []
    per_ap = {}
    for ap in sorted(assignment):
        b = inst.budgets[ap]
        t = assignment[ap]
        rate = {Tech.FIBER: b.rate_fiber, Tech.MMW: b.rate_mmw, Tech.FSO: b.rate_fso}[t]
        psi = inst.thresholds[ap]
        per_ap[ap] = rate - psi
        rows.append(ApRow(ap, b.du, t, b.distance, rate, psi, link_cents(t, b.distance, p)))
    violations = sorted(violations, key=lambda x: (x.constraint, x.target))
    feasible = not violations
    return PlanSolution(method, dict(sorted(assignment.items())), kappa, v, bd, feasible,
                        optimal and feasible, float(sum(per_ap.values())), per_ap, violations,
                        rows, nodes)


def _excluded_violations(inst: IlpInstance) -> list[Violation]:
    out = []
    for ap in inst.excluded:
        b = inst.budgets[ap]
        best = max(b.rate_fiber, b.rate_mmw, b.rate_fso)
        out.append(Violation("capacity", ap, inst.thresholds[ap] - best))
    return out


def _availability_shortfall(inst: IlpInstance, sub: DuSubproblem, choice: np.ndarray) -> float:
    got = 0.0
    for ap, t in zip(sub.aps, choice):
        b = inst.budgets[ap]
        got += (b.avail_fiber, b.avail_mmw, b.avail_fso)[t]
    return sub.size * inst.sla - got


def solve_ilp(inst: IlpInstance, decompose: bool = True) -> PlanSolution:
    """Provably optimal technology assignment (over capacity-feasible APs).

    APs no technology can serve are left out and reported as capacity
    violations. A DU whose availability floor cannot be met is solved without
    that floor and reported, so the plan stays usable as a diagnostic.
    """
    violations = _excluded_violations(inst)
    assignment: dict[int, Tech] = {}
    nodes = 0
    optimal = True
    args = (inst.theta, inst.du_fiber, inst.du_mmw, inst.epsilon)

    if decompose:
        batches = [[sub] for sub in inst.subproblems]
    else:
        batches = [list(inst.subproblems)]
    for batch in batches:
        choices, cost, n = _branch_and_bound(batch, *args)
        nodes += n
        if choices is None:
            # some DU cannot reach the availability floor; re-solve per DU to
            # find which and fall back to the cheapest plan ignoring the floor
            optimal = False
            choices = []
            for sub in batch:
                ch, _, n = _branch_and_bound([sub], *args)
                nodes += n
                if ch is None:
                    ch, _, n = _branch_and_bound([sub], *args, availability=False)
                    nodes += n
                    violations.append(Violation(
                        "availability", sub.du, _availability_shortfall(inst, sub, ch[0])))
                choices.append(ch[0])
        for sub, ch in zip(batch, choices):
            for ap, t in zip(sub.aps, ch):
                assignment[ap] = TECHS[int(t)]
    return _finish("optimized", inst, assignment, violations, optimal, nodes)


def _benchmark(inst: IlpInstance, method: str, pick) -> PlanSolution:
    violations = _excluded_violations(inst)
    assignment = {}
    for sub in inst.subproblems:
        choice = np.array([pick(inst.budgets[ap]) for ap in sub.aps], dtype=np.int64)
        for ap, t in zip(sub.aps, choice):
            assignment[ap] = TECHS[int(t)]
            b = inst.budgets[ap]
            rate = (b.rate_fiber, b.rate_mmw, b.rate_fso)[t]
            if rate < inst.thresholds[ap]:
                violations.append(Violation("capacity", ap, inst.thresholds[ap] - rate))
        if sub.size and not _available(sub, choice):
            violations.append(Violation("availability", sub.du,
                                        _availability_shortfall(inst, sub, choice)))
    return _finish(method, inst, assignment, violations, optimal=False)


def benchmark_all_fiber(inst: IlpInstance) -> PlanSolution:
    return _benchmark(inst, "all_fiber", lambda b: 0)


def benchmark_all_mmw(inst: IlpInstance) -> PlanSolution:
    return _benchmark(inst, "all_mmw", lambda b: 1)


def benchmark_heuristic(inst: IlpInstance) -> PlanSolution:
    """mmWave everywhere, switched to fiber where mmWave misses the threshold."""
    return _benchmark(inst, "heuristic",
                      lambda b: 1 if b.rate_mmw >= inst.thresholds[b.ap] else 0)


def surplus_capacity(solution: PlanSolution) -> tuple[float, dict]:
    """Total and per-AP (rate of assigned technology - threshold), bit/s."""
    return solution.surplus, dict(solution.surplus_per_ap)


def plan_all(inst: IlpInstance) -> list[PlanSolution]:
    """Optimized plan followed by the three benchmarks."""
    return [solve_ilp(inst), benchmark_all_fiber(inst), benchmark_all_mmw(inst),
            benchmark_heuristic(inst)]


# ------------------------------------------------------------------ export


def solution_to_json(solution: PlanSolution, fh: IO[str]) -> None:
    json.dump(solution.to_dict(), fh, indent=2, sort_keys=True)
    fh.write("\n")


SOLUTION_COLUMNS = ("ap", "du", "tech", "d_m", "rate_bps", "threshold_bps", "link_cost_cents")


def write_solution_csv(solution: PlanSolution, fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow(SOLUTION_COLUMNS)
    for r in solution.rows:
        w.writerow([r.ap, r.du, r.tech.value, f"{r.distance:.3f}", int(round(r.rate)),
                    int(round(r.threshold)), r.link_cost])


def iter_violations(solutions: Iterable[PlanSolution]):
    for s in solutions:
        for v in s.violations:
            yield s.method, v
