"""Total cost of ownership for the two fronthaul tiers.

Tier 1 is the fiber stripe/tree inside each AP group and does not depend on
the technology chosen for leading APs. Tier 2 covers the leading-AP links
and the equipment they need at the DU. Amounts are configured in dollars and
summed as integer cents so totals do not depend on summation order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping


class Tech(str, enum.Enum):
    FIBER = "fiber"
    MMW = "mmw"
    FSO = "fso"


TECHS = (Tech.FIBER, Tech.MMW, Tech.FSO)


def cents(dollars: float) -> int:
    return int(round(dollars * 100))


@dataclass(frozen=True)
class CostParams:
    """Cost model inputs in dollars (O&M in dollars per year)."""

    fiber_per_meter: float = 26.0
    onu: float = 6502.0
    otn: float = 61727.0
    olt: float = 20100.0
    other: float = 0.0
    du_fiber: float = 81827.0
    fiber_om: float = 2285.0
    mmw_du: float = 34500.0
    mmw_rx: float = 6000.0
    mmw_om: float = 13000.0
    fso_bundle: float = 15000.0
    fso_install: float = 0.0
    fso_om: float = 13000.0
    du_pool: float = 91035.0
    period: int = 1
    otn_capacity: int = 16
    # treat the FSO bundle price as already covering O&M for the whole period
    fso_bundle_includes_om: bool = False

    def errors(self) -> list[str]:
        out = []
        for k, v in asdict(self).items():
            if isinstance(v, bool):
                continue
            if v < 0:
                out.append(f"costs.{k} must be >= 0")
        if self.otn_capacity < 1:
            out.append("costs.otn_capacity must be >= 1")
        if cents(self.du_fiber) != cents(self.olt) + cents(self.otn) + cents(self.other):
            out.append(f"costs.du_fiber ({self.du_fiber}) must equal olt + otn + other "
                       f"({self.olt + self.otn + self.other})")
        return out


# ---------------------------------------------------------------- integer cents


def fiber_link_cents(d: float, p: CostParams) -> int:
    """ONU plus period O&M plus trenching over ``d`` meters."""
    if d < 0:
        raise ValueError(f"fiber length must be >= 0, got {d}")
    return cents(p.onu) + p.period * cents(p.fiber_om) + int(round(cents(p.fiber_per_meter) * d))


def mmw_link_cents(p: CostParams) -> int:
    return cents(p.mmw_rx) + p.period * cents(p.mmw_om)


def fso_link_cents(p: CostParams) -> int:
    om = 0 if p.fso_bundle_includes_om else p.period * cents(p.fso_om)
    return cents(p.fso_bundle) + cents(p.fso_install) + om


def link_cents(tech: Tech | str, d: float, p: CostParams) -> int:
    tech = Tech(tech)
    if tech is Tech.FIBER:
        return fiber_link_cents(d, p)
    if tech is Tech.MMW:
        return mmw_link_cents(p)
    return fso_link_cents(p)


def du_side_cents(kappa: int, has_mmw: bool, p: CostParams) -> int:
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    return kappa * cents(p.du_fiber) + int(bool(has_mmw)) * cents(p.mmw_du)


def tier1_cents(scenario, p: CostParams) -> int:
    """ONUs at every non-leading AP plus the intra-group fiber."""
    n_nonleading = sum(len(t.members) - 1 for t in scenario.topologies)
    length = sum(int(round(cents(p.fiber_per_meter) * t.total_length)) for t in scenario.topologies)
    return n_nonleading * cents(p.onu) + length


def otn_count(n_fiber: int, capacity: int) -> int:
    """Smallest number of OTNs serving ``n_fiber`` fiber links."""
    return math.ceil(n_fiber / capacity) if n_fiber > 0 else 0


# ---------------------------------------------------------------- dollar API


def fiber_link_cost(d: float, p: CostParams) -> float:
    return fiber_link_cents(d, p) / 100


def mmw_link_cost(p: CostParams) -> float:
    return mmw_link_cents(p) / 100


def fso_link_cost(p: CostParams) -> float:
    return fso_link_cents(p) / 100


def du_side_costs(kappa: int, has_mmw: bool, p: CostParams) -> float:
    return du_side_cents(kappa, has_mmw, p) / 100


def tier1_cost(scenario, p: CostParams) -> float:
    return tier1_cents(scenario, p) / 100


# ---------------------------------------------------------------- breakdown


@dataclass(frozen=True)
class CostBreakdown:
    """TCO split by component, every field in integer cents."""

    tier1: int
    tier2_fiber: int
    tier2_mmw: int
    tier2_fso: int
    du_side_fiber: int
    du_side_mmw: int
    du_pool: int
    n_aps: int

    @property
    def total(self) -> int:
        return (self.tier1 + self.tier2_fiber + self.tier2_mmw + self.tier2_fso
                + self.du_side_fiber + self.du_side_mmw + self.du_pool)

    @property
    def tier2(self) -> int:
        return self.tier2_fiber + self.tier2_mmw + self.tier2_fso + self.du_side_fiber + self.du_side_mmw

    @property
    def per_ap(self) -> float:
        """Dollars per AP."""
        return self.total / 100 / self.n_aps if self.n_aps else 0.0


def assemble_breakdown(tier1: int, choices: Mapping[int, Tech], distances: Mapping[int, float],
                       du_of: Mapping[int, int], p: CostParams, n_aps: int,
                       n_du: int = 0, include_du_pool: bool = False) -> CostBreakdown:
    """Price a full technology assignment term by term.

    ``choices`` maps leading AP -> technology; OTN counts and mmWave DU
    equipment follow from the per-DU totals.
    """
    by_tech = {t: 0 for t in TECHS}
    n_fiber: dict[int, int] = {}
    any_mmw: dict[int, bool] = {}
    for ap, tech in choices.items():
        tech = Tech(tech)
        by_tech[tech] += link_cents(tech, distances[ap], p)
        w = du_of[ap]
        n_fiber[w] = n_fiber.get(w, 0) + (tech is Tech.FIBER)
        any_mmw[w] = any_mmw.get(w, False) or tech is Tech.MMW
    du_fiber = sum(otn_count(n, p.otn_capacity) * cents(p.du_fiber) for n in n_fiber.values())
    du_mmw = sum(cents(p.mmw_du) for v in any_mmw.values() if v)
    pool = n_du * cents(p.du_pool) if include_du_pool else 0
    return CostBreakdown(tier1, by_tech[Tech.FIBER], by_tech[Tech.MMW], by_tech[Tech.FSO],
                         du_fiber, du_mmw, pool, n_aps)


def total_link_cents(items: Iterable[tuple[Tech, float]], p: CostParams) -> int:
    return sum(link_cents(t, d, p) for t, d in items)
