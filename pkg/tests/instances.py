"""Random synthetic planning instances shared by the planner tests."""

from __future__ import annotations

import dataclasses

import numpy as np

from fronthaul.cost import CostParams
from fronthaul.linkbudget import LinkBudget

AVAIL_CHOICES = (1.0, 0.99999, 0.9975, 0.999, 0.99)


def random_instance(rng: np.random.Generator, max_aps: int = 12):
    """A random multi-DU instance with at most ``max_aps`` leading APs.

    Returns ``(budgets, thresholds, params, sla, problems)`` where
    ``problems`` is the per-DU dict form read by the brute-force oracle.
    """
    n_du = int(rng.integers(1, 4))
    sizes = rng.multinomial(int(rng.integers(1, max_aps + 1)), np.ones(n_du) / n_du)
    params = dataclasses.replace(
        CostParams(),
        fiber_per_meter=float(rng.choice([26.0, 5.0, 60.0, 0.5])),
        mmw_rx=float(rng.choice([19000.0, 5000.0, 40000.0])),
        fso_bundle=float(rng.choice([23000.0, 3000.0, 60000.0])),
        otn_capacity=int(rng.integers(1, 6)),
    )
    params = dataclasses.replace(params, olt=float(rng.choice([0.0, 40000.0])))
    params = dataclasses.replace(params, du_fiber=params.olt + params.otn + params.other)
    sla = float(rng.choice([0.9999, 0.999, 0.99, 0.9]))
    budgets, thresholds, problems = [], {}, []
    ap = 0
    for du, m in enumerate(sizes):
        rows = []
        for _ in range(m):
            d = float(rng.uniform(5.0, 900.0))
            rates = tuple(float(x) for x in rng.choice([2e9, 6e9, 10e9, 25e9], size=3))
            avail = tuple(float(x) for x in rng.choice(AVAIL_CHOICES, size=3))
            psi = float(rng.choice([1e9, 5e9, 8e9, 12e9]))
            budgets.append(LinkBudget(du, ap, ap, d, *rates, *avail))
            thresholds[ap] = psi
            rows.append({"d": d, "rates": rates, "psi": psi, "avail": avail})
            ap += 1
        problems.append(rows)
    return budgets, thresholds, params, sla, problems
