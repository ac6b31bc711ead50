import dataclasses
import io
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fronthaul.resilience import (FailureReport, dependency_order, draw_main_failures,
                                  n_main_failures, propagate_failures, resilience_runs,
                                  resilience_sweep, write_runs_csv, write_summary_csv)
from fronthaul.topology import (Group, Scheme, TopologyConfig, build_mst, build_radio_stripe,
                                generate_ap_field, nofac, with_scheme)


def downstream(topo, failed):
    """APs cut off from the leading AP, by plain graph search on surviving APs."""
    adj = {m: set() for m in topo.members}
    for a, b, _ in topo.edges:
        adj[a].add(b)
        adj[b].add(a)
    if topo.leading_ap in failed:
        return set(topo.members)
    seen, stack = {topo.leading_ap}, [topo.leading_ap]
    while stack:
        u = stack.pop()
        for w in adj[u] - seen - failed:
            seen.add(w)
            stack.append(w)
    return set(topo.members) - seen


@pytest.fixture(scope="module")
def pair():
    cfg = TopologyConfig(L=150, W=2, G_initial=15, g_s=12, g_m=3, region_side=800.0)
    field = generate_ap_field(cfg, seed=2)
    return {"rs": nofac(cfg, field, seed=3), "hs": nofac(with_scheme(cfg, Scheme.HS), field, seed=3)}


@given(st.integers(0, 2**32 - 1), st.floats(0, 0.5))
def test_cascade_matches_reachability(pair, seed, p):
    for sc in pair.values():
        main = draw_main_failures(sc.L, p, seed)
        fs = propagate_failures(sc, main, p, seed)
        expect = set()
        for t in sc.topologies:
            expect |= downstream(t, set(main) & set(t.members))
        assert fs.total == frozenset(expect) | main
        assert not fs.main_failed & fs.cascaded
        assert fs.fraction == len(fs.total) / sc.L


def test_single_failures_on_a_stripe(pair):
    sc = pair["rs"]
    t = max(sc.topologies, key=lambda t: len(t.members))
    order = list(t.order) if t.order[0] == t.leading_ap else list(reversed(t.order))
    for k, ap in enumerate(order):
        assert propagate_failures(sc, {ap}).total == frozenset(order[k:])


def test_leading_failure_takes_the_group(pair):
    for sc in pair.values():
        t = sc.topologies[0]
        assert propagate_failures(sc, {t.leading_ap}).total == frozenset(t.members)


def test_dependency_order_covers_every_nonleading_ap(pair):
    for sc in pair.values():
        nodes, parents, group_of = dependency_order(sc)
        assert len(nodes) == sc.L - sc.G
        pos = {int(n): i for i, n in enumerate(nodes)}
        for n, par in zip(nodes, parents):
            assert par not in pos or pos[par] < pos[int(n)]
        assert np.all(group_of >= 0)


def test_main_failure_count_rounds_half_up():
    assert n_main_failures(1000, 0.06) == 60
    assert n_main_failures(10, 0.25) == 3
    assert n_main_failures(10, 0.0) == 0 and n_main_failures(10, 1.0) == 10
    with pytest.raises(ValueError):
        n_main_failures(10, 1.5)


def test_failure_sets_are_nested_in_p():
    a = draw_main_failures(200, 0.05, 7)
    b = draw_main_failures(200, 0.15, 7)
    assert a < b and len(b) == 30


def test_runs_share_main_failures_and_tree_fails_less(pair):
    rep = resilience_runs(pair, [0.05, 0.1], runs=40, seed=1)
    G = pair["rs"].G
    for p in (0.05, 0.1):
        rs, hs = rep.runs[("rs", G, p)], rep.runs[("hs", G, p)]
        assert len(rs) == len(hs) == 40
        assert np.all(rs >= 0.05 * 0.99 if p == 0.05 else rs >= 0.1 * 0.99)
        assert rep.mean("hs", G, p) <= rep.mean("rs", G, p)
    assert rep.mean("rs", G, 0.1) >= rep.mean("rs", G, 0.05)
    assert rep.std("rs", G, 0.1) >= 0
    again = resilience_sweep(pair, [0.05, 0.1], runs=40, seed=1)
    assert all(np.array_equal(rep.runs[k], again.runs[k]) for k in rep.keys())


def test_report_accumulates_and_writes_csv(pair):
    rep = FailureReport()
    resilience_runs(pair, [0.06], 5, [1, 2], rep, G=15)
    resilience_runs(pair, [0.06], 5, [1, 3], rep, G=15)
    assert len(rep.runs[("rs", 15, 0.06)]) == 10
    assert len(rep.per_group[("rs", 15, 0.06)]) == 2
    buf = io.StringIO()
    write_runs_csv(rep, buf)
    assert buf.getvalue().startswith("scheme,G,p,run,failure_fraction\r\n")
    assert buf.getvalue().count("\r\n") == 1 + 20
    buf = io.StringIO()
    write_summary_csv(rep, buf)
    lines = buf.getvalue().split("\r\n")
    assert lines[0] == "scheme,G,p,runs,mean,std" and lines[1].startswith("hs,15,0.06,10,")


def test_mid_stripe_failure_versus_tree():
    # nine APs on a line plus a bend, leading AP at one end
    pts = np.array([[10.0 * i, 0.0] for i in range(8)] + [[70.0, 10.0]])
    g = Group(0, tuple(range(9)), tuple(pts.mean(axis=0)))
    rs = dataclasses.replace(build_radio_stripe(g, pts), leading_ap=0)
    assert rs.order in (tuple(range(9)), tuple(reversed(range(9))))
    stripe = SimpleNamespace(L=9, G=1, topologies=(rs,))
    assert propagate_failures(stripe, {4}).cascaded == frozenset(range(5, 9))
    tree = dataclasses.replace(build_mst(g, pts), leading_ap=0)
    hs = SimpleNamespace(L=9, G=1, topologies=(tree,))
    assert len(propagate_failures(hs, {4}).cascaded) <= 4
