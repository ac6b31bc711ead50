import dataclasses
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import fs8_rate_exact, fs72x_rate_exact

from fronthaul.demand import (DemandMode, Hotspot, MissingField, OfdmConfig, TrafficField,
                              TrafficFieldConfig, apply_cp_overhead, build_demand, fs8_rate,
                              fs72x_rate, generate_traffic_field, sample_traffic_field)


def test_fs_rates_match_exact_arithmetic():
    cfg = OfdmConfig()
    assert fs8_rate(cfg) == pytest.approx(float(fs8_rate_exact()), rel=1e-15)
    assert fs72x_rate(cfg) == pytest.approx(float(fs72x_rate_exact()), rel=1e-15)
    assert fs8_rate(cfg) == pytest.approx(2.94912e9, rel=1e-12)


def test_rounded_symbol_option_reproduces_table_value():
    cfg = OfdmConfig(use_rounded_symbol=True)
    ref = fs72x_rate_exact(t_symbol=Fraction(6667, 100) * Fraction(1, 10**6))
    assert fs72x_rate(cfg) == pytest.approx(float(ref), rel=1e-12)
    assert round(fs72x_rate(cfg) / 1e5) * 1e5 == pytest.approx(1.7279e9)


@given(st.integers(1, 16), st.integers(1, 2048), st.integers(1, 8))
def test_fs72x_scales_linearly(bits, used, n_ap):
    cfg = OfdmConfig(n_bits=bits, n_used=used, n_ap_access=n_ap, n_dft=2048)
    assert fs72x_rate(cfg) == pytest.approx(float(fs72x_rate_exact(bits, used, n_ap)), rel=1e-12)


def test_fs8_exceeds_fs72x_for_reference_numerology():
    assert fs8_rate(OfdmConfig()) > fs72x_rate(OfdmConfig())


def test_cp_overhead():
    assert apply_cp_overhead(10.0, 0.2) == pytest.approx(12.0)
    with pytest.raises(ValueError):
        apply_cp_overhead(1.0, 1.5)


def test_ofdm_errors():
    assert OfdmConfig().errors() == []
    assert OfdmConfig(n_used=4096).errors()


def test_traffic_field_sampling_and_cap():
    tf = TrafficField((Hotspot((0.0, 0.0), 4e9, 100.0),), baseline=1e9, cap=4.5e9)
    assert sample_traffic_field(tf, (0.0, 0.0)) == pytest.approx(4.5e9)
    far = sample_traffic_field(tf, (5000.0, 0.0))
    assert far == pytest.approx(1e9)
    mid = sample_traffic_field(tf, np.array([[100.0, 0.0]]))
    assert mid[0] == pytest.approx(1e9 + 4e9 * np.exp(-0.5))
    assert tf.errors() == []
    assert TrafficField((), 1e9, 12e9).errors()


@given(st.floats(0, 10), st.floats(0, 10))
def test_scaling_is_monotone(a, b):
    tf = generate_traffic_field(2000.0, TrafficFieldConfig(), seed=3)
    pts = np.random.default_rng(0).uniform(0, 2000, size=(50, 2))
    lo, hi = sorted((a, b))
    assert np.all(sample_traffic_field(tf.scaled(lo), pts) <= sample_traffic_field(tf.scaled(hi), pts))


def test_generated_field_is_seeded():
    cfg = TrafficFieldConfig()
    a, b = generate_traffic_field(1000.0, cfg, 1), generate_traffic_field(1000.0, cfg, 1)
    assert a == b and a.n_hotspots == cfg.n_hotspots
    assert a != generate_traffic_field(1000.0, cfg, 2)
    for h in a.hotspots:
        assert cfg.amplitude_min <= h.amplitude <= cfg.amplitude_max
    assert TrafficFieldConfig().errors() == []
    assert dataclasses.replace(cfg, sigma=0.0).errors()


def test_build_demand_modes(small_scenario):
    fs8 = build_demand(small_scenario, DemandMode.FS8, alpha=0.1)
    assert set(fs8.thresholds) == set(small_scenario.leading_aps)
    assert all(v == pytest.approx(1.1 * 2.94912e9) for v in fs8.thresholds.values())
    fs72 = build_demand(small_scenario, "fs7.2x")
    assert fs72[small_scenario.leading_aps[0]] == pytest.approx(1.728e9)
    with pytest.raises(MissingField):
        build_demand(small_scenario, DemandMode.TRAFFIC)
    tf = generate_traffic_field(700.0, TrafficFieldConfig(), seed=0)
    traffic = build_demand(small_scenario, DemandMode.TRAFFIC, traffic=tf, alpha=0.5)
    for ap, v in traffic.thresholds.items():
        assert v == pytest.approx(sample_traffic_field(tf, small_scenario.coords[ap]))


def test_overhead_example():
    assert apply_cp_overhead(2.94912e9, 0.1) == pytest.approx(3.244032e9, rel=1e-12)
