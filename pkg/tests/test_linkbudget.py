import dataclasses
import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_force_beam_gain, fso_rate_mp, umi_pathloss_mp

from fronthaul.linkbudget import (FiberConfig, FsoConfig, MmWaveConfig, NonPositiveDistance,
                                  VisibilityOutOfRange, beamforming_gain, build_link_budgets,
                                  fiber_rate, fso_losses, fso_rate, mmw_beamform, mmw_channel,
                                  mmw_channels, mmw_pathloss, mmw_rate, mmw_rates, phase_grid,
                                  write_budgets_csv)

distances = st.floats(1.0, 3000.0, allow_nan=False)


@given(distances)
def test_fso_matches_high_precision_oracle(d):
    ref, losses = fso_rate_mp(d)
    got = fso_losses(d, FsoConfig())
    assert fso_rate(d, FsoConfig()) == pytest.approx(ref, rel=1e-10)
    assert got.scattering == pytest.approx(losses["sca"], rel=1e-12)
    assert got.scintillation == pytest.approx(losses["sci"], rel=1e-12)
    assert got.fog == pytest.approx(losses["fog"], rel=1e-12)
    assert got.total == pytest.approx(losses["total"], rel=1e-12)


def test_fso_reference_values():
    losses = fso_losses(100.0, FsoConfig())
    assert losses.total == pytest.approx(14.9617, abs=1e-4)
    assert fso_rate(100.0, FsoConfig()) == pytest.approx(3.10995e12, rel=1e-5)
    # crosses the 10 Gbps fiber rate between 300 m and 500 m
    assert fso_rate(300.0, FsoConfig()) > 10e9 > fso_rate(500.0, FsoConfig())


@given(distances, distances)
def test_fso_rate_decreases_with_distance(a, b):
    lo, hi = sorted((a, b))
    assert fso_rate(hi, FsoConfig()) <= fso_rate(lo, FsoConfig())


def test_fso_errors():
    assert FsoConfig().errors() == []
    assert any("photon_energy" in e for e in FsoConfig(photon_energy=2e-19).errors())
    with pytest.raises(VisibilityOutOfRange):
        fso_losses(100.0, FsoConfig(visibility_km=8.0))
    with pytest.raises(NonPositiveDistance):
        fso_rate(0.0, FsoConfig())


@given(distances, st.booleans())
def test_pathloss_matches_oracle(d, los):
    assert mmw_pathloss(d, MmWaveConfig(), los) == pytest.approx(umi_pathloss_mp(d, 80, los), rel=1e-13)


def test_pathloss_rejects_nonpositive_distance():
    with pytest.raises(NonPositiveDistance):
        mmw_pathloss(-1.0, MmWaveConfig())


def test_noise_power():
    dbm = -174 + 10 + 10 * math.log10(2.5e9)
    assert MmWaveConfig().noise_power() == pytest.approx(10 ** ((dbm - 30) / 10), rel=1e-12)


def test_phase_grid_spans_half_circle():
    g = phase_grid(3)
    assert len(g) == 8 and g[0] == 0 and g[-1] < np.pi
    assert np.allclose(np.diff(g), np.pi / 8)


@given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_beamformer_is_codebook_optimal(n, q, seed):
    rng = np.random.default_rng(seed)
    h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    f = mmw_beamform(h, q, "unit")
    assert beamforming_gain(h, f) * math.sqrt(n) == pytest.approx(brute_force_beam_gain(h, q), rel=1e-12)


def test_beamformer_normalizations_and_elementwise_option():
    rng = np.random.default_rng(3)
    h = rng.standard_normal((20, 4)) + 1j * rng.standard_normal((20, 4))
    fp, fu = mmw_beamform(h, 2, "inverse_n"), mmw_beamform(h, 2, "unit")
    assert np.allclose(np.abs(fp), 1 / 4) and np.allclose(np.abs(fu), 1 / 2)
    opt = beamforming_gain(h, fp)
    elem = beamforming_gain(h, mmw_beamform(h, 2, "inverse_n", "elementwise"))
    assert np.all(elem <= opt * (1 + 1e-12))
    with pytest.raises(ValueError):
        mmw_beamform(h, 0)
    with pytest.raises(ValueError):
        mmw_beamform(h, 2, method="exhaustive")


def test_mmw_rate_against_brute_force_beam_on_small_array():
    cfg = MmWaveConfig(n_du_antennas=4, phase_bits=2)
    h = mmw_channels(50.0, cfg, np.random.default_rng(8), 6)
    ref = [cfg.bandwidth * math.log2(1 + cfg.tx_power * (brute_force_beam_gain(row, 2) / 4) ** 2
                                     / cfg.noise_power()) for row in h]
    got = mmw_rates(50.0, cfg, np.random.default_rng(8), 6)
    assert np.allclose(got, ref, rtol=1e-12)


@pytest.mark.parametrize("d, gbps", [(20, 19.19), (100, 7.433), (400, 1.1426)])
def test_mmw_reference_rates(d, gbps):
    assert mmw_rate(d, MmWaveConfig(), seed=0) / 1e9 == pytest.approx(gbps, rel=2e-3)


def test_mmw_rate_falls_with_distance():
    rates = [mmw_rate(d, MmWaveConfig(), seed=1) for d in (20, 55, 100, 185, 261, 400)]
    assert all(a > b for a, b in zip(rates, rates[1:]))
    assert mmw_rate(50.0, MmWaveConfig(tx_power=0.0)) == 0.0


def test_mmw_channel_is_seeded_and_shadowing_changes_it():
    a = mmw_channel(80.0, MmWaveConfig(), seed=4)
    assert np.array_equal(a, mmw_channel(80.0, MmWaveConfig(), seed=4))
    b = mmw_channel(80.0, MmWaveConfig(shadowing=True), seed=4)
    assert not np.allclose(a, b)


def test_config_errors():
    assert MmWaveConfig().errors() == []
    assert MmWaveConfig(normalization="x").errors() and MmWaveConfig(n_paths_min=7).errors()
    assert FiberConfig().errors() == [] and FiberConfig(rate=0).errors()
    assert fiber_rate(FiberConfig(), 1e6) == 10e9


def test_link_budgets_for_scenario(small_scenario):
    mmw = dataclasses.replace(MmWaveConfig(), n_draws=2)
    cache = {}
    budgets = build_link_budgets(small_scenario, mmw=mmw, seed=3, cache=cache)
    assert [b.ap for b in budgets] == sorted(b.ap for b in budgets) or \
        [(b.du, b.ap) for b in budgets] == sorted((b.du, b.ap) for b in budgets)
    assert {b.ap for b in budgets} == set(small_scenario.leading_aps)
    for b in budgets:
        mu = small_scenario.placement.positions[b.du]
        assert b.distance == pytest.approx(float(np.hypot(*(small_scenario.coords[b.ap] - mu))))
        assert b.rate_fso == pytest.approx(fso_rate(b.distance, FsoConfig()))
        assert (b.avail_fiber, b.avail_mmw, b.avail_fso) == (1.0, 0.99999, 0.9975)
    again = build_link_budgets(small_scenario, mmw=mmw, seed=3, cache=cache)
    assert again == budgets == build_link_budgets(small_scenario, mmw=mmw, seed=3)
    buf = io.StringIO()
    write_budgets_csv(budgets, buf)
    lines = buf.getvalue().split("\r\n")
    assert lines[0] == "du,ap,d_m,rate_fiber_bps,rate_mmw_bps,rate_fso_bps"
    assert len(lines) == len(budgets) + 2


def test_pathloss_hand_values():
    assert mmw_pathloss(100.0, MmWaveConfig(), True) == pytest.approx(112.462, abs=1e-3)
    assert mmw_pathloss(100.0, MmWaveConfig(), False) == pytest.approx(134.262, abs=1e-3)


def test_single_element_quantization_bound():
    rng = np.random.default_rng(0)
    for q in (1, 2, 3):
        h = rng.standard_normal(200) + 1j * rng.standard_normal(200)
        g = beamforming_gain(h[:, None], mmw_beamform(h[:, None], q, "inverse_n"))
        assert np.all(g >= np.abs(h) * np.cos(np.pi / 2 ** q) - 1e-12)


def test_fso_at_one_kilometre_is_below_every_split_rate():
    assert fso_rate(1000.0, FsoConfig()) == pytest.approx(fso_rate_mp(1000.0)[0], rel=1e-10)
    assert fso_rate(1000.0, FsoConfig()) == pytest.approx(1.13e6, rel=0.01)


def test_mmw_rate_monotone_in_expectation():
    cfg = MmWaveConfig()
    assert mmw_rate(200.0, cfg, seed=0, n_draws=1000) >= mmw_rate(400.0, cfg, seed=0, n_draws=1000)
