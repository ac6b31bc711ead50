"""Achievable rate and availability of fiber, mmWave and FSO fronthaul links."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, NamedTuple, Sequence

import numpy as np
from numba import njit

SPEED_OF_LIGHT = 299_792_458.0
PLANCK = 6.625e-34  # J s, value used for the photon-energy consistency check


class NonPositiveDistance(ValueError):
    pass


class VisibilityOutOfRange(ValueError):
    pass


def _check_distance(d) -> None:
    if np.any(np.asarray(d) <= 0):
        raise NonPositiveDistance(f"link distance must be > 0, got {d}")


# --------------------------------------------------------------------------
# configs


@dataclass(frozen=True)
class FiberConfig:
    rate: float = 10e9
    availability: float = 1.0

    def errors(self) -> list[str]:
        out = []
        if not self.rate > 0:
            out.append("fiber.rate must be > 0")
        if not 0 < self.availability <= 1:
            out.append("fiber.availability must be in (0, 1]")
        return out


@dataclass(frozen=True)
class MmWaveConfig:
    carrier_freq_ghz: float = 80.0
    bandwidth: float = 2.5e9
    n_du_antennas: int = 256
    n_ap_antennas: int = 1
    tx_power: float = 120.0
    phase_bits: int = 6
    n_paths_min: int = 1
    n_paths_max: int = 6
    shadowing_sigma_los: float = 4.0
    shadowing_sigma_nlos: float = 8.2
    noise_psd_dbm_hz: float = -174.0
    noise_figure_db: float = 10.0
    availability: float = 0.99999
    n_draws: int = 32
    # draw log-normal shadowing per realization instead of planning with 0 dB
    shadowing: bool = False
    # "inverse_n": codeword entries e^{j phi}/N_DU; "unit": e^{j phi}/sqrt(N_DU)
    normalization: str = "inverse_n"
    # "optimal": best codeword; "elementwise": quantize conj phases at zero reference
    beamformer: str = "optimal"

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / (self.carrier_freq_ghz * 1e9)

    def noise_power(self) -> float:
        """Thermal noise plus noise figure over the channel bandwidth, in watts."""
        dbm = self.noise_psd_dbm_hz + self.noise_figure_db + 10 * math.log10(self.bandwidth)
        return 10 ** ((dbm - 30) / 10)

    def errors(self) -> list[str]:
        out = []
        if self.phase_bits < 1:
            out.append("mmw.phase_bits must be >= 1")
        if self.n_du_antennas < 1:
            out.append("mmw.n_du_antennas must be >= 1")
        if self.n_ap_antennas != 1:
            out.append("mmw.n_ap_antennas must be 1")
        if not 0 < self.availability <= 1:
            out.append("mmw.availability must be in (0, 1]")
        if not 1 <= self.n_paths_min <= self.n_paths_max:
            out.append("mmw: need 1 <= n_paths_min <= n_paths_max")
        if self.n_draws < 1:
            out.append("mmw.n_draws must be >= 1")
        if self.tx_power < 0:
            out.append("mmw.tx_power must be >= 0")
        if not self.bandwidth > 0 or not self.carrier_freq_ghz > 0:
            out.append("mmw: bandwidth and carrier_freq_ghz must be > 0")
        if self.normalization not in ("inverse_n", "unit"):
            out.append("mmw.normalization must be 'inverse_n' or 'unit'")
        if self.beamformer not in ("optimal", "elementwise"):
            out.append("mmw.beamformer must be 'optimal' or 'elementwise'")
        return out


@dataclass(frozen=True)
class FsoConfig:
    wavelength_nm: float = 1550.0
    visibility_km: float = 0.4
    rx_radius: float = 0.05
    divergence: float = 10e-3
    tx_power: float = 0.5
    eta_t: float = 0.5
    eta_r: float = 0.5
    cn2: float = 1e-15
    photons_per_bit: float = 100.0
    rain_loss_db: float = 10.0
    fog_db_per_km: float = 20.99
    photon_energy: float = 1.2823e-19
    availability: float = 0.9975
    # wavenumber in the scintillation term is 2*pi/lambda_nm * 10**exponent
    wavenumber_exponent: float = 9.0

    def errors(self) -> list[str]:
        out = []
        for name in ("wavelength_nm", "visibility_km", "rx_radius", "divergence", "tx_power",
                     "eta_t", "eta_r", "photons_per_bit", "photon_energy"):
            if not getattr(self, name) > 0:
                out.append(f"fso.{name} must be > 0")
        for name in ("cn2", "rain_loss_db", "fog_db_per_km"):
            if getattr(self, name) < 0:
                out.append(f"fso.{name} must be >= 0")
        if self.eta_t > 1 or self.eta_r > 1:
            out.append("fso.eta_t and fso.eta_r must be <= 1")
        if not 0 < self.availability <= 1:
            out.append("fso.availability must be in (0, 1]")
        if self.wavelength_nm > 0:
            expected = PLANCK * SPEED_OF_LIGHT / (self.wavelength_nm * 1e-9)
            if abs(self.photon_energy - expected) > 0.005 * expected:
                out.append(f"fso.photon_energy {self.photon_energy:.5g} J inconsistent with "
                           f"wavelength (expected {expected:.5g} J within 0.5%)")
        return out


@dataclass(frozen=True)
class LinkBudget:
    du: int
    ap: int
    group: int
    distance: float
    rate_fiber: float
    rate_mmw: float
    rate_fso: float
    avail_fiber: float
    avail_mmw: float
    avail_fso: float


# --------------------------------------------------------------------------
# fiber


def fiber_rate(cfg: FiberConfig, d: float | None = None) -> float:
    """Constant capacity; the link is lossless over fronthaul distances."""
    return cfg.rate


# --------------------------------------------------------------------------
# mmWave


def mmw_pathloss(d, cfg: MmWaveConfig, los: bool = True, shadow_db=0.0):
    """UMi street-canyon path loss in dB (``d`` in m, carrier in GHz)."""
    _check_distance(d)
    slope = 21.0 if los else 31.9
    return 32.4 + slope * np.log10(d) + 20.0 * math.log10(cfg.carrier_freq_ghz) + shadow_db


def ula_response(n: int, angle) -> np.ndarray:
    """Half-wavelength ULA response for one or more departure angles."""
    angle = np.asarray(angle, dtype=float)
    return np.exp(1j * np.pi * np.arange(n) * np.sin(angle)[..., None])


def mmw_channels(d: float, cfg: MmWaveConfig, rng: np.random.Generator,
                 n_draws: int = 1, angle: float = 0.0) -> np.ndarray:
    """``n_draws`` realizations of the DU->AP channel, shape ``(n_draws, N_DU)``.

    Each realization has a deterministic LoS ray at ``angle`` plus 1..6
    scattered rays with uniform angles and phases sharing the NLoS path loss.
    """
    _check_distance(d)
    n = cfg.n_du_antennas
    if cfg.shadowing:
        s_los = rng.normal(0.0, cfg.shadowing_sigma_los, n_draws)
        s_nlos = rng.normal(0.0, cfg.shadowing_sigma_nlos, n_draws)
    else:
        s_los = s_nlos = np.zeros(n_draws)
    a_los = 10 ** (-mmw_pathloss(d, cfg, True, s_los) / 20)
    a_nlos = 10 ** (-mmw_pathloss(d, cfg, False, s_nlos) / 20)
    phase0 = -2 * np.pi * ((d / cfg.wavelength) % 1.0)
    h = (a_los * np.exp(1j * phase0))[:, None] * ula_response(n, angle)[None, :]
    n_paths = rng.integers(cfg.n_paths_min, cfg.n_paths_max + 1, size=n_draws)
    theta = rng.uniform(-np.pi / 2, np.pi / 2, (n_draws, cfg.n_paths_max))
    phi = rng.uniform(0.0, 2 * np.pi, (n_draws, cfg.n_paths_max))
    active = np.arange(cfg.n_paths_max)[None, :] < n_paths[:, None]
    gains = np.where(active, (a_nlos / np.sqrt(n_paths))[:, None] * np.exp(1j * phi), 0.0)
    h += np.einsum("dp,dpn->dn", gains, ula_response(n, theta))
    return h


def mmw_channel(d: float, cfg: MmWaveConfig, seed: int = 0, angle: float = 0.0) -> np.ndarray:
    return mmw_channels(d, cfg, np.random.default_rng(seed), 1, angle)[0]


def phase_grid(q: int) -> np.ndarray:
    """The 2^q phase-shifter settings ``k*pi/2^q``, spanning ``[0, pi)``."""
    K = 2 ** q
    return np.arange(K) * np.pi / K


def _nearest_code(tau: np.ndarray, K: int) -> np.ndarray:
    grid = np.arange(K) * np.pi / K
    return np.argmax(np.cos(tau[..., None] - grid), axis=-1)


@njit(cache=True)
def _sweep_codes(h, K):
    N = h.shape[0]
    step = np.pi / K
    unit = np.exp(1j * step * np.arange(K))
    base = np.empty(N, np.int64)
    r = np.empty(N)
    for i in range(N):
        u = (np.angle(h[i]) + step / 2) % (2 * np.pi)
        n = int(np.floor(u / step))
        r[i] = u - n * step
        base[i] = n % (2 * K)
    order = np.argsort(r, kind="mergesort")

    # setting held before the first switch of the sweep: the first switch is
    # the event whose bin (base + offset) mod 2K is smallest
    code0 = np.empty(N, np.int64)
    s0 = 0j
    for i in range(N):
        c = _first_old(base[i], K)
        code0[i] = c
        s0 += h[i] * unit[c]

    best = s0.real ** 2 + s0.imag ** 2
    best_bin = -1
    best_j = -1
    s = s0
    irregular = 3 * K // 2 - 1
    for b in range(2 * K):
        for j in range(N):
            i = order[j]
            off = b - base[i]
            if off < 0:
                off += 2 * K
            if off <= K - 2:
                s += h[i] * (unit[off + 1] - unit[off])
            elif off == irregular:
                s += h[i] * (unit[0] - unit[K - 1])
            else:
                continue
            m = s.real ** 2 + s.imag ** 2
            if m > best:
                best = m
                best_bin = b
                best_j = j

    if best_bin < 0:
        return code0
    codes = np.empty(N, np.int64)
    for j in range(N):
        i = order[j]
        lag = best_bin - base[i]
        if j > best_j:
            lag -= 1
        lag %= 2 * K
        # latest switch at or before the chosen position, counted circularly
        if lag >= irregular:
            codes[i] = 0
        elif lag <= K - 2:
            codes[i] = lag + 1
        else:
            codes[i] = K - 1
    return codes


@njit(cache=True)
def _first_old(base, K):
    """Setting before the element's earliest switch in sweep order."""
    best_bin = 2 * K
    code = 0
    for off in range(K - 1):
        bb = (base + off) % (2 * K)
        if bb < best_bin:
            best_bin = bb
            code = off
    bb = (base + 3 * K // 2 - 1) % (2 * K)
    if bb < best_bin:
        code = K - 1
    return code


def _optimal_codes(h: np.ndarray, q: int) -> np.ndarray:
    """Phase-shifter indices maximizing ``|sum_i h_i exp(j*phi_i)|``, batched over rows.

    For a fixed reference phase ``theta`` the best codeword is obtained by
    quantizing ``theta - arg(h_i)`` element-wise, so the optimum is among the
    codewords visited while ``theta`` sweeps the circle. Every element switches
    setting at K reference phases, all on a lattice of spacing pi/K shifted by
    the element's phase, so the sweep visits 2K bins and within a bin the
    elements switch in a fixed order. Ties keep the earliest codeword.
    """
    h = np.ascontiguousarray(np.atleast_2d(h), dtype=np.complex128)
    K = 2 ** q
    return np.stack([_sweep_codes(row, K) for row in h])


def mmw_beamform(h: np.ndarray, q: int, normalization: str = "inverse_n",
                 method: str = "optimal") -> np.ndarray:
    """Quantized-phase analog beamformer for channel ``h``.

    ``method="optimal"`` returns the codeword maximizing ``|h^T f|`` over the
    whole codebook; ``"elementwise"`` quantizes each conjugate phase to the
    nearest setting with no common rotation.
    """
    h = np.asarray(h, dtype=complex)
    if q < 1:
        raise ValueError("q must be >= 1")
    n = h.shape[-1]
    K = 2 ** q
    if method == "optimal":
        codes = _optimal_codes(h.reshape(-1, n), q).reshape(h.shape)
    elif method == "elementwise":
        codes = _nearest_code(-np.angle(h), K)
    else:
        raise ValueError(f"unknown beamformer method {method!r}")
    scale = n if normalization == "inverse_n" else math.sqrt(n)
    return np.exp(1j * codes * np.pi / K) / scale


def beamforming_gain(h: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``|h^T f|`` along the last axis."""
    return np.abs(np.sum(np.asarray(h) * np.asarray(f), axis=-1))


def mmw_rates(d: float, cfg: MmWaveConfig, rng: np.random.Generator,
              n_draws: int, angle: float = 0.0) -> np.ndarray:
    """Shannon rate of each channel realization (bit/s)."""
    if cfg.tx_power == 0:
        _check_distance(d)
        return np.zeros(n_draws)
    h = mmw_channels(d, cfg, rng, n_draws, angle)
    f = mmw_beamform(h, cfg.phase_bits, cfg.normalization, cfg.beamformer)
    snr = cfg.tx_power * beamforming_gain(h, f) ** 2 / cfg.noise_power()
    return cfg.bandwidth * np.log2(1.0 + snr)


def mmw_rate(d: float, cfg: MmWaveConfig, seed: int = 0, angle: float = 0.0,
             n_draws: int | None = None) -> float:
    """Planning rate: mean over ``cfg.n_draws`` seeded realizations (1 = single draw)."""
    draws = cfg.n_draws if n_draws is None else n_draws
    return float(np.mean(mmw_rates(d, cfg, np.random.default_rng(seed), draws, angle)))


# --------------------------------------------------------------------------
# FSO


class FsoLosses(NamedTuple):
    scattering: float
    scintillation: float
    fog: float
    rain: float
    total: float


def fso_losses(d: float, cfg: FsoConfig) -> FsoLosses:
    """Atmospheric loss terms in dB for a link of ``d`` meters."""
    _check_distance(d)
    V = cfg.visibility_km
    if V >= 6:
        raise VisibilityOutOfRange(f"visibility {V} km outside the V < 6 km model range")
    delta = 0.585 * V ** (1 / 3)
    sca = 4.34 * (3.91 / V) * (cfg.wavelength_nm / 550.0) ** (-delta) * (d / 1000.0)
    k = 2 * math.pi / cfg.wavelength_nm * 10 ** cfg.wavenumber_exponent
    sci = 2.0 * math.sqrt(23.17 * k ** (7 / 6) * cfg.cn2 * d ** (11 / 6))
    fog = cfg.fog_db_per_km * d / 1000.0
    rain = cfg.rain_loss_db
    return FsoLosses(sca, sci, fog, rain, sca + rain + fog + sci)


def fso_rate(d: float, cfg: FsoConfig) -> float:
    """Photon-counting rate limit: received power / (E_p * N_b)."""
    atm = 10 ** (fso_losses(d, cfg).total / 10)
    beam = (cfg.divergence * d / 2) ** 2
    return (cfg.tx_power * cfg.eta_t * cfg.eta_r * cfg.rx_radius ** 2
            / (atm * cfg.photon_energy * cfg.photons_per_bit * beam))


# --------------------------------------------------------------------------
# per-link budgets


def build_link_budgets(scenario, fiber: FiberConfig | None = None,
                       mmw: MmWaveConfig | None = None, fso: FsoConfig | None = None,
                       seed: int = 0, cache: dict | None = None) -> list[LinkBudget]:
    """One budget per (DU, leading AP), ordered by DU then AP index.

    The mmWave draws for a link are seeded from ``(seed, ap)`` so a link's
    rate does not depend on which other links are evaluated. ``cache`` may be
    shared between scenarios with the same AP field, DU sites and seed (e.g.
    the two schemes of one grouping) to skip repeated mmWave evaluations.
    """
    fiber = fiber or FiberConfig()
    mmw = mmw or MmWaveConfig()
    fso = fso or FsoConfig()
    pts = scenario.coords
    mu = scenario.placement.positions
    rows = []
    for gid, topo in enumerate(scenario.topologies):
        w = scenario.placement.group_assignment[gid]
        ap = topo.leading_ap
        dx, dy = pts[ap] - mu[w]
        d = float(math.hypot(dx, dy))
        if d <= 0:
            # an AP exactly on the DU site; keep the link models finite
            d = 1e-3
        key = (int(ap), mu[w].tobytes())
        if cache is not None and key in cache:
            rate_m = cache[key]
        else:
            rng = np.random.default_rng([seed, int(ap)])
            rate_m = float(np.mean(mmw_rates(d, mmw, rng, mmw.n_draws, math.atan2(dy, dx))))
            if cache is not None:
                cache[key] = rate_m
        rows.append(LinkBudget(
            du=int(w), ap=int(ap), group=gid, distance=d,
            rate_fiber=fiber_rate(fiber, d), rate_mmw=rate_m, rate_fso=fso_rate(d, fso),
            avail_fiber=fiber.availability, avail_mmw=mmw.availability,
            avail_fso=fso.availability))
    rows.sort(key=lambda b: (b.du, b.ap))
    return rows


BUDGET_COLUMNS = ("du", "ap", "d_m", "rate_fiber_bps", "rate_mmw_bps", "rate_fso_bps")


def write_budgets_csv(budgets: Sequence[LinkBudget], fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow(BUDGET_COLUMNS)
    for b in budgets:
        w.writerow([b.du, b.ap, f"{b.distance:.3f}", int(round(b.rate_fiber)),
                    int(round(b.rate_mmw)), int(round(b.rate_fso))])
