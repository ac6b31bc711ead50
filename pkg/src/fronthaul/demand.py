"""Minimum fronthaul rate per leading AP.

Homogeneous demand uses the uncompressed FS8 (time-domain I/Q) or FS7.2x
(used subcarriers only) rates. Non-homogeneous demand samples a hotspot
traffic field at each leading AP's position.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

ROUNDED_SYMBOL_DURATION = 66.67e-6
DEFAULT_FIBER_CAP = 10e9


class MissingField(ValueError):
    pass


class DemandMode(str, enum.Enum):
    FS8 = "fs8"
    FS72X = "fs7.2x"
    TRAFFIC = "traffic"


@dataclass(frozen=True)
class OfdmConfig:
    bandwidth: float = 20e6
    sampling_freq: float = 30.72e6
    subcarrier_spacing: float = 15e3
    # exact 1/15 kHz; set use_rounded_symbol to reproduce the 66.67 us table entry
    symbol_duration: float = 1.0 / 15e3
    n_dft: int = 2048
    n_used: int = 1200
    n_bits: int = 12
    n_ap_access: int = 4
    use_rounded_symbol: bool = False

    @property
    def n_null(self) -> int:
        return self.n_dft - self.n_used

    @property
    def t_symbol(self) -> float:
        return ROUNDED_SYMBOL_DURATION if self.use_rounded_symbol else self.symbol_duration

    def errors(self) -> list[str]:
        out = []
        if self.n_used > self.n_dft:
            out.append("ofdm.n_used must be <= ofdm.n_dft")
        if not self.symbol_duration > 0:
            out.append("ofdm.symbol_duration must be > 0")
        for name in ("n_dft", "n_used", "n_bits", "n_ap_access"):
            if getattr(self, name) < 1:
                out.append(f"ofdm.{name} must be positive")
        for name in ("bandwidth", "sampling_freq", "subcarrier_spacing"):
            if not getattr(self, name) > 0:
                out.append(f"ofdm.{name} must be > 0")
        return out


@dataclass(frozen=True)
class Hotspot:
    center: tuple[float, float]
    amplitude: float  # bit/s
    sigma: float  # m


@dataclass(frozen=True)
class TrafficField:
    hotspots: tuple[Hotspot, ...]
    baseline: float = 1.0e9
    cap: float = 9.5e9

    @property
    def n_hotspots(self) -> int:
        return len(self.hotspots)

    def errors(self, max_capacity: float | None = DEFAULT_FIBER_CAP) -> list[str]:
        out = []
        if not 0 < self.baseline <= self.cap:
            out.append("traffic: need 0 < baseline <= cap")
        if max_capacity is not None and not self.cap < max_capacity:
            out.append(f"traffic: cap must be below the maximum link capacity {max_capacity:g}")
        for h in self.hotspots:
            if h.amplitude < 0 or not h.sigma > 0:
                out.append("traffic: hotspot amplitudes must be >= 0 and sigmas > 0")
                break
        return out

    def scaled(self, factor: float) -> "TrafficField":
        return TrafficField(
            tuple(Hotspot(h.center, h.amplitude * factor, h.sigma) for h in self.hotspots),
            self.baseline, self.cap)


@dataclass(frozen=True)
class TrafficFieldConfig:
    """Parameters for drawing a random hotspot field."""

    n_hotspots: int = 5
    sigma: float = 250.0
    baseline: float = 1.0e9
    amplitude_min: float = 1.0e9
    amplitude_max: float = 8.0e9
    cap: float = 9.5e9
    amplitude_scale: float = 1.0

    def errors(self) -> list[str]:
        out = []
        if self.n_hotspots < 0:
            out.append("traffic.n_hotspots must be >= 0")
        if not self.sigma > 0:
            out.append("traffic.sigma must be > 0")
        if not 0 <= self.amplitude_min <= self.amplitude_max:
            out.append("traffic: need 0 <= amplitude_min <= amplitude_max")
        if self.amplitude_scale < 0:
            out.append("traffic.amplitude_scale must be >= 0")
        if not 0 < self.baseline <= self.cap:
            out.append("traffic: need 0 < baseline <= cap")
        return out


@dataclass(frozen=True)
class DemandProfile:
    mode: DemandMode
    thresholds: dict[int, float]  # leading AP -> bit/s
    cp_overhead: float = 0.0
    extra: dict = field(default_factory=dict)

    def __getitem__(self, ap: int) -> float:
        return self.thresholds[ap]


def fs8_rate(cfg: OfdmConfig) -> float:
    """2 * N_bits * f_s * N_AP^ac (time-domain I/Q)."""
    return 2.0 * cfg.n_bits * cfg.sampling_freq * cfg.n_ap_access


def fs72x_rate(cfg: OfdmConfig) -> float:
    """2 * N_bits * N_used * N_AP^ac / T_symbol (used subcarriers only)."""
    return 2.0 * cfg.n_bits * cfg.n_used * cfg.n_ap_access / cfg.t_symbol


def apply_cp_overhead(rate: float, alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"control-plane overhead {alpha} outside [0, 1]")
    return (1.0 + alpha) * rate


def sample_traffic_field(tf: TrafficField, p) -> float:
    """Baseline plus Gaussian hotspot bumps at ``p``, clipped at the cap.

    ``p`` may be a single point or an ``(n, 2)`` array.
    """
    pts = np.asarray(p, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    total = np.full(len(pts), float(tf.baseline))
    for h in tf.hotspots:
        d2 = np.sum((pts - np.asarray(h.center)) ** 2, axis=1)
        total += h.amplitude * np.exp(-d2 / (2.0 * h.sigma ** 2))
    out = np.minimum(tf.cap, total)
    return float(out[0]) if single else out


def generate_traffic_field(region_side: float, cfg: TrafficFieldConfig, seed: int) -> TrafficField:
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.0, region_side, size=(cfg.n_hotspots, 2))
    amps = rng.uniform(cfg.amplitude_min, cfg.amplitude_max, size=cfg.n_hotspots)
    spots = tuple(
        Hotspot((float(c[0]), float(c[1])), float(a) * cfg.amplitude_scale, cfg.sigma)
        for c, a in zip(centers, amps)
    )
    return TrafficField(spots, cfg.baseline, cfg.cap)


def build_demand(scenario, mode: DemandMode | str, cfg: OfdmConfig | None = None,
                 traffic: TrafficField | None = None, alpha: float = 0.0) -> DemandProfile:
    """Thresholds for every leading AP of ``scenario``.

    Overhead ``alpha`` applies to the homogeneous FS rates; the traffic field
    already expresses total demand.
    """
    mode = DemandMode(mode)
    cfg = cfg or OfdmConfig()
    leading = [t.leading_ap for t in scenario.topologies]
    if mode is DemandMode.TRAFFIC:
        if traffic is None:
            raise MissingField("traffic mode needs a TrafficField")
        values = sample_traffic_field(traffic, scenario.coords[leading])
        return DemandProfile(mode, {ap: float(v) for ap, v in zip(leading, values)}, alpha)
    base = fs8_rate(cfg) if mode is DemandMode.FS8 else fs72x_rate(cfg)
    value = apply_cp_overhead(base, alpha)
    return DemandProfile(mode, {ap: value for ap in leading}, alpha)
