"""Physical parameters, per-slot channel realization and FDMA link rates."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

MBIT = 1_000_000
LN2 = math.log(2.0)


class ValidationError(ValueError):
    """A configuration value is outside its admissible domain."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class SystemParams:
    # link budget
    b_off: float = 400e6
    b_back: float = 400e6
    p_comp: float = 15.0
    p_ve: float = 15.0
    p_es: float = 15.0
    n0: float = 1e-13  # -100 dBm/Hz
    # compute
    f_comp: float = 1e9
    f_es: float = 2e10
    chi: float = 500.0
    xi: float = 9.97e-14
    zeta: float = 5.73
    psi: float = 2.0
    # geometry
    dist_comp: float = 100.0
    dist_aigc: float = 120.0
    dist_ve: float = 80.0
    ref_gain_db: float = -30.0
    pathloss_exp: float = 2.0
    # task volumes, Mbits
    d_comp_mean_mbits: float = 4.5
    d_comp_range_mbits: tuple[float, float] = (1.0, 8.0)
    d_ve_range_mbits: tuple[float, float] = (1.0, 8.0)
    d_gen_range_mbits: tuple[float, float] = (2.0, 16.0)
    t_horizon: int = 100

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        positive = ("b_off", "b_back", "p_comp", "p_ve", "p_es", "n0", "f_comp",
                    "f_es", "chi", "xi", "zeta", "dist_comp", "dist_aigc", "dist_ve",
                    "d_comp_mean_mbits")
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(name, f"must be finite and > 0, got {value!r}")
        if not self.psi >= 1:
            raise ValidationError("psi", f"must be >= 1, got {self.psi!r}")
        if not self.pathloss_exp >= 0:
            raise ValidationError("pathloss_exp", f"must be >= 0, got {self.pathloss_exp!r}")
        if not math.isfinite(self.ref_gain_db):
            raise ValidationError("ref_gain_db", "must be finite")
        if int(self.t_horizon) != self.t_horizon or self.t_horizon < 1:
            raise ValidationError("t_horizon", f"must be an integer >= 1, got {self.t_horizon!r}")
        for name in ("d_comp_range_mbits", "d_ve_range_mbits", "d_gen_range_mbits"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi and math.isfinite(hi)):
                raise ValidationError(name, f"need 0 < lo <= hi, got ({lo!r}, {hi!r})")

    @property
    def ref_gain(self) -> float:
        return 10.0 ** (self.ref_gain_db / 10.0)

    def pathloss_gains(self) -> tuple[float, float, float, float]:
        """Fading-free gains in ChannelState field order."""
        g0 = self.ref_gain
        h_comp = g0 * self.dist_comp ** (-self.pathloss_exp)
        h_aigc = g0 * self.dist_aigc ** (-self.pathloss_exp)
        h_ve = g0 * self.dist_ve ** (-self.pathloss_exp)
        # uplink and downlink of U_VE share the same geometry
        return h_comp, h_ve, h_aigc, h_ve

    def replace(self, **changes) -> "SystemParams":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return SystemParams(**values)


@dataclass(frozen=True)
class ChannelState:
    h_comp_off: float
    h_ve_off: float
    h_aigc_back: float
    h_ve_back: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.h_comp_off, self.h_ve_off, self.h_aigc_back, self.h_ve_back)


@dataclass(frozen=True)
class TaskArrivals:
    """Per-slot data volumes in bits."""

    d_comp: float
    d_ve: float
    d_aigc_out: float
    d_ve_out: float

    @classmethod
    def from_inputs(cls, d_comp, d_ve, d_aigc_out, psi):
        return cls(float(d_comp), float(d_ve), float(d_aigc_out), float(psi * d_ve))


def rician_power(rng: np.random.Generator, k_factor: float, size=None):
    """Unit-mean power of a Rician amplitude with K-factor ``k_factor``."""
    los = math.sqrt(k_factor / (k_factor + 1.0))
    sigma = math.sqrt(1.0 / (2.0 * (k_factor + 1.0)))
    re = los + sigma * rng.standard_normal(size)
    im = sigma * rng.standard_normal(size)
    return re * re + im * im


def sample_channel(params: SystemParams, rng: np.random.Generator | None = None,
                   fading: bool = False, rician_k: float = 10.0) -> ChannelState:
    """Path-loss gains, optionally scaled by independent unit-mean Rician fades.

    With ``fading`` off the result is deterministic and ``rng`` is not touched.
    """
    gains = np.array(params.pathloss_gains(), dtype=float)
    if fading:
        if rng is None:
            raise ValueError("fading requires a random generator")
        gains = gains * rician_power(rng, rician_k, size=4)
    return ChannelState(*(float(g) for g in gains))


def _log2_1p_ratio(signal, width, n0):
    """log2(1 + signal / (width * n0)) without overflow for tiny widths."""
    den = width * n0
    x = signal / den if den > 0 else math.inf
    if math.isfinite(x):
        return math.log1p(x) / LN2
    return (math.log(signal) - math.log(width) - math.log(n0)) / LN2


def offload_rate(alpha, bandwidth, tx_power, gain, n0):
    """Shannon rate alpha*B*log2(1 + p*h / (alpha*B*N0)) in bits/s.

    Works elementwise on arrays. The alpha -> 0 limit is returned as 0.
    """
    if all(isinstance(v, (float, int)) for v in (alpha, bandwidth, tx_power, gain, n0)):
        if not 0 <= alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if bandwidth < 0 or tx_power < 0 or gain < 0 or n0 < 0:
            raise ValueError("bandwidth, tx_power, gain and n0 must be non-negative")
        width = alpha * bandwidth
        signal = tx_power * gain
        if width <= 0 or signal <= 0:
            return 0.0
        return width * _log2_1p_ratio(signal, width, n0)
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0) or np.any(alpha > 1):
        raise ValueError("alpha must lie in [0, 1]")
    for name, value in (("bandwidth", bandwidth), ("tx_power", tx_power),
                        ("gain", gain), ("n0", n0)):
        if np.any(np.asarray(value) < 0):
            raise ValueError(f"{name} must be non-negative")
    width = alpha * bandwidth
    signal = np.asarray(tx_power * gain, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        x = signal / (width * n0)
        direct = np.log1p(x) / LN2
        via_logs = (np.log(signal) - np.log(width) - np.log(n0)) / LN2
        rate = width * np.where(np.isfinite(x), direct, via_logs)
    rate = np.where((width > 0) & (signal > 0), rate, 0.0)
    return rate if rate.ndim else float(rate)


def backhaul_rate(alpha, bandwidth, power_share, total_power, gain, n0):
    """Downlink rate when the ES spends ``power_share`` of ``total_power`` on the link."""
    if isinstance(power_share, (float, int)):
        bad = not 0 <= power_share <= 1
    else:
        share = np.asarray(power_share)
        bad = bool(np.any(share < 0) or np.any(share > 1))
    if bad:
        raise ValueError("power_share must lie in [0, 1]")
    return offload_rate(alpha, bandwidth, power_share * total_power, gain, n0)
