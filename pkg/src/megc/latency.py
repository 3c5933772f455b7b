"""Per-user latency pipelines and the per-slot objective.

All functions broadcast over numpy arrays so the oracle can sweep whole
grids in one call. Zero service (rate or compute share) on positive work
maps to ``inf``; no floating-point warnings are raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .system import ChannelState, SystemParams, TaskArrivals, backhaul_rate, offload_rate

ACTION_FIELDS = (
    "alpha_comp_off", "alpha_ve_off", "alpha_aigc_back", "alpha_ve_back",
    "beta", "lam", "omega_comp", "omega_aigc", "omega_ve",
)
ACTION_DIM = len(ACTION_FIELDS)


@dataclass(frozen=True)
class Action:
    """Full decision vector of one slot. ``lam`` is the offload ratio."""

    alpha_comp_off: float
    alpha_ve_off: float
    alpha_aigc_back: float
    alpha_ve_back: float
    beta: float
    lam: float
    omega_comp: float
    omega_aigc: float
    omega_ve: float

    @classmethod
    def from_array(cls, values) -> "Action":
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != ACTION_DIM:
            raise ValueError(f"expected {ACTION_DIM} action entries, got {values.shape}")
        if values.ndim == 1:
            return cls(*(float(v) for v in values))
        return cls(*(values[..., i] for i in range(ACTION_DIM)))

    @classmethod
    def from_free(cls, alpha_off, alpha_back, beta, lam, omega_comp, omega_aigc) -> "Action":
        """Build from the six free coordinates; complements absorb the slack."""
        return cls(alpha_off, 1.0 - alpha_off, alpha_back, 1.0 - alpha_back, beta, lam,
                   omega_comp, omega_aigc, 1.0 - omega_comp - omega_aigc)

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in ACTION_FIELDS], dtype=float)

    def violation(self) -> float:
        """Largest violation of the box and sum constraints (0 when feasible)."""
        values = [np.asarray(getattr(self, f.name), dtype=float) for f in fields(self)]
        worst = np.zeros(np.broadcast(*values).shape)
        for v in values:
            worst = np.maximum(worst, np.maximum(-v, v - 1.0))
        sums = (
            self.alpha_comp_off + self.alpha_ve_off,
            self.alpha_aigc_back + self.alpha_ve_back,
            self.omega_comp + self.omega_aigc + self.omega_ve,
        )
        for s in sums:
            worst = np.maximum(worst, np.abs(np.asarray(s, dtype=float) - 1.0))
        return float(np.max(worst))

    def is_feasible(self, tol: float = 1e-9) -> bool:
        return self.violation() <= tol


@dataclass(frozen=True)
class LatencyBreakdown:
    comp_local: float
    comp_off: float
    comp_es: float
    comp_total: float
    aigc_es: float
    aigc_back: float
    aigc_total: float
    ve_off: float
    ve_es: float
    ve_back: float
    ve_total: float
    slot_total: float


def _ratio(work, capacity):
    """work / capacity with 0/0 -> 0 and w/0 -> inf."""
    if isinstance(work, float) and isinstance(capacity, float):
        if work <= 0:
            return 0.0
        return work / capacity if capacity > 0 else math.inf
    work = np.asarray(work, dtype=float)
    capacity = np.asarray(capacity, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = work / capacity
    out = np.where(work <= 0, 0.0, np.where(capacity > 0, out, np.inf))
    return out if out.ndim else float(out)


def comp_latency(action: Action, tasks: TaskArrivals, r_off, params: SystemParams):
    """(local, offload, ES, total) latency of the computing user."""
    lam = action.lam
    offloaded = lam * tasks.d_comp
    local = (1.0 - lam) * params.chi * tasks.d_comp / params.f_comp
    off = _ratio(offloaded, r_off)
    es = _ratio(params.chi * offloaded, action.omega_comp * params.f_es)
    if isinstance(local, float) and isinstance(off, float) and isinstance(es, float):
        return local, off, es, max(local, off + es)
    return local, off, es, np.maximum(local, off + es)


def aigc_latency(action: Action, tasks: TaskArrivals, r_back, params: SystemParams):
    """(ES inference, backhaul, total) latency of the AIGC user."""
    cycles = params.xi * params.chi * tasks.d_aigc_out + params.zeta
    es = _ratio(cycles, action.omega_aigc * params.f_es)
    back = _ratio(tasks.d_aigc_out, r_back)
    return es, back, es + back


def ve_latency(action: Action, tasks: TaskArrivals, r_off, r_back, params: SystemParams):
    """(offload, ES processing, backhaul, total) latency of the VE user."""
    off = _ratio(tasks.d_ve, r_off)
    cycles = params.xi * params.chi * tasks.d_ve_out + params.zeta
    es = _ratio(cycles, action.omega_ve * params.f_es)
    back = _ratio(tasks.d_ve_out, r_back)
    return off, es, back, off + es + back


def link_rates(action: Action, channel: ChannelState, params: SystemParams):
    """Offload rates of U_comp and U_VE, backhaul rates of U_AIGC and U_VE."""
    r_comp_off = offload_rate(action.alpha_comp_off, params.b_off, params.p_comp,
                              channel.h_comp_off, params.n0)
    r_ve_off = offload_rate(action.alpha_ve_off, params.b_off, params.p_ve,
                            channel.h_ve_off, params.n0)
    r_aigc_back = backhaul_rate(action.alpha_aigc_back, params.b_back, action.beta,
                                params.p_es, channel.h_aigc_back, params.n0)
    r_ve_back = backhaul_rate(action.alpha_ve_back, params.b_back, 1.0 - action.beta,
                              params.p_es, channel.h_ve_back, params.n0)
    return r_comp_off, r_ve_off, r_aigc_back, r_ve_back


def slot_latency(action: Action, channel: ChannelState, tasks: TaskArrivals,
                 params: SystemParams) -> LatencyBreakdown:
    r_comp_off, r_ve_off, r_aigc_back, r_ve_back = link_rates(action, channel, params)
    comp = comp_latency(action, tasks, r_comp_off, params)
    aigc = aigc_latency(action, tasks, r_aigc_back, params)
    ve = ve_latency(action, tasks, r_ve_off, r_ve_back, params)
    # the computing user's result download is negligible and not modelled
    total = comp[3] + aigc[2] + ve[3]
    return LatencyBreakdown(*comp, *aigc, *ve, total)
