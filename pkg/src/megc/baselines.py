"""Fixed and random allocation baselines and a per-slot grid oracle."""

from __future__ import annotations

import math

import numpy as np

from .latency import Action, _ratio, aigc_latency, comp_latency, slot_latency, ve_latency
from .system import ChannelState, SystemParams, TaskArrivals, backhaul_rate, offload_rate

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SYMMETRIC = Action(0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 1 / 3, 1 / 3, 1 / 3)


def fra_policy(fixed: Action | None = None) -> Action:
    """The state-independent allocation; the symmetric point unless overridden."""
    return SYMMETRIC if fixed is None else fixed


def rra_policy(rng: np.random.Generator) -> Action:
    """A uniformly random feasible allocation."""
    a_off, a_back, beta, lam = rng.uniform(size=4)
    w = rng.exponential(size=3)
    w = w / w.sum()
    return Action(float(a_off), float(1.0 - a_off), float(a_back), float(1.0 - a_back),
                  float(beta), float(lam), float(w[0]), float(w[1]), float(w[2]))


def grid_points(resolution: float) -> np.ndarray:
    if not 0 < resolution <= 0.5:
        raise ValueError(f"resolution must lie in (0, 0.5], got {resolution}")
    n = round(1.0 / resolution)
    if abs(n * resolution - 1.0) > 1e-9:
        n = math.ceil(1.0 / resolution)
    return np.arange(n + 1) / n


def best_offload_ratio(alpha_off: float, omega_comp: float, channel: ChannelState,
                       tasks: TaskArrivals, params: SystemParams) -> float:
    """Offload ratio equalizing the local and edge branches of the computing user.

    Both branches are linear in the ratio, so the crossing point minimizes
    their maximum exactly.
    """
    local = params.chi / params.f_comp
    rate = offload_rate(alpha_off, params.b_off, params.p_comp, channel.h_comp_off, params.n0)
    if rate <= 0 or omega_comp <= 0:
        return 0.0
    edge = 1.0 / rate + params.chi / (omega_comp * params.f_es)
    return local / (local + edge)


def golden_section(f, lo: float, hi: float, tol: float = 1e-11, max_iter: int = 200):
    """Minimize a unimodal scalar function on [lo, hi]; returns (x, f(x))."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _grid_search(channel: ChannelState, tasks: TaskArrivals, params: SystemParams, g: np.ndarray):
    """Exact minimum of the slot latency over the product grid.

    The objective separates into a block in (alpha_off, lam, omega_comp), a
    block in (alpha_back, beta) and the two ES inference terms, so the
    minimum over the full product grid is the sum of per-block minima taken
    inside the compute-share simplex loop. Ties go to the smallest index.
    """
    n = len(g) - 1
    # block 1: computing user plus VE upload, indexed [alpha_off, lam, omega_comp]
    a_off = g[:, None, None]
    probe = Action(a_off, 1.0 - a_off, 0.5, 0.5, 0.5, g[None, :, None], g[None, None, :], 0.0, 0.0)
    r_comp = offload_rate(g, params.b_off, params.p_comp, channel.h_comp_off, params.n0)
    r_ve = offload_rate(1.0 - g, params.b_off, params.p_ve, channel.h_ve_off, params.n0)
    comp_total = comp_latency(probe, tasks, r_comp[:, None, None], params)[3]
    ve_up = _ratio(tasks.d_ve, r_ve)
    block1 = comp_total + ve_up[:, None, None]
    lam_idx = np.argmin(block1, axis=1)                      # [alpha_off, omega_comp]
    by_share = np.take_along_axis(block1, lam_idx[:, None, :], axis=1)[:, 0, :]
    off_idx = np.argmin(by_share, axis=0)                    # [omega_comp]
    g1 = by_share[off_idx, np.arange(n + 1)]

    # block 2: both downlinks, indexed [alpha_back, beta]
    a_back = g[:, None]
    beta = g[None, :]
    r_aigc = backhaul_rate(np.broadcast_to(a_back, (n + 1, n + 1)), params.b_back, beta,
                           params.p_es, channel.h_aigc_back, params.n0)
    r_ve_b = backhaul_rate(np.broadcast_to(1.0 - a_back, (n + 1, n + 1)), params.b_back,
                           1.0 - beta, params.p_es, channel.h_ve_back, params.n0)
    block2 = _ratio(tasks.d_aigc_out, r_aigc) + _ratio(tasks.d_ve_out, r_ve_b)
    flat2 = int(np.argmin(block2))
    i_back, i_beta = divmod(flat2, n + 1)
    g2 = block2[i_back, i_beta]

    # compute-share simplex
    ic, ia = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    ok = ic + ia <= n
    ic, ia = ic[ok], ia[ok]
    iv = n - ic - ia
    shares = Action(0.5, 0.5, 0.5, 0.5, 0.5, 0.5, g[ic], g[ia], g[iv])
    es = aigc_latency(shares, tasks, 1.0, params)[0] + ve_latency(shares, tasks, 1.0, 1.0, params)[1]
    total = g1[ic] + es + g2
    k = int(np.argmin(total))
    c, a = ic[k], ia[k]
    i_off = off_idx[c]
    i_lam = lam_idx[i_off, c]
    return Action.from_free(g[i_off], g[i_back], g[i_beta], g[i_lam], g[c], g[a])


def _polish(action: Action, channel: ChannelState, tasks: TaskArrivals, params: SystemParams,
            sweeps: int = 60, rtol: float = 1e-13) -> Action:
    """Cyclic golden-section line searches over the free coordinates.

    The offload ratio is re-solved exactly after every move, which keeps the
    search off the kink of the max() in the computing user's latency.
    """
    x = [action.alpha_comp_off, action.alpha_aigc_back, action.beta,
         action.omega_comp, action.omega_aigc]

    def build(v):
        lam = best_offload_ratio(v[0], v[3], channel, tasks, params)
        return Action.from_free(v[0], v[1], v[2], lam, v[3], v[4])

    def value(v):
        return slot_latency(build(v), channel, tasks, params).slot_total

    best = value(x)
    for _ in range(sweeps):
        start = best
        for i in range(5):
            lo, hi = 0.0, 1.0
            if i == 3:
                hi = 1.0 - x[4]
            elif i == 4:
                hi = 1.0 - x[3]

            def line(t, i=i):
                trial = list(x)
                trial[i] = t
                return value(trial)

            t, ft = golden_section(line, lo, hi)
            if ft < best:
                x[i], best = t, ft
        if not start - best > rtol * best:
            break
    return build(x)


def oracle_per_slot(channel: ChannelState, tasks: TaskArrivals, params: SystemParams,
                    resolution: float = 0.05, polish: bool = True) -> tuple[Action, float]:
    """Best allocation found by exhaustive grid search plus local refinement.

    Searches the closed feasible set, so the result lower-bounds any feasible
    allocation up to the refinement accuracy. Deterministic.
    """
    g = grid_points(resolution)
    action = _grid_search(channel, tasks, params, g)
    value = slot_latency(action, channel, tasks, params).slot_total
    if polish:
        refined = _polish(action, channel, tasks, params)
        refined_value = slot_latency(refined, channel, tasks, params).slot_total
        if refined_value < value:
            action, value = refined, refined_value
    return action, value
