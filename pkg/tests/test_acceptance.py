"""Acceptance suite: one PASS/FAIL line per criterion, printed in the terminal summary.

The headline criteria (4-7, 9) train three seeds for 1000 episodes plus two
learning-rate variants, which takes roughly half an hour on one core. Set
MEGC_ACCEPTANCE_DIR to a directory to keep those artifacts; any artifact
already present there is reused instead of being regenerated.
"""

import math
import os
import shutil
import time
from pathlib import Path

import numpy as np
import pytest
from conftest import random_action, reference_inputs

import reference
from megc.agent import AgentConfig, Batch, DdpgAgent, actor_loss_and_grad, critic_loss_and_grad
from megc.config import parse_config
from megc.env import project_batch, sample_tasks
from megc.harness import (emit_plots_csv, read_csv, read_report, run_compare, run_training, seed_dir)
from megc.latency import Action, slot_latency
from megc.nn import Mlp, backward
from megc.system import SystemParams, sample_channel

pytestmark = pytest.mark.slow

RESULTS: list[str] = []
LR_BASE, LR_SLOW, LR_FAST = 1e-4, 1e-5, 1e-3


def report(number: int, ok: bool, detail: str, soft: bool = False) -> None:
    status = "PASS" if ok else ("SOFT-MISS" if soft else "FAIL")
    RESULTS.append(f"[{status}] criterion {number}: {detail}")


def _fd_rel_error(f, theta, analytic, h=1e-5):
    fd = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        fd[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    return np.abs(analytic - fd).max() / max(np.abs(fd).max(), 1e-12)


# ------------------------------------------------------------ fast criteria

def test_criterion_1_equation_fidelity():
    params = SystemParams()
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(10_000):
        action = random_action(rng)
        channel = sample_channel(params, rng, fading=True)
        tasks = sample_tasks(rng, params)
        b = slot_latency(action, channel, tasks, params)
        ref = reference.slot(*reference_inputs(params, action, channel, tasks))
        for got, want in zip((b.comp_total, b.aigc_total, b.ve_total, b.slot_total), ref):
            worst = max(worst, abs(got - want) / abs(want))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-12 and elapsed < 10.0
    report(1, ok, f"max relative gap {worst:.2e} (< 1e-12) over 1e4 inputs in {elapsed:.1f} s (< 10 s)")
    assert ok


def test_criterion_2_gradient_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = {}
    for act in ("tanh", "relu", "identity"):
        for _ in range(10):
            depth = int(rng.integers(1, 4))
            sizes = [int(s) for s in rng.integers(1, 65, size=depth + 1)]
            net = Mlp.initialized(sizes, [act] * (depth - 1) + ["identity"], rng)
            x = rng.normal(size=(4, sizes[0]))
            g = rng.normal(size=(4, sizes[-1]))
            grad, _ = backward(net, x, g)
            err = _fd_rel_error(lambda t: float(np.sum(net.unflatten(t)(x) * g)), net.flatten(), grad)
            worst[f"mlp-{act}"] = max(worst.get(f"mlp-{act}", 0.0), err)
    cfg = AgentConfig(hidden=(32, 32), batch_size=4, buffer_capacity=8, actor_final_scale=1.0)
    for seed in range(3):
        agent = DdpgAgent(cfg, seed=seed)
        batch = Batch(rng.normal(size=(8, 6)), project_batch(rng.normal(size=(8, 7))), -rng.random(8),
                      rng.normal(size=(8, 6)), np.zeros(8, dtype=bool))
        y = rng.normal(size=8)
        _, grad = critic_loss_and_grad(agent.critic, batch, y)
        worst["critic"] = max(worst.get("critic", 0.0), _fd_rel_error(
            lambda t: critic_loss_and_grad(agent.critic.unflatten(t), batch, y)[0], agent.critic.flatten(), grad))
        _, grad = actor_loss_and_grad(agent.actor, agent.critic, batch.states)
        worst["actor"] = max(worst.get("actor", 0.0), _fd_rel_error(
            lambda t: actor_loss_and_grad(agent.actor.unflatten(t), agent.critic, batch.states)[0],
            agent.actor.flatten(), grad))
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) < 1e-4 and elapsed < 60.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(2, ok, f"max relative FD error (h=1e-5, < 1e-4): {detail}; {elapsed:.1f} s (< 60 s)")
    assert ok


def test_criterion_3_constraint_satisfaction():
    rng = np.random.default_rng(3)
    raw = rng.normal(scale=10.0, size=(100_000, 7))
    actions = project_batch(raw)
    violations = sum(Action.from_array(a).violation() > 1e-9 for a in actions)
    in_box = bool(np.all((actions >= 0) & (actions <= 1)))
    ok = violations == 0 and in_box
    report(3, ok, f"{violations} violations (tol 1e-9) among 1e5 projected actions")
    assert ok


def test_criterion_8_determinism(tmp_path):
    # same config and seeds, full pipeline (train, compare, figure tables) twice
    config = parse_config("paper_defaults").replace("run", seeds=(0, 1), episodes=15, eval_slots=50)
    trees = []
    for name in ("a", "b"):
        out = tmp_path / name
        run_training(config, out)
        run_compare(config, out)
        emit_plots_csv(out, render=False)
        trees.append({p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.glob("**/*.csv"))})
    ok = trees[0] == trees[1] and len(trees[0]) > 0
    report(8, ok, f"{len(trees[0])} CSV artifacts byte-identical across two pipeline runs "
                  "(2 seeds x 15 episodes, 50 eval slots)")
    assert ok


# ------------------------------------------------------- headline pipeline

@pytest.fixture(scope="module")
def headline(tmp_path_factory):
    cached = os.environ.get("MEGC_ACCEPTANCE_DIR")
    out = Path(cached) if cached else tmp_path_factory.mktemp("acceptance")
    config = parse_config("paper_defaults")
    start = time.perf_counter()
    missing = [s for s in config.run.seeds if not (seed_dir(out, s) / "checkpoints" / "final.npz").exists()]
    if missing:
        run_training(config, out, seeds=missing, overwrite=True)
    for lr in (LR_SLOW, LR_FAST):
        d = out / f"lr_{lr!r}"
        if not (seed_dir(d, 0) / "reward_curve.csv").exists():
            run_training(config.replace("agent", actor_lr=lr), d, seeds=[0], overwrite=True)
    base = seed_dir(out / f"lr_{LR_BASE!r}", 0)
    base.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(seed_dir(out, 0) / "reward_curve.csv", base / "reward_curve.csv")
    train_time = time.perf_counter() - start
    expected = {"fra", "rra", "oracle"} | {f"lara_seed{s}" for s in config.run.seeds}
    have = {p.stem[len("eval_"):] for p in (out / "eval").glob("eval_*.csv")}
    if not expected <= have:
        run_compare(config, out, overwrite=True)
    emit_plots_csv(out)
    reports = {name: read_report(out / "eval" / f"eval_{name}.csv") for name in expected}
    return {"out": out, "config": config, "reports": reports, "elapsed": time.perf_counter() - start,
            "train_time": train_time}


def _curve(path):
    _, rows = read_csv(path)
    return np.array([float(r[1]) for r in rows])


def test_criterion_4_policy_ordering(headline):
    reports, seeds = headline["reports"], headline["config"].run.seeds
    fra, rra = reports["fra"].total, reports["rra"].total
    parts, ok = [], True
    for s in seeds:
        lara = reports[f"lara_seed{s}"].total
        margin = 1 - lara / rra
        ok &= lara < fra and lara < rra and margin >= 0.10
        parts.append(f"seed {s}: {lara:.4f} s ({margin:.1%} below RRA)")
    report(4, ok, f"LARA vs FRA {fra:.4f} s / RRA {rra:.4f} s; " + "; ".join(parts)
           + f"; pipeline {headline['elapsed'] / 60:.1f} min")
    assert ok


def test_criterion_5_per_user_latency(headline):
    reports, seeds = headline["reports"], headline["config"].run.seeds
    parts, ok = [], True
    for s in seeds:
        r = reports[f"lara_seed{s}"]
        ok &= r.lat_comp < r.lat_aigc and r.lat_comp < r.lat_ve
        parts.append(f"seed {s}: comp {r.lat_comp:.3f} / aigc {r.lat_aigc:.3f} / ve {r.lat_ve:.3f} s")
    report(5, ok, "; ".join(parts))
    assert ok


def test_criterion_6_learning_rate_convergence(headline):
    out = headline["out"]
    base = _curve(seed_dir(out, 0) / "reward_curve.csv")
    slow = _curve(seed_dir(out / f"lr_{LR_SLOW!r}", 0) / "reward_curve.csv")
    n = len(base)
    tenth, mark = n // 10, n // 5
    improved = base[-tenth:].mean() > base[:tenth].mean()
    # compare the two runs over the 50 episodes that end at the 20% mark
    window = slice(mark - 50, mark)
    slower = slow[window].mean() < base[window].mean()
    ok = improved and slower
    report(6, ok, f"lr 1e-4 return first 10% {base[:tenth].mean():.3f} -> last 10% {base[-tenth:].mean():.3f}; "
                  f"episodes {mark - 49}-{mark}: lr 1e-5 {slow[window].mean():.3f} vs lr 1e-4 "
                  f"{base[window].mean():.3f}")
    assert ok


def test_criterion_7_oracle_dominance_and_gap(headline):
    reports = headline["reports"]
    oracle = reports["oracle"]
    bound = oracle.per_slot_total
    dominated = all(np.all(bound <= r.per_slot_total) for name, r in reports.items() if name != "oracle")
    gaps = {name: r.total / oracle.total - 1 for name, r in reports.items() if name.startswith("lara")}
    within = all(g <= 0.25 for g in gaps.values())
    report(7, dominated, f"oracle <= every policy on all {len(bound)} paired slots: {dominated}")
    report(7, within, "LARA gap to oracle mean " + ", ".join(f"{k} {v:+.1%}" for k, v in sorted(gaps.items()))
           + f" (soft target <= 25%; oracle {oracle.total:.4f} s)", soft=True)
    assert dominated


def test_criterion_9_parameter_accounting(headline):
    import json
    actor = 6 * 128 + 128 + 128 * 128 + 128 + 128 * 7 + 7
    critic = 15 * 128 + 128 + 128 * 128 + 128 + 128 * 1 + 1
    ok = True
    for s in headline["config"].run.seeds:
        info = json.loads((seed_dir(headline["out"], s) / "model_info.json").read_text())
        ok &= info["parameter_counts"] == {"actor": actor, "critic": critic}
        ok &= info["closed_form_counts"] == info["parameter_counts"]
    report(9, ok, f"actor {actor}, critic {critic} parameters match the closed form")
    assert ok


def test_figure_tables_are_complete(headline):
    plots = headline["out"] / "plots"
    _, rows = read_csv(plots / "reward_vs_episode.csv")
    assert len(rows) == headline["config"].run.episodes
    _, by_lr = read_csv(plots / "reward_vs_episode_by_lr.csv")
    assert sorted({r[0] for r in by_lr}, key=float) == [repr(LR_SLOW), repr(LR_BASE), repr(LR_FAST)]
    assert all(math.isfinite(float(r[2])) for r in by_lr)
