"""Training and evaluation runs, CSV artifacts and figure tables."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .agent import DdpgAgent, TrainingLog, train
from .baselines import oracle_per_slot, rra_policy
from .config import ExperimentConfig, dump_config
from .env import MegcEnv
from .latency import ACTION_FIELDS, Action, slot_latency
from .nn import Mlp, load_checkpoint, save_checkpoint

log = logging.getLogger(__name__)

REWARD_HEADER = ("episode", "return", "lat_comp", "lat_aigc", "lat_ve")
LOSS_HEADER = ("episode", "critic_loss", "actor_loss", "updates")
SLOT_HEADER = ("slot", "h_comp_off", "h_ve_off", "h_aigc_back", "h_ve_back",
               "d_comp", "d_ve", "d_aigc_out", *ACTION_FIELDS,
               "lat_comp", "lat_aigc", "lat_ve", "total")
COMPARISON_HEADER = ("policy", "seed", "n_slots", "lat_comp", "lat_aigc", "lat_ve", "total")
POLICIES = ("lara", "fra", "rra", "oracle")


class ArtifactExistsError(FileExistsError):
    """Refusing to replace existing results without an explicit overwrite."""


def fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _guard(path: Path, overwrite: bool) -> None:
    if path.exists() and not overwrite:
        raise ArtifactExistsError(f"{path} already exists; pass --overwrite to replace it")


# ---------------------------------------------------------------- training

def seed_dir(out: Path, seed: int) -> Path:
    return Path(out) / f"seed_{seed}"


def run_training(config: ExperimentConfig, out, seeds=None, overwrite: bool = False) -> dict[int, TrainingLog]:
    """Train one agent per seed; writes curves, loss traces and checkpoints."""
    out = Path(out)
    seeds = list(config.run.seeds if seeds is None else seeds)
    for seed in seeds:
        _guard(seed_dir(out, seed) / "reward_curve.csv", overwrite)
    logs = {}
    for seed in seeds:
        logs[seed] = train_one(config, seed_dir(out, seed), seed)
    return logs


def train_one(config: ExperimentConfig, directory: Path, seed: int) -> TrainingLog:
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "config.ini").write_text(dump_config(config))
    env = MegcEnv(config.system, config.env)
    agent = DdpgAgent(config.agent, seed=seed, eps=config.env.eps)
    every = config.run.checkpoint_every
    sizes = {"actor": agent.actor.sizes, "critic": agent.critic.sizes}
    info = {
        "parameter_counts": agent.parameter_counts(),
        "closed_form_counts": {k: Mlp.param_count_closed_form(v) for k, v in sizes.items()},
        "layer_sizes": sizes,
        "seed": seed,
    }
    (directory / "model_info.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")

    def on_episode(episode, agent, tlog):
        if episode % every == 0:
            save_checkpoint(directory / "checkpoints" / f"episode_{episode:05d}.npz",
                            agent.to_checkpoint({"seed": seed, "episode": episode}))
        if episode % 50 == 0:
            log.info("seed %d episode %d return %.3f", seed, episode, tlog.episode_return[-1])

    tlog = train(env, agent, config.run.episodes, seed=seed, on_episode=on_episode)
    save_checkpoint(directory / "checkpoints" / "final.npz",
                    agent.to_checkpoint({"seed": seed, "episode": config.run.episodes}))
    write_csv(directory / "reward_curve.csv", REWARD_HEADER,
              zip(tlog.episode, tlog.episode_return, tlog.lat_comp, tlog.lat_aigc, tlog.lat_ve))
    write_csv(directory / "train_log.csv", LOSS_HEADER,
              zip(tlog.episode, tlog.critic_loss, tlog.actor_loss, tlog.updates))
    return tlog


def load_agent(config: ExperimentConfig, checkpoint) -> DdpgAgent:
    path = Path(checkpoint)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    return DdpgAgent.from_checkpoint(load_checkpoint(path), config.agent)


# -------------------------------------------------------------- evaluation

@dataclass
class EvalSlot:
    channel: object
    tasks: object
    state: np.ndarray


def eval_slots(config: ExperimentConfig) -> list[EvalSlot]:
    """The shared slot sequence every policy is scored on."""
    env = MegcEnv(config.system, config.env, seed=config.run.eval_seed)
    env.reset(config.run.eval_seed)
    slots = []
    for _ in range(config.run.eval_slots):
        slots.append(EvalSlot(env.channel, env.tasks, env.observe().as_array()))
        env._draw_slot()
    return slots


@dataclass
class LatencyReport:
    policy: str
    seed: int | str
    lat_comp: float
    lat_aigc: float
    lat_ve: float
    total: float
    records: list[tuple]

    @property
    def per_slot_total(self) -> np.ndarray:
        return np.array([r[-1] for r in self.records])


def evaluate(policy_fn, slots: list[EvalSlot], config: ExperimentConfig, label: str,
             seed: int | str = "") -> LatencyReport:
    """Score ``policy_fn(slot) -> Action`` on every slot."""
    records = []
    for i, slot in enumerate(slots):
        action = policy_fn(slot)
        b = slot_latency(action, slot.channel, slot.tasks, config.system)
        records.append((i, *slot.channel.as_tuple(), slot.tasks.d_comp, slot.tasks.d_ve,
                        slot.tasks.d_aigc_out, *action.to_array(),
                        b.comp_total, b.aigc_total, b.ve_total, b.slot_total))
    arr = np.array([r[-4:] for r in records])
    comp, aigc, ve = (float(x) for x in arr[:, :3].mean(axis=0))
    return LatencyReport(label, seed, comp, aigc, ve, comp + aigc + ve, records)


def policy_function(name: str, config: ExperimentConfig, checkpoint=None):
    if name == "fra":
        fixed = config.fra.action()
        return lambda slot: fixed
    if name == "rra":
        rng = np.random.default_rng(np.random.SeedSequence([config.run.eval_seed, 3]))
        return lambda slot: rra_policy(rng)
    if name == "oracle":
        res = config.run.oracle_resolution
        return lambda slot: oracle_per_slot(slot.channel, slot.tasks, config.system, res)[0]
    if name == "lara":
        if checkpoint is None:
            raise FileNotFoundError("policy 'lara' needs a checkpoint")
        agent = load_agent(config, checkpoint)
        return lambda slot: agent.policy(slot.state)
    raise ValueError(f"unknown policy {name!r}; expected one of {', '.join(POLICIES)}")


def eval_label(policy: str, seed=None) -> str:
    return f"{policy}_seed{seed}" if policy == "lara" and seed is not None else policy


def write_report(report: LatencyReport, directory: Path) -> Path:
    path = Path(directory) / f"eval_{report.policy}.csv"
    write_csv(path, SLOT_HEADER, report.records)
    return path


def read_report(path: Path) -> LatencyReport:
    header, rows = read_csv(path)
    if tuple(header) != SLOT_HEADER:
        raise ValueError(f"{path}: unexpected header")
    records = [(int(r[0]), *(float(x) for x in r[1:])) for r in rows]
    arr = np.array([r[-4:] for r in records])
    comp, aigc, ve = (float(x) for x in arr[:, :3].mean(axis=0))
    label = path.stem[len("eval_"):]
    seed = label.split("_seed", 1)[1] if "_seed" in label else ""
    return LatencyReport(label, seed, comp, aigc, ve, comp + aigc + ve, records)


def write_comparison(eval_dir: Path) -> Path:
    """Summarize every ``eval_*.csv`` in ``eval_dir`` into ``comparison.csv``."""
    eval_dir = Path(eval_dir)
    reports = [read_report(p) for p in sorted(eval_dir.glob("eval_*.csv"))]
    path = eval_dir / "comparison.csv"
    write_csv(path, COMPARISON_HEADER,
              [(r.policy, r.seed, len(r.records), r.lat_comp, r.lat_aigc, r.lat_ve, r.total)
               for r in reports])
    return path


def run_eval(config: ExperimentConfig, policy: str, out, checkpoint=None, seed=None,
             overwrite: bool = False, slots=None) -> LatencyReport:
    """Evaluate one policy on the shared eval slots and refresh ``comparison.csv``."""
    out = Path(out)
    if policy == "lara" and checkpoint is None and seed is not None:
        checkpoint = seed_dir(out, seed) / "checkpoints" / "final.npz"
    label = eval_label(policy, seed)
    eval_dir = out / "eval"
    _guard(eval_dir / f"eval_{label}.csv", overwrite)
    fn = policy_function(policy, config, checkpoint)
    slots = eval_slots(config) if slots is None else slots
    report = evaluate(fn, slots, config, label, "" if seed is None else seed)
    write_report(report, eval_dir)
    write_comparison(eval_dir)
    return report


def trained_seeds(out) -> list[int]:
    seeds = []
    for d in sorted(Path(out).glob("seed_*")):
        if (d / "checkpoints" / "final.npz").exists():
            seeds.append(int(d.name.split("_", 1)[1]))
    return sorted(seeds)


def run_compare(config: ExperimentConfig, out, overwrite: bool = False) -> dict[str, LatencyReport]:
    """Evaluate FRA, RRA, the oracle and every trained seed on the same slots."""
    out = Path(out)
    seeds = trained_seeds(out)
    labels = ["fra", "rra", "oracle"] + [eval_label("lara", s) for s in seeds]
    for label in labels:
        _guard(out / "eval" / f"eval_{label}.csv", overwrite)
    slots = eval_slots(config)
    reports = {}
    for name in ("fra", "rra", "oracle"):
        reports[name] = run_eval(config, name, out, overwrite=True, slots=slots)
    for s in seeds:
        reports[eval_label("lara", s)] = run_eval(config, "lara", out, seed=s, overwrite=True, slots=slots)
    return reports


# ---------------------------------------------------------- figure tables

def mean_stderr(values) -> tuple[float, float]:
    """Mean and sample standard error; the error of a single value is 0."""
    values = np.asarray(values, dtype=float)
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def _curves(run_dir: Path) -> list[dict[str, np.ndarray]]:
    curves = []
    for d in sorted(Path(run_dir).glob("seed_*")):
        path = d / "reward_curve.csv"
        if not path.exists():
            continue
        header, rows = read_csv(path)
        if tuple(header) != REWARD_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        data = np.array(rows, dtype=float).reshape(-1, len(REWARD_HEADER))
        curves.append({name: data[:, i] for i, name in enumerate(REWARD_HEADER)})
    return curves


def _seed_table(curves, columns):
    n = min(len(c["episode"]) for c in curves)
    rows = []
    for i in range(n):
        row = [int(curves[0]["episode"][i])]
        for col in columns:
            row.extend(mean_stderr([c[col][i] for c in curves]))
        rows.append(row + [len(curves)])
    return rows


def emit_plots_csv(run_dir, render: bool = True) -> dict[str, Path]:
    """Join per-seed artifacts into mean +- stderr tables (and PNG figures)."""
    run_dir = Path(run_dir)
    plots = run_dir / "plots"
    written = {}
    curves = _curves(run_dir)
    lr_dirs = sorted(d for d in run_dir.glob("lr_*") if d.is_dir() and _curves(d))
    comparison = run_dir / "eval" / "comparison.csv"
    if not curves and not lr_dirs and not comparison.exists():
        raise FileNotFoundError(f"no training curves or evaluation results under {run_dir}")
    if curves:
        written["reward"] = plots / "reward_vs_episode.csv"
        write_csv(written["reward"], ("episode", "return_mean", "return_stderr", "n_seeds"),
                  _seed_table(curves, ["return"]))
        written["latency"] = plots / "latency_vs_episode.csv"
        header = ["episode"]
        for col in ("lat_comp", "lat_aigc", "lat_ve"):
            header += [f"{col}_mean", f"{col}_stderr"]
        write_csv(written["latency"], header + ["n_seeds"],
                  _seed_table(curves, ["lat_comp", "lat_aigc", "lat_ve"]))
    if lr_dirs:
        rows = []
        for d in lr_dirs:
            lr = d.name[len("lr_"):]
            for row in _seed_table(_curves(d), ["return"]):
                rows.append([lr, *row])
        written["reward_by_lr"] = plots / "reward_vs_episode_by_lr.csv"
        write_csv(written["reward_by_lr"],
                  ("lr", "episode", "return_mean", "return_stderr", "n_seeds"), rows)
    if comparison.exists():
        _, rows = read_csv(comparison)
        groups: dict[str, list[list[float]]] = {}
        for r in rows:
            family = r[0].split("_seed", 1)[0]
            groups.setdefault(family, []).append([float(x) for x in r[3:7]])
        order = [p for p in POLICIES if p in groups] + sorted(set(groups) - set(POLICIES))
        table = []
        for family in order:
            vals = np.array(groups[family])
            row = [family]
            for j in range(4):
                row.extend(mean_stderr(vals[:, j]))
            table.append(row + [len(vals)])
        written["policy"] = plots / "policy_latency.csv"
        header = ["policy"]
        for col in ("lat_comp", "lat_aigc", "lat_ve", "total"):
            header += [f"{col}_mean", f"{col}_stderr"]
        write_csv(written["policy"], header + ["n_runs"], table)
    if render:
        from .plotting import render_figures
        written.update(render_figures(written, plots))
    return written
