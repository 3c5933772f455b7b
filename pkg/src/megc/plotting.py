"""Render the figure tables written by the harness as PNG files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.4,
    "savefig.dpi": 150,
}
COLORS = {"lara": "#1f77b4", "fra": "#ff7f0e", "rra": "#2ca02c", "oracle": "#7f7f7f"}
MU_NAMES = {"lat_comp": "U_comp", "lat_aigc": "U_AIGC", "lat_ve": "U_VE"}
# keep PNG bytes reproducible across runs
PNG_META = {"Software": None}


def _load(path: Path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.genfromtxt(path, delimiter=",", skip_header=1, dtype=str, ndmin=2)
    return header, data


def _band(ax, x, mean, err, label, color=None):
    line, = ax.plot(x, mean, label=label, color=color)
    ax.fill_between(x, mean - err, mean + err, alpha=0.25, color=line.get_color(), linewidth=0)


def _smooth(y, window):
    if window <= 1 or len(y) < window:
        return y
    kernel = np.ones(window) / window
    head = np.cumsum(y[:window - 1]) / np.arange(1, window)
    return np.concatenate([head, np.convolve(y, kernel, mode="valid")])


def reward_figure(table: Path, out: Path) -> Path:
    header, data = _load(table)
    x = data[:, 0].astype(float)
    mean, err = data[:, 1].astype(float), data[:, 2].astype(float)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.5, 2.6))
        w = max(1, len(x) // 50)
        _band(ax, x, _smooth(mean, w), _smooth(err, w), "LARA")
        ax.set_xlabel("Episode")
        ax.set_ylabel("Episode return")
        fig.tight_layout()
        fig.savefig(out, metadata=PNG_META)
        plt.close(fig)
    return out


def reward_by_lr_figure(table: Path, out: Path) -> Path:
    header, data = _load(table)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.5, 2.6))
        for lr in dict.fromkeys(data[:, 0]):
            rows = data[data[:, 0] == lr]
            x = rows[:, 1].astype(float)
            w = max(1, len(x) // 50)
            _band(ax, x, _smooth(rows[:, 2].astype(float), w),
                  _smooth(rows[:, 3].astype(float), w), f"LR = {lr}")
        ax.set_xlabel("Episode")
        ax.set_ylabel("Episode return")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(out, metadata=PNG_META)
        plt.close(fig)
    return out


def latency_figure(table: Path, out: Path) -> Path:
    header, data = _load(table)
    x = data[:, 0].astype(float)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 3, figsize=(7.0, 2.3), sharex=True)
        for ax, col in zip(axes, MU_NAMES):
            i = header.index(f"{col}_mean")
            w = max(1, len(x) // 50)
            _band(ax, x, _smooth(data[:, i].astype(float), w),
                  _smooth(data[:, i + 1].astype(float), w), MU_NAMES[col])
            ax.set_title(MU_NAMES[col])
            ax.set_xlabel("Episode")
        axes[0].set_ylabel("Mean slot latency (s)")
        fig.tight_layout()
        fig.savefig(out, metadata=PNG_META)
        plt.close(fig)
    return out


def policy_figure(table: Path, out: Path) -> Path:
    header, data = _load(table)
    policies = list(data[:, 0])
    groups = ["lat_comp", "lat_aigc", "lat_ve", "total"]
    labels = ["U_comp", "U_AIGC", "U_VE", "Total"]
    width = 0.8 / max(1, len(policies))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 2.6))
        base = np.arange(len(groups))
        for k, policy in enumerate(policies):
            means = [float(data[k, header.index(f"{g}_mean")]) for g in groups]
            errs = [float(data[k, header.index(f"{g}_stderr")]) for g in groups]
            ax.bar(base + k * width, means, width, yerr=errs, label=policy.upper(),
                   color=COLORS.get(policy), capsize=2)
        ax.set_xticks(base + width * (len(policies) - 1) / 2)
        ax.set_xticklabels(labels)
        ax.set_ylabel("Average latency (s)")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(out, metadata=PNG_META)
        plt.close(fig)
    return out


def render_figures(tables: dict[str, Path], directory: Path) -> dict[str, Path]:
    makers = {"reward": reward_figure, "reward_by_lr": reward_by_lr_figure,
              "latency": latency_figure, "policy": policy_figure}
    figures = {}
    for key, table in tables.items():
        if key in makers:
            figures[f"{key}_png"] = makers[key](table, Path(directory) / (Path(table).stem + ".png"))
    return figures
