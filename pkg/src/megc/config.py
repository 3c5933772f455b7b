"""Experiment configuration: INI-style sections mapped onto typed dataclasses.

Every key is optional; an empty file yields the shipped defaults. Unknown
sections or keys are errors reported with their line number.
"""

from __future__ import annotations

import configparser
import dataclasses
import re
import typing
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .agent import AgentConfig
from .env import EnvConfig
from .latency import Action
from .system import SystemParams, ValidationError

PRESETS = ("paper_defaults",)


class ConfigError(ValueError):
    """Malformed config text; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.field = field


@dataclass(frozen=True)
class RunConfig:
    seeds: tuple[int, ...] = (0, 1, 2)
    episodes: int = 1000
    eval_slots: int = 1000
    eval_seed: int = 10_000
    checkpoint_every: int = 100
    output_dir: str = "runs"
    oracle_resolution: float = 0.05

    def __post_init__(self):
        if not self.seeds:
            raise ValidationError("run.seeds", "at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValidationError("run.seeds", "seeds must be distinct")
        if self.episodes < 1:
            raise ValidationError("run.episodes", "must be >= 1")
        if self.eval_slots < 1:
            raise ValidationError("run.eval_slots", "must be >= 1")
        if self.checkpoint_every < 1:
            raise ValidationError("run.checkpoint_every", "must be >= 1")
        if not 0 < self.oracle_resolution <= 0.5:
            raise ValidationError("run.oracle_resolution", "must lie in (0, 0.5]")


@dataclass(frozen=True)
class FraConfig:
    """The fixed allocation used by the FRA baseline."""

    alpha_comp_off: float = 0.5
    alpha_ve_off: float = 0.5
    alpha_aigc_back: float = 0.5
    alpha_ve_back: float = 0.5
    beta: float = 0.5
    lam: float = 0.5
    omega_comp: float = 1 / 3
    omega_aigc: float = 1 / 3
    omega_ve: float = 1 / 3

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"fra.{f.name}", f"must lie in [0, 1], got {value!r}")
        checks = (
            ("fra.alpha_off", self.alpha_comp_off + self.alpha_ve_off),
            ("fra.alpha_back", self.alpha_aigc_back + self.alpha_ve_back),
            ("fra.omega", self.omega_comp + self.omega_aigc + self.omega_ve),
        )
        for name, total in checks:
            if abs(total - 1.0) > 1e-9:
                raise ValidationError(name, f"shares must sum to 1, got {total!r}")

    def action(self) -> Action:
        return Action(*(getattr(self, f.name) for f in dataclasses.fields(self)))


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemParams = field(default_factory=SystemParams)
    agent: AgentConfig = field(default_factory=AgentConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    run: RunConfig = field(default_factory=RunConfig)
    fra: FraConfig = field(default_factory=FraConfig)

    def replace(self, section: str, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section), **changes)})


SECTIONS = {"system": SystemParams, "agent": AgentConfig, "env": EnvConfig,
            "run": RunConfig, "fra": FraConfig}


def _convert(raw: str, hint):
    origin = typing.get_origin(hint)
    if origin is tuple:
        args = typing.get_args(hint)
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_convert(p, args[0]) for p in parts)
        if len(parts) != len(args):
            raise ValueError(f"expected {len(args)} comma-separated values")
        return tuple(_convert(p, a) for p, a in zip(parts, args))
    if hint is bool:
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if hint is int:
        value = float(raw)
        if value != int(value):
            raise ValueError(f"not an integer: {raw!r}")
        return int(value)
    if hint is float:
        return float(raw)
    if hint is str:
        return raw.strip()
    raise TypeError(f"unsupported field type {hint!r}")


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """Map (section, key) to the 1-based line where the key is set."""
    lines, section = {}, None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", stripped)
        if m:
            section = m.group(1).strip().lower()
            lines[(section, "")] = number
            continue
        key = re.split(r"[=:]", stripped, maxsplit=1)[0].strip().lower()
        if section is not None:
            lines.setdefault((section, key), number)
    return lines


def parse_config_text(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any [section]", exc.lineno) from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno) from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", line) from exc
    lines = _key_lines(text)
    blocks = {}
    for section in parser.sections():
        cls = SECTIONS.get(section)
        if cls is None:
            raise ConfigError(f"unknown section [{section}]", lines.get((section, "")))
        hints = typing.get_type_hints(cls)
        values = {}
        for key, raw in parser.items(section):
            line = lines.get((section, key))
            if key not in hints:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line, f"{section}.{key}")
            try:
                values[key] = _convert(raw, hints[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{section}.{key}: {exc}", line, f"{section}.{key}") from exc
        try:
            blocks[section] = cls(**values)
        except ValidationError as exc:
            name = exc.field if "." in exc.field else f"{section}.{exc.field}"
            raise ValidationError(name, str(exc).split(": ", 1)[-1]) from exc
    return ExperimentConfig(**blocks)


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    return resources.files("megc.presets").joinpath(f"{name}.ini").read_text()


def parse_config(path) -> ExperimentConfig:
    """Load a config file; a bare preset name such as ``paper_defaults`` also works."""
    if path is None:
        return ExperimentConfig()
    p = Path(path)
    if not p.exists() and str(path) in PRESETS:
        return parse_config_text(preset_text(str(path)))
    return parse_config_text(p.read_text())


def _format(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def dump_config(config: ExperimentConfig) -> str:
    """Canonical text form; parsing it back gives an equal config."""
    out = []
    for section in SECTIONS:
        block = getattr(config, section)
        out.append(f"[{section}]")
        for f in dataclasses.fields(block):
            out.append(f"{f.name} = {_format(getattr(block, f.name))}")
        out.append("")
    return "\n".join(out)
