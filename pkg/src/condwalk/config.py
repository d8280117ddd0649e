"""Experiment configuration files.

A file holds ``key = value`` lines grouped into ``[section]`` blocks.
Top-level keys (before the first section) are defaults inherited by every
section; each section that sets ``experiment`` defines one experiment. A
file without sections is read as a single experiment. Lists are
comma-separated.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError

EXPERIMENTS = (
    "persistence", "local", "caravenna", "exit", "interval", "cdf", "duality",
    "kernel-identities", "renewal", "llt-rate", "fuk-nagaev", "level-sets",
)

_LISTS = {"n": int, "x": float, "y": float, "v": float, "u": float}
_SCALARS = {
    "law": str, "experiment": str, "q": float, "seed": int, "paths": int, "output": str,
    "threads": int, "K": int, "xmax": float, "n_cap": int, "table_paths": int, "delta": float,
}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    experiment: str  # empty for settings used by single-purpose commands
    law: str = "ssrw"
    n: tuple[int, ...] = ()
    x: tuple[float, ...] = (0.0,)
    y: tuple[float, ...] = (0.0,)
    v: tuple[float, ...] = (1.0,)
    u: tuple[float, ...] = (1.0,)
    q: float = 0.0
    seed: int = 0
    paths: int = 100_000
    output: str | None = None
    threads: int = 1
    K: int = 20_000
    xmax: float = 10.0
    n_cap: int = 4096
    table_paths: int = 100_000
    delta: float = 1.0

    def __post_init__(self):
        if self.experiment and self.experiment not in EXPERIMENTS:
            raise ConfigError(f"[{self.name}] unknown experiment {self.experiment!r}")
        if any(n < 1 for n in self.n):
            raise ConfigError(f"[{self.name}] n values must be positive")
        if self.paths < 1 or self.table_paths < 1:
            raise ConfigError(f"[{self.name}] path counts must be positive")
        if self.q < 0:
            raise ConfigError(f"[{self.name}] q must be nonnegative")
        if self.q > 0 and self.q >= self.delta / (8 * (3 + self.delta)):
            raise ConfigError(f"[{self.name}] q must be below delta/(8(3+delta)) = {self.delta / (8 * (3 + self.delta)):.6g}")

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


def _convert(section: str, key: str, raw: str):
    try:
        if key in _LISTS:
            items = [s.strip() for s in raw.split(",") if s.strip()]
            return tuple(_LISTS[key](float(s)) if _LISTS[key] is int else _LISTS[key](s) for s in items)
        return _SCALARS[key](float(raw)) if _SCALARS[key] is int else _SCALARS[key](raw.strip())
    except ValueError as exc:
        raise ConfigError(f"[{section}] bad value for {key!r}: {raw!r}") from exc


def _build(name: str, items: dict[str, str]) -> ExperimentConfig:
    kw = {}
    for key, raw in items.items():
        if key not in _LISTS and key not in _SCALARS:
            raise ConfigError(f"[{name}] unknown key {key!r}")
        kw[key] = _convert(name, key, raw)
    if "experiment" not in kw:
        raise ConfigError(f"[{name}] missing 'experiment'")
    return ExperimentConfig(name=name, **kw)


def parse_config(text: str) -> list[ExperimentConfig]:
    """Parse config text into experiments, in file order."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive (K)
    try:
        cp.read_string("[DEFAULT]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    sections = [s for s in cp.sections() if "experiment" in cp[s]]
    if not cp.sections():
        if "experiment" not in cp.defaults():
            return []
        return [_build("main", dict(cp.defaults()))]
    return [_build(s, dict(cp[s])) for s in sections]


def load_config(path: str | Path) -> list[ExperimentConfig]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(p)!r}: {exc}") from exc
    return parse_config(text)


def parse_settings(text: str) -> ExperimentConfig:
    """Top-level keys merged with the first section, without requiring an experiment."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string("[DEFAULT]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    items = dict(cp[cp.sections()[0]]) if cp.sections() else dict(cp.defaults())
    items.setdefault("experiment", "")
    return _build("settings", items)


def load_settings(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return parse_settings("")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc}") from exc
    return parse_settings(text)
