"""Run configuration: a flat TOML file mirrored by command-line flags."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import tomli


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    seed: int | None = None
    input: list[str] = field(default_factory=list)
    output: str = "out"
    jobs: int = 1
    # vocabulary
    no_below: int = 15
    no_above: float = 0.5
    issues_only_filter: bool = False
    stopwords: str | None = None
    lemma_table: str | None = None
    aliases: str | None = None
    # topic model
    k_min: int = 1
    k_max: int = 30
    alpha: float | None = None
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 200
    lag: int = 10
    fold_in_iterations: int = 50
    tfidf_pseudocounts: bool = False
    issues_only_training: bool = False
    coherence: str = "npmi"
    window_size: int = 110
    binary_model: bool = False
    # analyses
    windowing: str = "yearly"
    keeper_threshold: float = 0.5
    leaver_threshold: float = 0.10
    split_margin: float = 0.01
    entropy_top: int = 5
    top_n: int = 1
    alignment_year: int | None = None
    alignment_k: int | None = None
    alignment_min_issues: int = 10

    def validate(self) -> "RunConfig":
        if self.seed is None:
            raise ConfigError("a seed is required (--seed or 'seed' in the config file)")
        if not 0 < self.no_above <= 1 or self.no_below < 0:
            raise ConfigError("need no_below >= 0 and 0 < no_above <= 1")
        if not 1 <= self.k_min <= self.k_max:
            raise ConfigError("need 1 <= k_min <= k_max")
        if self.burn_in < 0 or self.iterations < 1 or self.lag < 1 or self.fold_in_iterations < 1:
            raise ConfigError("iterations, lag and fold_in_iterations must be positive, burn_in non-negative")
        if self.alpha is not None and self.alpha <= 0 or self.beta <= 0:
            raise ConfigError("priors must be positive")
        if self.windowing not in ("yearly", "quarterly"):
            raise ConfigError("windowing must be 'yearly' or 'quarterly'")
        if self.coherence not in ("npmi", "cv"):
            raise ConfigError("coherence must be 'npmi' or 'cv'")
        for name in ("keeper_threshold", "leaver_threshold"):
            if not 0 < getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in (0, 1]")
        if self.split_margin < 0 or self.entropy_top < 1 or self.top_n < 1 or self.jobs < 1:
            raise ConfigError("split_margin >= 0, entropy_top >= 1, top_n >= 1, jobs >= 1 required")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


_PATH_KEYS = ("input", "output", "stopwords", "lemma_table", "aliases")


def load_config(path: str | Path) -> dict:
    """Read a config file; relative paths inside it resolve against its directory."""
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            raw = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {', '.join(unknown)}")
    base = path.parent
    for key in _PATH_KEYS:
        if key not in raw or raw[key] is None:
            continue
        if key == "input":
            vals = raw[key] if isinstance(raw[key], list) else [raw[key]]
            raw[key] = [str(base / v) for v in vals]
        else:
            raw[key] = str(base / raw[key])
    return raw


def make_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """File values first, then non-None overrides (flags win)."""
    values = dict(file_values or {})
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    try:
        return RunConfig(**values).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
