"""Experiment configuration: defaults, ``key=value`` files and CLI overrides."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

from mhgrad.losses import LossId


class ConfigError(ValueError):
    pass


class Experiment(enum.Enum):
    TABLE1 = "table1"
    LAMBDA_VS_ALPHA = "lambda-vs-alpha"
    BATCH_MSE = "batch-mse"
    VAR_REDUCTION = "var-reduction"
    GREEKS = "greeks"
    TIMING = "timing"


def parse_grid(text: str) -> tuple[float, ...]:
    """``"a:b:step"`` (inclusive) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        try:
            a, b, step = (float(p) for p in text.split(":"))
        except ValueError:
            raise ConfigError(f"bad grid {text!r}; expected a:b:step") from None
        if step <= 0 or b < a:
            raise ConfigError(f"bad grid {text!r}; need step > 0 and b >= a")
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        return tuple(round(a + i * step, 12) for i in range(n))
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"bad list {text!r}") from None


def _parse_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"bad integer list {text!r}") from None


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad boolean {text!r}")


def _parse_int(text: str) -> int:
    # accept 1e5-style counts
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"bad integer {text!r}") from None
    if v != int(v):
        raise ConfigError(f"bad integer {text!r}")
    return int(v)


def _parse_optional_float(text: str):
    t = text.strip().lower()
    return None if t in ("", "none", "auto") else float(t)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment = Experiment.TABLE1
    n_samples: int = 100_000
    replicates: int = 50
    trials: int = 500
    ref_samples: int = 10_000_000
    batch_sizes: tuple[int, ...] = (8, 16, 32, 64, 128, 256, 512)
    alphas: tuple[float, ...] = field(default_factory=lambda: parse_grid("0.5:3.0:0.25"))
    alpha: float = 2.0
    theta: float = 0.8
    loss: str = "clipquad"
    ridge: float | None = None
    seed: int = 42
    normalized_weight: bool | None = None  # None: experiment default
    split_batch: bool = False
    out_path: str | None = None
    workers: int = 1
    timestamp: bool = True
    n_nodes: int = 256
    moneyness: tuple[float, ...] = (0.5, 0.8, 1.0, 1.2, 2.0)
    gbm_s0: float = 100.0
    gbm_mu: float = 0.05
    gbm_sigma: float = 0.2
    gbm_T: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n_samples < 2:
            raise ConfigError("n_samples must be >= 2")
        if self.split_batch and self.n_samples < 4:
            raise ConfigError("split_batch needs n_samples >= 4")
        if self.replicates < 1 or self.trials < 1:
            raise ConfigError("replicates and trials must be >= 1")
        if self.ref_samples < 2:
            raise ConfigError("ref_samples must be >= 2")
        if not self.alphas or any(a < 0 for a in self.alphas):
            raise ConfigError("alphas must be a non-empty list of values >= 0")
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")
        if not self.batch_sizes or any(b < 2 for b in self.batch_sizes):
            raise ConfigError("batch sizes must all be >= 2")
        if self.ridge is not None and self.ridge <= 0:
            raise ConfigError("ridge must be positive")
        if not (0 <= self.seed < 1 << 64):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.n_nodes < 32:
            raise ConfigError("n_nodes must be >= 32")
        if self.loss not in {m.value for m in LossId}:
            raise ConfigError(f"unknown loss {self.loss!r}")
        if min(self.gbm_s0, self.gbm_sigma, self.gbm_T) <= 0 or any(m <= 0 for m in self.moneyness):
            raise ConfigError("GBM s0, sigma, T and moneyness must be positive")

    @property
    def use_normalized(self) -> bool:
        if self.normalized_weight is not None:
            return self.normalized_weight
        # the variance-reduction curve defaults to the normalized weight
        return self.experiment is Experiment.VAR_REDUCTION

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def items(self):
        """Canonical ``(key, text)`` pairs, for echoing into output metadata."""
        for f in dataclasses.fields(self):
            if f.name in ("workers", "timestamp", "out_path"):
                continue  # do not affect results
            yield f.name, format_value(getattr(self, f.name))


def format_value(v) -> str:
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, tuple):
        return ",".join(format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "auto"
    return str(v).lower() if isinstance(v, bool) else str(v)


_PARSERS = {
    "experiment": lambda t: Experiment(t.strip()),
    "n_samples": _parse_int,
    "replicates": _parse_int,
    "trials": _parse_int,
    "ref_samples": _parse_int,
    "batch_sizes": _parse_ints,
    "alphas": parse_grid,
    "alpha": float,
    "theta": float,
    "loss": str.strip,
    "ridge": _parse_optional_float,
    "seed": _parse_int,
    "normalized_weight": lambda t: None if t.strip().lower() == "auto" else _parse_bool(t),
    "split_batch": _parse_bool,
    "out_path": str.strip,
    "workers": _parse_int,
    "timestamp": _parse_bool,
    "n_nodes": _parse_int,
    "moneyness": parse_grid,
    "gbm_s0": float,
    "gbm_mu": float,
    "gbm_sigma": float,
    "gbm_T": float,
}

_ALIASES = {"samples": "n_samples", "alpha_grid": "alphas", "normalized": "normalized_weight", "out": "out_path"}


def parse_value(key: str, text: str):
    key = _ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
    if key not in _PARSERS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return key, _PARSERS[key](text)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"bad value for {key}: {text!r} ({e})") from None


def read_config_file(path) -> dict:
    """Parse a UTF-8 ``key=value`` file; ``#`` starts a comment."""
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, text = line.split("=", 1)
        k, v = parse_value(key.strip(), text)
        values[k] = v
    return values


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return ExperimentConfig(**merged)
    except TypeError as e:
        raise ConfigError(str(e)) from None
