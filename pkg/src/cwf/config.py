"""Declarative experiment configs: flat JSON documents, one per run.

SNR values live in dB here and in every CSV; the linear power used
internally is p = 10**(dB/10).  A seed is mandatory whenever an experiment
draws random numbers; there is no wall-clock fallback.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

KINDS = ("thm1_sweep", "queue_sweep", "fading_sweep", "waterfill_sweep", "validate")

#: fixed seed used by `cwf validate` when none is given
DEFAULT_VALIDATE_SEED = 123456789


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration (CLI exit code 2)."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a kind, its parameter grid, trial budget and seed."""

    kind: str
    snr_db: tuple[float, ...] = ()
    payload_bits: tuple[float, ...] = ()
    s_count: int = 0
    s_counts: tuple[int, ...] = ()
    t_sub: tuple[float, ...] = ()
    epsilon: float = 1e-3
    trials: int = 0
    seed: int | None = None
    out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "snr_db", tuple(float(v) for v in self.snr_db))
        object.__setattr__(self, "payload_bits", tuple(float(v) for v in self.payload_bits))
        object.__setattr__(self, "s_counts", tuple(int(v) for v in self.s_counts))
        object.__setattr__(self, "t_sub", tuple(float(v) for v in self.t_sub))
        self._check()

    def _check(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.trials < 0:
            raise ConfigError(f"trials must be >= 0, got {self.trials}")
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if self.seed is not None and self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.trials > 0 and self.seed is None and self.kind != "validate":
            raise ConfigError("a seed is required for any stochastic experiment")
        if self.kind in ("thm1_sweep", "fading_sweep", "waterfill_sweep", "queue_sweep"):
            if not self.snr_db:
                raise ConfigError(f"{self.kind} needs a non-empty snr_db grid")
        if self.kind in ("thm1_sweep", "queue_sweep"):
            if len(self.payload_bits) < 1:
                raise ConfigError(f"{self.kind} needs per-user payload_bits")
        if self.kind == "queue_sweep" and not self.t_sub:
            raise ConfigError("queue_sweep needs a non-empty t_sub grid")
        if self.kind == "fading_sweep":
            if len(self.payload_bits) != 1:
                raise ConfigError("fading_sweep takes exactly one common payload")
            if self.s_count < 1:
                raise ConfigError("fading_sweep needs s_count >= 1")
        if self.kind == "waterfill_sweep" and not self.s_counts:
            raise ConfigError("waterfill_sweep needs a non-empty s_counts grid")

    @property
    def resolved_seed(self) -> int:
        if self.seed is not None:
            return self.seed
        if self.kind == "validate":
            return DEFAULT_VALIDATE_SEED
        raise ConfigError("no seed available")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        d = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.to_dict().items()}
        return json.dumps(d, indent=2, sort_keys=True)

    def config_hash(self) -> str:
        """Hash of the experiment semantics; the output path does not count."""
        d = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.to_dict().items()}
        d.pop("out", None)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "kind" not in data:
            raise ConfigError("config must declare a kind")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        return cls.from_dict(data)

    def override(self, **kwargs) -> "ExperimentConfig":
        """New config with the given fields replaced (CLI flag overrides)."""
        d = self.to_dict()
        d.update({k: v for k, v in kwargs.items() if v is not None})
        return ExperimentConfig.from_dict(d)


def point_seed(root_seed: int, grid_index: int) -> int:
    """Derived per-grid-point seed; stable across runs and platforms."""
    return int(np.random.SeedSequence([root_seed, grid_index]).generate_state(1)[0])


def default_config(kind: str) -> ExperimentConfig:
    """Built-in configs; sweeps default to the analytic-only columns."""
    if kind == "thm1_sweep":
        return ExperimentConfig(
            kind=kind, snr_db=tuple(range(-5, 11)), payload_bits=(300.0, 1000.0),
            epsilon=1e-3, trials=0)
    if kind == "queue_sweep":
        return ExperimentConfig(
            kind=kind, snr_db=(0.0,), payload_bits=(300.0, 1000.0),
            t_sub=tuple(float(t) for t in range(600, 2801, 200)),
            epsilon=1e-3, trials=0)
    if kind == "fading_sweep":
        return ExperimentConfig(
            kind=kind, snr_db=tuple(range(-5, 11)), payload_bits=(1000.0,),
            s_count=2, epsilon=1e-3, trials=0)
    if kind == "waterfill_sweep":
        return ExperimentConfig(
            kind=kind, snr_db=(-3.0, 0.0, 10.0), s_counts=(1, 2, 4), trials=0)
    if kind == "validate":
        return ExperimentConfig(kind=kind, seed=DEFAULT_VALIDATE_SEED)
    raise ConfigError(f"unknown kind {kind!r}")
