"""Experiment configuration: flat ``key = value`` files plus command-line overrides.

Recognised keys (defaults in brackets)::

    M [64]  N [100]  P [1.0]  snr_db [20]      # snr_db may be a comma list
    L [3]  tau [0.9]  train_taus [0.7, 0.9, 0.95]
    q_grid [0.1, ..., 0.9]  eps_floor [auto]  eps_floor_scale [1e-6]
    alpha [0.1]  epsilon [0.1]  max_epoch [200]  max_L [14]  max_channel [all]
    leave_one_out [true]  no_repeat [true]  n_dataset [2000]  n_eval_channels [1000]
    noiseless_dataset [false]  eval_in_dataset [false]
    seed [2024]  deact_seed [= seed]  eval_seed [= seed + 1]
    methods [exhaustive, hierarchical, random, qlearning]  budget [= Np]
    out [results]

Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .belief import EPS_FLOOR_SCALE
from .chansim import SystemConfig
from .mdp import DEFAULT_Q_GRID
from .protocol import KINDS
from .qlearner import Hyper


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    M: int = 64
    N: int = 100
    P: float = 1.0
    snr_db: tuple = (20.0,)
    L: int = 3
    tau: float = 0.9
    train_taus: tuple = (0.7, 0.9, 0.95)
    q_grid: tuple = DEFAULT_Q_GRID
    eps_floor: float | None = None
    eps_floor_scale: float = EPS_FLOOR_SCALE
    alpha: float = 0.1
    epsilon: float = 0.1
    max_epoch: int = 200
    max_L: int | None = None
    max_channel: int | None = None
    leave_one_out: bool = True
    no_repeat: bool = True
    n_dataset: int = 2000
    n_eval_channels: int = 1000
    noiseless_dataset: bool = False
    eval_in_dataset: bool = False
    seed: int = 2024
    deact_seed: int | None = None
    eval_seed: int | None = None
    methods: tuple = ("exhaustive", "hierarchical", "random", "qlearning")
    budget: int | None = None
    out: str = "results"

    def __post_init__(self):
        self.validate()

    # derived values ---------------------------------------------------------
    @property
    def Nc(self) -> int:
        return 2**self.L

    @property
    def Np(self) -> int:
        return 2 ** (self.L + 1) - 2

    @property
    def train_snr_db(self) -> float:
        return self.snr_db[0]

    def system(self, snr_db: float | None = None) -> SystemConfig:
        snr = self.train_snr_db if snr_db is None else snr_db
        return SystemConfig.from_snr_db(snr, M=self.M, N=self.N, P=self.P, seed=self.seed)

    def hyper(self) -> Hyper:
        return Hyper(
            alpha=self.alpha, epsilon=self.epsilon, max_epoch=self.max_epoch,
            max_channel=self.max_channel, max_L=self.max_L or self.Np,
            eps_floor=self.eps_floor, seed=self.seed, leave_one_out=self.leave_one_out,
            no_repeat=self.no_repeat,
        )

    def resolved_deact_seed(self) -> int:
        return self.seed if self.deact_seed is None else self.deact_seed

    def resolved_eval_seed(self) -> int:
        return self.seed + 1 if self.eval_seed is None else self.eval_seed

    def resolved_budget(self) -> int:
        return self.Np if self.budget is None else self.budget

    def validate(self):
        try:
            if self.M < 1 or self.N < 1:
                raise ConfigError("M and N must be >= 1")
            if self.P <= 0:
                raise ConfigError("P must be positive")
            if self.L < 1:
                raise ConfigError("L must be >= 1")
            if self.N % 2 ** (self.L - 1):
                raise ConfigError(f"N={self.N} must be divisible by 2**(L-1)={2 ** (self.L - 1)}")
            for t in (self.tau, *self.train_taus):
                if not 0 < t < 1:
                    raise ConfigError(f"tau values must lie in (0, 1), got {t}")
            if any(not 0 < q < 1 for q in self.q_grid):
                raise ConfigError("q_grid values must lie in (0, 1)")
            if not self.snr_db:
                raise ConfigError("snr_db needs at least one value")
            if self.n_eval_channels < 1:
                raise ConfigError("n_eval_channels must be >= 1")
            if self.n_dataset < self.Nc:
                raise ConfigError(f"n_dataset must be >= Nc={self.Nc}")
            if not 0 <= self.alpha <= 1 or not 0 <= self.epsilon <= 1:
                raise ConfigError("alpha and epsilon must lie in [0, 1]")
            if self.max_epoch < 1:
                raise ConfigError("max_epoch must be >= 1")
            if self.budget is not None and self.budget < 1:
                raise ConfigError("budget must be >= 1")
            if self.eps_floor is not None and not self.eps_floor > 0:
                raise ConfigError("eps_floor must be positive")
            if not self.eps_floor_scale > 0:
                raise ConfigError("eps_floor_scale must be positive")
            for m in self.methods:
                if m not in KINDS:
                    raise ConfigError(f"unknown method {m!r}; choose from {', '.join(KINDS)}")
            if self.seed < 0:
                raise ConfigError("seeds must be non-negative")
        except TypeError as exc:
            raise ConfigError(f"bad value type: {exc}") from None


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_list(conv):
    def parse(s: str):
        items = [x.strip() for x in s.replace(";", ",").split(",") if x.strip()]
        return tuple(conv(x) for x in items)

    return parse


def _optional(conv, none_words=("auto", "all", "none", "")):
    def parse(s: str):
        return None if s.strip().lower() in none_words else conv(s)

    return parse


_PARSERS = {
    "M": int, "N": int, "P": float, "snr_db": _parse_list(float), "L": int, "tau": float,
    "train_taus": _parse_list(float), "q_grid": _parse_list(float),
    "eps_floor": _optional(float), "eps_floor_scale": float, "alpha": float, "epsilon": float,
    "max_epoch": int, "max_L": _optional(int), "max_channel": _optional(int),
    "leave_one_out": _parse_bool, "no_repeat": _parse_bool, "n_dataset": int, "n_eval_channels": int,
    "noiseless_dataset": _parse_bool, "eval_in_dataset": _parse_bool, "seed": int,
    "deact_seed": _optional(int), "eval_seed": _optional(int),
    "methods": _parse_list(str), "budget": _optional(int), "out": str,
}


def parse_config_text(text: str, origin: str = "<config>") -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value'")
        if key not in _PARSERS:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](value.strip())
        except ValueError as exc:
            raise ConfigError(f"{origin}:{lineno}: bad value for {key}: {exc}") from None
    return values


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    values = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        values.update(parse_config_text(text, str(path)))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            v = "auto"
        elif isinstance(v, tuple):
            v = ", ".join(str(x) for x in v)
        elif isinstance(v, float) and math.isinf(v):
            v = "inf"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
