"""Shared domain types, tag tokenization, label encoding and dataset splitting."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import LabelError, MalformedVariableError, SplitError

DEFAULT_SCENARIOS = (1, 2, 6, 7, 8, 10, 11, 12, 13, 17)


class Direction(str, Enum):
    HIGH = "High"
    LOW = "Low"

    @classmethod
    def parse(cls, text: str) -> "Direction":
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown alarm direction {text!r}")


def tokenize(variable_name: str, direction) -> str:
    """Join a variable name and alarm direction into one vocabulary token.

    Runs of whitespace in the name collapse to a single underscore, so
    ``tokenize("Reactor Coolant Temp", "High") == "Reactor_Coolant_Temp+High"``.
    """
    if "+" in variable_name:
        raise MalformedVariableError(f"variable name contains '+': {variable_name!r}")
    parts = variable_name.split()
    if not parts:
        raise MalformedVariableError("empty variable name")
    return "_".join(parts) + "+" + Direction(direction).value


@dataclass(frozen=True)
class AlarmEvent:
    timestamp: float
    variable_name: str
    direction: Direction
    priority: int = 0
    tag_token: str = field(init=False)

    def __post_init__(self):
        ts = float(self.timestamp)
        if not math.isfinite(ts) or ts < 0:
            raise ValueError(f"invalid alarm timestamp {self.timestamp!r}")
        if self.priority < 0:
            raise ValueError(f"negative priority {self.priority}")
        object.__setattr__(self, "timestamp", ts)
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "tag_token", tokenize(self.variable_name, self.direction))

    def sort_key(self):
        return (self.timestamp, self.variable_name, self.direction.value)


@dataclass(frozen=True)
class FaultLabel:
    scenario_id: int
    class_index: int


def make_label(scenario_id: int, scenarios: Sequence[int] = DEFAULT_SCENARIOS) -> FaultLabel:
    """Label for ``scenario_id`` under the sorted scenario-id -> class-index bijection."""
    ordered = sorted(set(scenarios))
    try:
        return FaultLabel(int(scenario_id), ordered.index(int(scenario_id)))
    except ValueError:
        raise LabelError(f"scenario {scenario_id} not in scenario set {ordered}") from None


@dataclass(frozen=True)
class Occurrence:
    occurrence_id: str
    label: FaultLabel
    events: tuple

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(sorted(self.events, key=AlarmEvent.sort_key)))


@dataclass(frozen=True)
class Sample:
    window: np.ndarray
    target: np.ndarray
    source: tuple = ("", 0)

    def __post_init__(self):
        w = np.asarray(self.window, dtype=np.float64)
        t = np.asarray(self.target, dtype=np.float64)
        if w.ndim != 2 or not np.all(np.isfinite(w)):
            raise ValueError("window must be a finite 2-D matrix")
        if t.ndim != 1 or np.count_nonzero(t == 1.0) != 1 or np.count_nonzero(t) != 1:
            raise LabelError("target must be one-hot")
        w.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "window", w)
        object.__setattr__(self, "target", t)

    @property
    def class_index(self) -> int:
        return int(np.argmax(self.target))


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.70
    val_fraction: float = 0.15
    test_fraction: float = 0.15
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train_fraction, self.val_fraction, self.test_fraction)
        if any(not 0.0 < f < 1.0 for f in fracs):
            raise SplitError(f"split fractions must lie in (0, 1): {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-12:
            raise SplitError(f"split fractions must sum to 1: {fracs}")


def one_hot(label, num_classes: int) -> np.ndarray:
    index = label.class_index if isinstance(label, FaultLabel) else int(label)
    if not 0 <= index < num_classes:
        raise LabelError(f"class index {index} out of range for {num_classes} classes")
    vec = np.zeros(num_classes)
    vec[index] = 1.0
    return vec


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_sizes(n: int, cfg: SplitConfig) -> tuple[int, int, int]:
    n_val = _round_half_up(n * cfg.val_fraction)
    n_test = _round_half_up(n * cfg.test_fraction)
    n_train = n - n_val - n_test
    if min(n_train, n_val, n_test) <= 0:
        raise SplitError(f"split of {n} samples leaves an empty part: {(n_train, n_val, n_test)}")
    return n_train, n_val, n_test


def split_samples(samples: Sequence, cfg: SplitConfig):
    """Randomly partition ``samples`` into (train, val, test) lists.

    Validation and test sizes are ``round(N * fraction)``; train takes the rest.
    The permutation depends only on ``cfg.seed``.
    """
    n = len(samples)
    if n < 3:
        raise SplitError(f"need at least 3 samples to split, got {n}")
    n_train, n_val, _ = split_sizes(n, cfg)
    perm = np.random.default_rng(cfg.seed).permutation(n)
    parts = (perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:])
    return tuple([samples[i] for i in idx] for idx in parts)
