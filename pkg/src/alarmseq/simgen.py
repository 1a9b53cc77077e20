"""Synthetic labelled alarm corpora.

Stands in for a dynamic plant simulation: each fault scenario is described by
an ordered alarm signature plus a pool of follow-on alarms, and occurrences are
sampled from it with timing jitter and injected chattering bursts.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .config import overrides_for
from .core import DEFAULT_SCENARIOS, AlarmEvent, Direction, Occurrence, make_label
from .errors import ConfigError, GenerationError, TraceError

log = logging.getLogger(__name__)


class Kind(str, Enum):
    PRESSURE = "Pressure"
    FLOW = "Flow"
    TEMPERATURE = "Temperature"
    LEVEL = "Level"
    OTHER = "Other"


# ISA 18.2 recommended on-delays by variable kind, seconds
KIND_DELAY_S = {
    Kind.PRESSURE: 15.0,
    Kind.FLOW: 15.0,
    Kind.TEMPERATURE: 60.0,
    Kind.LEVEL: 60.0,
}
DEFAULT_OTHER_DELAY_S = 15.0

# durations are differences of decimal timestamps; absorb binary rounding
TIME_TOL_S = 1e-9

KIND_PRIORITY = {Kind.PRESSURE: 3, Kind.FLOW: 2, Kind.TEMPERATURE: 3, Kind.LEVEL: 2, Kind.OTHER: 1}


@dataclass(frozen=True)
class VariableSpec:
    variable_name: str
    kind: Kind
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"{self.variable_name}: sigma must be positive")
        object.__setattr__(self, "kind", Kind(self.kind))


@dataclass(frozen=True)
class AlarmLimits:
    high: float
    low: float


@dataclass(frozen=True)
class DelayTimer:
    delay_s: float

    def __post_init__(self):
        if self.delay_s < 0:
            raise ConfigError(f"negative delay {self.delay_s}")

    @classmethod
    def for_kind(cls, kind, other_delay_s: float = DEFAULT_OTHER_DELAY_S) -> "DelayTimer":
        return cls(KIND_DELAY_S.get(Kind(kind), other_delay_s))


@dataclass(frozen=True)
class SignatureStep:
    variable_name: str
    direction: Direction
    onset_mean_s: float
    onset_jitter_s: float = 0.0


@dataclass(frozen=True)
class FaultSignature:
    scenario_id: int
    steps: tuple
    tail_pool: tuple = ()

    def __post_init__(self):
        if not self.steps:
            raise ConfigError(f"fault {self.scenario_id}: empty signature")
        tags = [(s.variable_name, Direction(s.direction)) for s in self.steps]
        if len(set(tags)) != len(tags):
            raise ConfigError(f"fault {self.scenario_id}: repeated tag in signature steps")
        if any(s.onset_jitter_s < 0 for s in self.steps):
            raise ConfigError(f"fault {self.scenario_id}: negative onset jitter")


def default_plant(n_variables: int = 41) -> tuple:
    kinds = (Kind.PRESSURE, Kind.FLOW, Kind.TEMPERATURE, Kind.LEVEL)
    return tuple(
        VariableSpec(f"V{i + 1:02d}", kinds[i % 4], mu=100.0 + 5.0 * i, sigma=1.0 + 0.5 * (i % 4))
        for i in range(n_variables)
    )


def default_signatures(scenarios=DEFAULT_SCENARIOS, plant=None) -> tuple:
    """One signature per scenario over a disjoint block of four plant variables.

    Each block contributes six ordered signature alarms and all eight of its
    tags to the follow-on pool; the last plant variable is shared by every
    fault's pool as a plant-wide propagation alarm.
    """
    plant = plant or default_plant()
    names = [v.variable_name for v in plant]
    if len(names) < 4 * len(scenarios) + 1:
        raise ConfigError("plant too small for default signatures")
    shared = names[-1]
    sigs = []
    for f, sid in enumerate(scenarios):
        block = names[4 * f:4 * f + 4]
        primary = [Direction.HIGH if (f + j) % 2 == 0 else Direction.LOW for j in range(4)]
        opposite = [Direction.LOW if d is Direction.HIGH else Direction.HIGH for d in primary]
        order = [(block[j], primary[j]) for j in range(4)] + [(block[0], opposite[0]), (block[1], opposite[1])]
        steps = tuple(
            SignatureStep(name, direction, onset_mean_s=20.0 + 45.0 * s, onset_jitter_s=12.0)
            for s, (name, direction) in enumerate(order)
        )
        pool = tuple((block[j], d) for j in range(4) for d in (primary[j], opposite[j]))
        pool += ((shared, Direction.HIGH), (shared, Direction.LOW))
        sigs.append(FaultSignature(sid, steps, pool))
    return tuple(sigs)


@dataclass(frozen=True)
class GenConfig:
    plant: tuple = field(default_factory=default_plant)
    signatures: tuple = field(default_factory=default_signatures)
    occurrences_per_fault: int = 10
    alarms_per_occurrence: int = 20
    k: int = 20
    chattering_rate: float = 0.2
    burst_len: int = 3
    burst_gap_s: float = 2.0
    tail_gap_s: float = 30.0
    # same-tag alarms are kept further apart than the preprocessing repeat window
    repeat_gap_s: float = 90.0
    occurrence_spacing_s: float = 20000.0
    other_delay_s: float = DEFAULT_OTHER_DELAY_S
    n_faults: int = 0
    first_index: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.n_faults:
            if self.n_faults > len(self.signatures):
                raise ConfigError(f"n_faults={self.n_faults} exceeds {len(self.signatures)} signatures")
            object.__setattr__(self, "signatures", tuple(self.signatures[:self.n_faults]))
        self.validate()

    @property
    def scenarios(self) -> tuple:
        return tuple(sorted(s.scenario_id for s in self.signatures))

    def delay_for(self, variable_name: str) -> DelayTimer:
        spec = self.variable(variable_name)
        return DelayTimer.for_kind(spec.kind, self.other_delay_s)

    def variable(self, variable_name: str) -> VariableSpec:
        for spec in self.plant:
            if spec.variable_name == variable_name:
                return spec
        raise ConfigError(f"unknown plant variable {variable_name!r}")

    def validate(self):
        if self.first_index < 0:
            raise ConfigError("first_index must be >= 0")
        if self.occurrences_per_fault < 1:
            raise ConfigError("occurrences_per_fault must be >= 1")
        if self.k < 1 or self.alarms_per_occurrence < self.k:
            raise ConfigError(f"alarms_per_occurrence={self.alarms_per_occurrence} must be >= k={self.k}")
        if not 0.0 <= self.chattering_rate <= 1.0:
            raise ConfigError("chattering_rate must be a probability")
        if self.burst_len < 0 or self.burst_gap_s <= 0:
            raise ConfigError("burst_len must be >= 0 and burst_gap_s > 0")
        if self.tail_gap_s <= 0 or self.repeat_gap_s < 0:
            raise ConfigError("tail_gap_s must be > 0 and repeat_gap_s >= 0")
        if not self.signatures:
            raise ConfigError("no fault signatures")
        ids = [s.scenario_id for s in self.signatures]
        if len(set(ids)) != len(ids) or min(ids) < 1:
            raise ConfigError(f"scenario ids must be distinct positive integers: {ids}")
        used = set()
        for sig in self.signatures:
            for name, _ in [(s.variable_name, s.direction) for s in sig.steps] + list(sig.tail_pool):
                self.variable(name)
                used.add(name)
        min_delay = min(self.delay_for(n).delay_s for n in used)
        if self.burst_gap_s >= min_delay:
            raise ConfigError(f"burst_gap_s={self.burst_gap_s} must be below the minimum delay {min_delay}")
        heads = {}
        for sig in self.signatures:
            head = tuple((s.variable_name, Direction(s.direction)) for s in sig.steps[:self.k])
            for other_id, other_head in heads.items():
                n = min(len(head), len(other_head), 5)
                if head[:n] == other_head[:n]:
                    raise ConfigError(f"faults {other_id} and {sig.scenario_id} share their leading alarms")
            heads[sig.scenario_id] = head


SCALAR_KEYS = {
    "occurrences_per_fault", "alarms_per_occurrence", "k", "chattering_rate", "burst_len",
    "burst_gap_s", "tail_gap_s", "repeat_gap_s", "occurrence_spacing_s", "other_delay_s",
    "n_faults", "first_index", "seed",
}


def gen_config_from_kv(mapping: dict[str, str], **extra) -> GenConfig:
    kwargs = overrides_for(GenConfig, mapping, allowed=SCALAR_KEYS)
    kwargs.update(extra)
    return GenConfig(**kwargs)


def limits_for(spec: VariableSpec, override: AlarmLimits | None = None) -> AlarmLimits:
    if override is not None:
        if not override.low < override.high:
            raise ConfigError(f"{spec.variable_name}: low limit {override.low} >= high {override.high}")
        return override
    return AlarmLimits(high=spec.mu + 3.0 * spec.sigma, low=spec.mu - 3.0 * spec.sigma)


def apply_delay_timer(excursions, timer) -> list:
    """Activation times of an on-delay alarm for a list of limit excursions.

    ``excursions`` holds sorted, disjoint ``(start_s, end_s)`` intervals during
    which the variable is beyond its limit. An excursion annunciates once, at
    ``start + delay``, if it lasts at least ``delay``; shorter ones are swallowed.
    """
    delay = timer.delay_s if isinstance(timer, DelayTimer) else float(timer)
    out = []
    prev_end = None
    for start, end in excursions:
        if not start < end:
            raise TraceError(f"excursion ({start}, {end}) has start >= end")
        if prev_end is not None and start <= prev_end:
            raise TraceError(f"excursion starting at {start} overlaps or precedes the previous one")
        if end - start >= delay - TIME_TOL_S:
            out.append(start + delay)
        prev_end = end
    return out


def generate_occurrence(sig: FaultSignature, cfg: GenConfig, rng, occurrence_id: str = "",
                        start_s: float = 0.0) -> Occurrence:
    n_base = cfg.alarms_per_occurrence
    if len(sig.steps) < n_base and not sig.tail_pool:
        raise GenerationError(
            f"fault {sig.scenario_id}: {len(sig.steps)} signature steps and no tail pool "
            f"cannot yield {n_base} alarms")

    base = []  # (onset, variable, direction)
    for step in sig.steps:
        onset = step.onset_mean_s + step.onset_jitter_s * rng.standard_normal()
        base.append((max(onset, 0.0), step.variable_name, Direction(step.direction)))
    base.sort(key=lambda e: e[0])
    base = base[:n_base]

    last_seen = {(name, d): t for t, name, d in base}
    t = base[-1][0]
    pool = list(sig.tail_pool)
    while len(base) < n_base:
        for j in rng.permutation(len(pool)):
            tag = pool[j]
            t = t + cfg.tail_gap_s * (1.0 + 0.5 * rng.random())
            if tag in last_seen:
                t = max(t, last_seen[tag] + cfg.repeat_gap_s)
            base.append((t, tag[0], tag[1]))
            last_seen[tag] = t
            if len(base) == n_base:
                break

    events = []
    for onset, name, direction in base:
        prio = KIND_PRIORITY[cfg.variable(name).kind]
        ts = round(start_s + onset, 3)
        events.append(AlarmEvent(ts, name, direction, prio))
        if cfg.burst_len and rng.random() < cfg.chattering_rate:
            for j in range(1, cfg.burst_len + 1):
                events.append(AlarmEvent(round(ts + j * cfg.burst_gap_s, 3), name, direction, prio))

    label = make_label(sig.scenario_id, cfg.scenarios)
    return Occurrence(occurrence_id, label, tuple(events))


def occurrence_rng(seed: int, fault_index: int, occurrence_index: int):
    return np.random.default_rng([int(seed), fault_index, occurrence_index])


def generate_corpus(cfg: GenConfig) -> list:
    """``occurrences_per_fault`` occurrences of every signature, fault-major order.

    Every occurrence gets its own random stream derived from (seed, fault, index),
    so corpora are reproducible and occurrences independent of each other.
    Indices start at ``first_index``; a corpus generated with a later
    ``first_index`` holds fresh executions disjoint from an earlier one.
    """
    out = []
    slot = 0
    for f, sig in enumerate(cfg.signatures):
        for j in range(cfg.first_index, cfg.first_index + cfg.occurrences_per_fault):
            rng = occurrence_rng(cfg.seed, f, j)
            occ_id = f"occ-{sig.scenario_id}-{j}"
            out.append(generate_occurrence(sig, cfg, rng, occ_id, start_s=slot * cfg.occurrence_spacing_s))
            slot += 1
    log.debug("generated %d occurrences", len(out))
    return out


def holdout_corpus(cfg: GenConfig, n: int = 1) -> list:
    """``n`` further executions per fault, never part of ``generate_corpus(cfg)``."""
    return generate_corpus(replace(cfg, occurrences_per_fault=n, n_faults=0,
                                   first_index=cfg.first_index + cfg.occurrences_per_fault))
