"""Online fault detection over a live alarm stream."""
from __future__ import annotations

import csv
import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

import numpy as np

from .core import AlarmEvent
from .embed import EmbeddingTable, embed_window
from .errors import ConfigError, OovError
from .ingest import LogRecord, parse_row, text_lines
from .net.model import ModelParams, predict

log = logging.getLogger(__name__)


class OovPolicy(str, Enum):
    SKIP = "skip"
    HALT = "halt"


@dataclass(frozen=True)
class Detection:
    at: float
    probabilities: np.ndarray
    predicted_scenario: int
    confidence: float
    window_tokens: tuple

    def csv_line(self) -> str:
        probs = ",".join(repr(float(p)) for p in self.probabilities)
        return f"{self.at!r},{self.predicted_scenario},{self.confidence!r},{probs}"


class DetectorState:
    """Ring buffer of the most recent ``v`` alarms for one stream.

    The model and embedding table are only read, so one pair can back any
    number of detector states.
    """

    def __init__(self, model: ModelParams, table: EmbeddingTable, oov_policy=OovPolicy.SKIP,
                 repeat_suppress_s: float | None = None):
        if model.cfg.d != table.dim:
            raise ConfigError(f"model expects {model.cfg.d}-dim embeddings, table has {table.dim}")
        self.model = model
        self.table = table
        self.oov_policy = OovPolicy(oov_policy)
        self.repeat_suppress_s = repeat_suppress_s
        self.buffer: deque = deque(maxlen=model.cfg.v)
        self._last_kept: dict[str, float] = {}

    @property
    def v(self) -> int:
        return self.model.cfg.v

    def _suppressed(self, event: AlarmEvent) -> bool:
        if self.repeat_suppress_s is None:
            return False
        t0 = self._last_kept.get(event.tag_token)
        if t0 is not None and event.timestamp - t0 < self.repeat_suppress_s:
            return True
        self._last_kept[event.tag_token] = event.timestamp
        return False

    def push(self, event: AlarmEvent) -> Detection | None:
        if self._suppressed(event):
            return None
        token = event.tag_token
        if token not in self.table:
            if self.oov_policy is OovPolicy.HALT:
                raise OovError(token)
            log.warning("unknown alarm tag %s at t=%s; no detections until it leaves the window",
                        token, event.timestamp)
        self.buffer.append((token, event.timestamp))
        if len(self.buffer) < self.v:
            return None
        tokens = tuple(t for t, _ in self.buffer)
        if any(t not in self.table for t in tokens):
            return None
        probs, idx = predict(embed_window(tokens, self.table), self.model)
        return Detection(event.timestamp, probs, self.model.cfg.scenarios[idx], float(probs[idx]), tokens)


def push_alarm(state: DetectorState, event: AlarmEvent) -> Detection | None:
    return state.push(event)


def _events(log_or_events) -> Iterator[AlarmEvent]:
    if isinstance(log_or_events, (str, bytes)) or hasattr(log_or_events, "read"):
        yield from stream_events(text_lines(log_or_events))
        return
    for item in log_or_events:
        yield item.event if isinstance(item, LogRecord) else item


def replay(log_or_events, state: DetectorState) -> list:
    """Feed a whole alarm stream through ``state``; returns every detection emitted."""
    out = []
    for event in _events(log_or_events):
        det = state.push(event)
        if det is not None:
            out.append(det)
    return out


def stream_events(lines: Iterable[str]) -> Iterator[AlarmEvent]:
    """Lazily parse "timestamp,variable,identifier,priority[,...]" lines; a header line is skipped."""
    for lineno, row in enumerate(csv.reader(lines), 1):
        if not row or all(not c.strip() for c in row):
            continue
        if row[0].strip() == "timestamp":
            continue
        if len(row) >= 6:
            row = row[:6]
            row[5] = ""  # labels are ignored online
        yield parse_row(row, lineno).event
