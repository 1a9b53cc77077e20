"""Alarm-log parsing, repeat suppression, first-k truncation and windowing."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import DEFAULT_SCENARIOS, AlarmEvent, Direction, FaultLabel, Occurrence, make_label
from .errors import (ConfigError, InsufficientAlarmsError, LabelError, OrderError,
                     ParseError)

LOG_HEADER = ("timestamp", "variable", "identifier", "priority", "occurrence_id", "fault")


@dataclass(frozen=True)
class PreprocessConfig:
    k: int = 20
    v: int = 5
    repeat_suppress_s: float = 60.0

    def __post_init__(self):
        if not 1 <= self.v <= self.k:
            raise ConfigError(f"need 1 <= v <= k, got v={self.v}, k={self.k}")
        if self.repeat_suppress_s < 0:
            raise ConfigError("repeat_suppress_s must be non-negative")


@dataclass(frozen=True)
class LogRecord:
    event: AlarmEvent
    occurrence_id: str | None = None
    label: FaultLabel | None = None


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple
    label: FaultLabel
    occurrence_id: str


@dataclass(frozen=True)
class TokenWindow:
    tokens: tuple
    label: FaultLabel
    occurrence_id: str
    start: int

    @property
    def source(self):
        return (self.occurrence_id, self.start)


def text_lines(stream):
    if isinstance(stream, (bytes, bytearray)):
        return io.StringIO(stream.decode("utf-8"))
    if isinstance(stream, str):
        return io.StringIO(stream)
    if isinstance(stream, io.TextIOBase) or hasattr(stream, "encoding"):
        return stream
    if hasattr(stream, "read"):
        return io.TextIOWrapper(stream, encoding="utf-8")
    return stream


def parse_row(row: Sequence[str], lineno: int, scenarios=DEFAULT_SCENARIOS) -> LogRecord:
    """One alarm-log row; 4 columns (unlabelled) or 6 columns (labelled)."""
    if len(row) not in (4, 6):
        raise ParseError(f"expected 4 or 6 columns, got {len(row)}", lineno)
    ts, var, ident, prio = (c.strip() for c in row[:4])
    try:
        direction = Direction.parse(ident)
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from None
    try:
        event = AlarmEvent(float(ts), var, direction, int(prio))
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from None
    occ = label = None
    if len(row) == 6:
        occ = row[4].strip() or None
        fault = row[5].strip()
        if fault:
            try:
                label = make_label(int(fault), scenarios)
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
    return LogRecord(event, occ, label)


def parse_alarm_log(stream, scenarios=None) -> list:
    """Parse an alarm-log CSV into ``LogRecord``s in file order.

    A leading header line is optional; ``stream`` may be text, bytes, or a file
    object. Fault labels index into ``scenarios``, by default the sorted set of
    fault ids present in the log.
    """
    rows = []
    for lineno, row in enumerate(csv.reader(text_lines(stream)), 1):
        if not row or all(not c.strip() for c in row):
            continue
        if lineno == 1 and row[0].strip() == "timestamp":
            continue
        rows.append((lineno, row))
    if scenarios is None:
        faults = set()
        for lineno, row in rows:
            if len(row) == 6 and row[5].strip():
                try:
                    faults.add(int(row[5]))
                except ValueError:
                    raise ParseError(f"bad fault id {row[5]!r}", lineno) from None
        scenarios = sorted(faults) or DEFAULT_SCENARIOS
    return [parse_row(row, lineno, scenarios) for lineno, row in rows]


def write_alarm_log(occurrences: Iterable[Occurrence], fh) -> int:
    fh.write(",".join(LOG_HEADER) + "\n")
    n = 0
    for occ in occurrences:
        for ev in occ.events:
            fh.write(f"{ev.timestamp!r},{ev.variable_name},{ev.direction.value},{ev.priority},"
                     f"{occ.occurrence_id},{occ.label.scenario_id}\n")
            n += 1
    return n


def assemble_occurrences(records: Iterable[LogRecord]) -> list:
    """Group labelled records by occurrence id, in order of first appearance."""
    groups: dict[str, list] = {}
    labels: dict[str, FaultLabel] = {}
    for rec in records:
        if rec.occurrence_id is None or rec.label is None:
            raise LabelError(f"unlabelled alarm at t={rec.event.timestamp}: occurrence id and fault required")
        prev = labels.setdefault(rec.occurrence_id, rec.label)
        if prev != rec.label:
            raise LabelError(f"occurrence {rec.occurrence_id} carries conflicting fault labels")
        groups.setdefault(rec.occurrence_id, []).append(rec.event)
    return [Occurrence(oid, labels[oid], tuple(evs)) for oid, evs in groups.items()]


def suppress_repeats(events: Sequence[AlarmEvent], window_s: float) -> list:
    """Drop an alarm when the same tag was last kept less than ``window_s`` earlier."""
    kept = []
    last_kept: dict[str, float] = {}
    prev_t = None
    for ev in events:
        if prev_t is not None and ev.timestamp < prev_t:
            raise OrderError(f"events not sorted by timestamp at t={ev.timestamp}")
        prev_t = ev.timestamp
        t0 = last_kept.get(ev.tag_token)
        if t0 is not None and ev.timestamp - t0 < window_s:
            continue
        last_kept[ev.tag_token] = ev.timestamp
        kept.append(ev)
    return kept


def build_sequences(occurrences: Iterable[Occurrence], cfg: PreprocessConfig) -> list:
    seqs, short = [], []
    for occ in occurrences:
        events = suppress_repeats(occ.events, cfg.repeat_suppress_s)
        if len(events) < cfg.k:
            short.append(occ.occurrence_id)
            continue
        seqs.append(TokenSequence(tuple(e.tag_token for e in events[:cfg.k]), occ.label, occ.occurrence_id))
    if short:
        raise InsufficientAlarmsError(short, cfg.k)
    return seqs


def window_sequences(seqs: Iterable[TokenSequence], cfg: PreprocessConfig) -> list:
    out = []
    for seq in seqs:
        k = len(seq.tokens)
        if cfg.v > k:
            raise ConfigError(f"window length {cfg.v} exceeds sequence length {k}")
        for i in range(k - cfg.v + 1):
            out.append(TokenWindow(seq.tokens[i:i + cfg.v], seq.label, seq.occurrence_id, i))
    return out


def write_windows(windows: Iterable[TokenWindow], fh) -> int:
    n = 0
    for w in windows:
        fh.write(f"{w.occurrence_id},{w.label.scenario_id},{w.start},{' '.join(w.tokens)}\n")
        n += 1
    return n


def read_windows(stream, scenarios=None) -> list:
    """Read a windows file. Labels use ``scenarios`` or, if omitted, the sorted faults present."""
    rows = []
    for lineno, line in enumerate(text_lines(stream), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",", 3)
        if len(parts) != 4:
            raise ParseError("expected occurrence_id,fault,start_index,tokens", lineno)
        try:
            rows.append((parts[0], int(parts[1]), int(parts[2]), tuple(parts[3].split())))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    if scenarios is None:
        scenarios = sorted({r[1] for r in rows})
    return [TokenWindow(toks, make_label(fault, scenarios), occ, start) for occ, fault, start, toks in rows]


def sequences_from_windows(windows: Iterable[TokenWindow]) -> list:
    """Rebuild the source token sequences from their stride-1 windows."""
    by_occ: dict[str, list] = {}
    for w in windows:
        by_occ.setdefault(w.occurrence_id, []).append(w)
    seqs = []
    for occ, ws in by_occ.items():
        ws.sort(key=lambda w: w.start)
        if ws[0].start != 0 or any(b.start != a.start + 1 for a, b in zip(ws, ws[1:])):
            raise ParseError(f"windows of {occ} are not a contiguous stride-1 cover")
        tokens = list(ws[0].tokens) + [w.tokens[-1] for w in ws[1:]]
        seqs.append(TokenSequence(tuple(tokens), ws[0].label, occ))
    return seqs


def preprocess(occurrences: Iterable[Occurrence], cfg: PreprocessConfig) -> list:
    return window_sequences(build_sequences(occurrences, cfg), cfg)
