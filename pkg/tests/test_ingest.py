import io

import pytest
from hypothesis import given, strategies as st

from alarmseq.core import AlarmEvent, Occurrence, make_label
from alarmseq.errors import ConfigError, InsufficientAlarmsError, LabelError, OrderError, ParseError
from alarmseq.ingest import (PreprocessConfig, TokenSequence, assemble_occurrences, build_sequences,
                             parse_alarm_log, preprocess, read_windows, sequences_from_windows,
                             suppress_repeats, window_sequences, write_alarm_log, write_windows)

LOG = """timestamp,variable,identifier,priority,occurrence_id,fault
0.0,Reactor Pressure,High,3,a,1
1.5,Feed Flow,Low,2,a,1
2.0,Feed Flow,Low,2,a,1
0.5,Reactor Pressure,Low,3,b,2
"""


def test_parse_and_assemble():
    recs = parse_alarm_log(LOG)
    assert len(recs) == 4
    assert recs[0].event.tag_token == "Reactor_Pressure+High"
    occs = assemble_occurrences(recs)
    assert [o.occurrence_id for o in occs] == ["a", "b"]
    assert occs[1].label.class_index == 1


def test_parse_without_header_and_bytes():
    body = LOG.split("\n", 1)[1]
    assert parse_alarm_log(body.encode()) == parse_alarm_log(LOG)


@pytest.mark.parametrize("line,lineno", [
    ("x,V,High,1,a,1", 2),
    ("1.0,V,Sideways,1,a,1", 2),
    ("1.0,V,High", 2),
    ("-1.0,V,High,1,a,1", 2),
])
def test_parse_errors_carry_line_number(line, lineno):
    with pytest.raises(ParseError) as info:
        parse_alarm_log(LOG.split("\n")[0] + "\n" + line + "\n")
    assert info.value.line == lineno


def test_unlabelled_log_cannot_assemble():
    with pytest.raises(LabelError):
        assemble_occurrences(parse_alarm_log("0.0,V,High,1\n"))


def test_conflicting_labels():
    with pytest.raises(LabelError):
        assemble_occurrences(parse_alarm_log("0,V,High,1,a,1\n1,V,Low,1,a,2\n"))


def test_log_roundtrip(default_corpus):
    buf = io.StringIO()
    n = write_alarm_log(default_corpus[:5], buf)
    assert n == sum(len(o.events) for o in default_corpus[:5])
    back = assemble_occurrences(parse_alarm_log(buf.getvalue(), scenarios=(1, 2, 6, 7, 8, 10, 11, 12, 13, 17)))
    assert back == default_corpus[:5]


def ev(t, name="A", d="High"):
    return AlarmEvent(t, name, d)


def naive_suppress(events, window):
    # quadratic oracle: look back through the kept list for the latest same tag
    kept = []
    for e in events:
        prior = [k for k in kept if k.tag_token == e.tag_token]
        if prior and e.timestamp - prior[-1].timestamp < window:
            continue
        kept.append(e)
    return kept


def test_suppress_examples():
    events = [ev(0), ev(10), ev(60), ev(61, "B"), ev(130)]
    assert [e.timestamp for e in suppress_repeats(events, 60)] == [0, 60, 61, 130]
    assert suppress_repeats(events, 0) == events


@given(st.lists(st.tuples(st.integers(0, 500), st.sampled_from("ABC")), max_size=40),
       st.integers(0, 120))
def test_suppress_matches_oracle(raw, window):
    events = [ev(float(t), n) for t, n in sorted(raw)]
    assert suppress_repeats(events, window) == naive_suppress(events, window)


def test_suppress_rejects_unsorted():
    with pytest.raises(OrderError):
        suppress_repeats([ev(5), ev(1)], 60)


def test_insufficient_alarms_lists_all():
    occs = [Occurrence(f"o{i}", make_label(1), tuple(ev(float(t), f"V{t}") for t in range(i)))
            for i in (3, 20, 4)]
    with pytest.raises(InsufficientAlarmsError) as info:
        build_sequences(occs, PreprocessConfig())
    assert info.value.occurrence_ids == ["o3", "o4"]


def test_window_example():
    seq = TokenSequence(tuple("abcdefg"), make_label(1), "o")
    ws = window_sequences([seq], PreprocessConfig(k=7, v=5))
    assert [w.tokens for w in ws] == [tuple("abcde"), tuple("bcdef"), tuple("cdefg")]
    assert [w.start for w in ws] == [0, 1, 2]


def test_config_bounds():
    with pytest.raises(ConfigError):
        PreprocessConfig(k=3, v=4)
    with pytest.raises(ConfigError):
        PreprocessConfig(v=0)


def test_windows_file_roundtrip(default_windows, default_sequences):
    buf = io.StringIO()
    assert write_windows(default_windows, buf) == len(default_windows)
    back = read_windows(io.StringIO(buf.getvalue()))
    assert back == default_windows
    assert sequences_from_windows(back) == default_sequences


def test_preprocess_default(default_corpus):
    assert len(preprocess(default_corpus, PreprocessConfig())) == 1600
