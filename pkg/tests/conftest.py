import pytest

from alarmseq.embed import SkipGramConfig, train_skipgram
from alarmseq.ingest import PreprocessConfig, build_sequences, window_sequences
from alarmseq.simgen import GenConfig, generate_corpus
from alarmseq.trainpipe import run_experiment

_ACCEPTANCE = []
_EXPERIMENTS = {}


@pytest.fixture(scope="session")
def default_corpus():
    return generate_corpus(GenConfig())


@pytest.fixture(scope="session")
def default_sequences(default_corpus):
    return build_sequences(default_corpus, PreprocessConfig())


@pytest.fixture(scope="session")
def default_windows(default_sequences):
    return window_sequences(default_sequences, PreprocessConfig())


@pytest.fixture(scope="session")
def default_table(default_sequences):
    return train_skipgram(default_sequences, SkipGramConfig())


@pytest.fixture(scope="session")
def experiment():
    """Full default pipeline runs, memoised per seed for the whole session."""
    def get(seed):
        if seed not in _EXPERIMENTS:
            _EXPERIMENTS[seed] = run_experiment(seed)
        return _EXPERIMENTS[seed]
    return get


@pytest.fixture
def acceptance():
    def record(number, passed, detail):
        _ACCEPTANCE.append((number, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 10):
        rows = [r for r in _ACCEPTANCE if r[0] == number]
        if not rows:
            terminalreporter.write_line(f"criterion {number}: FAIL  (not evaluated)")
            continue
        passed = all(r[1] for r in rows)
        detail = "; ".join(r[2] for r in rows)
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
