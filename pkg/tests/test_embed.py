import io

import numpy as np
import pytest

from alarmseq.embed import (EmbeddingTable, SkipGramConfig, build_vocab, cosine, embed_window, pair_gradients,
                            pair_loss, read_embeddings, sgd_pair_update, train_skipgram, training_pairs,
                            write_embeddings)
from alarmseq.errors import ConfigError, LoadError, OovError, VocabError


def test_vocab_sorted_and_counted():
    vocab, counts = build_vocab([("b", "a", "b"), ("c",)])
    assert vocab == ["a", "b", "c"]
    assert counts["b"] == 2
    with pytest.raises(VocabError):
        build_vocab([])


def test_training_pairs_window():
    pairs = training_pairs([("a", "b", "c")], {"a": 0, "b": 1, "c": 2}, 1)
    assert sorted(map(tuple, pairs.tolist())) == [(0, 1), (1, 0), (1, 2), (2, 1)]


def test_pair_loss_closed_form():
    c = np.array([0.5, -1.0])
    outs = np.array([[1.0, 0.0], [0.0, 1.0]])
    labels = np.array([1.0, 0.0])
    expected = -np.log(1 / (1 + np.exp(-0.5))) - np.log(1 / (1 + np.exp(-1.0)))
    assert pair_loss(c, outs, labels) == pytest.approx(expected, rel=1e-14)


def test_sgd_update_equals_gradient_step():
    rng = np.random.default_rng(0)
    centers = rng.standard_normal((4, 3))
    contexts = rng.standard_normal((4, 3))
    targets = np.array([1, 2, 3])
    labels = np.array([1.0, 0.0, 0.0])
    dc, do = pair_gradients(centers[0], contexts[targets], labels)
    exp_c = centers[0] - 0.1 * dc
    exp_o = contexts[targets] - 0.1 * do
    for distinct in (True, False):
        c2, o2 = centers.copy(), contexts.copy()
        sgd_pair_update(c2, o2, 0, targets, labels, 0.1, distinct=distinct)
        np.testing.assert_allclose(c2[0], exp_c, rtol=1e-14)
        np.testing.assert_allclose(o2[targets], exp_o, rtol=1e-14)


def test_repeated_negative_accumulates():
    centers = np.ones((2, 2))
    contexts = np.zeros((2, 2))
    sgd_pair_update(centers, contexts, 0, np.array([1, 1]), np.array([1.0, 0.0]), 1.0)
    # +0.5 and -0.5 cancel on the same row
    np.testing.assert_allclose(contexts[1], 0.0, atol=1e-15)


def test_training_deterministic_and_shape(default_sequences):
    small = default_sequences[:20]
    cfg = SkipGramConfig(epochs=2, seed=5)
    a = train_skipgram(small, cfg)
    b = train_skipgram(small, cfg)
    assert a.vectors.tobytes() == b.vectors.tobytes()
    assert a.vectors.shape == (len(a.vocab), 10)
    c = train_skipgram(small, SkipGramConfig(epochs=2, seed=6))
    assert not np.array_equal(a.vectors, c.vectors)


def test_zero_epochs_keeps_init_range(default_sequences):
    t = train_skipgram(default_sequences[:5], SkipGramConfig(epochs=0, dim=4))
    assert np.all(np.abs(t.vectors) <= 0.5 / 4)


def test_table_lookup_and_oov():
    t = EmbeddingTable(("a", "b"), np.eye(2))
    np.testing.assert_array_equal(embed_window(["b", "a"], t), [[0, 1], [1, 0]])
    assert "a" in t and "z" not in t
    with pytest.raises(OovError):
        t.vector("z")
    with pytest.raises(ValueError):
        t.vectors[0, 0] = 5.0


def test_cosine():
    assert cosine(np.array([1.0, 0.0]), np.array([2.0, 0.0])) == 1.0
    assert cosine(np.array([1.0, 0.0]), np.array([0.0, 3.0])) == 0.0
    assert cosine(np.zeros(2), np.ones(2)) == 0.0


def test_embedding_file_roundtrip_bit_exact():
    rng = np.random.default_rng(1)
    t = EmbeddingTable(("x+High", "y+Low"), rng.standard_normal((2, 5)))
    buf = io.StringIO()
    write_embeddings(t, buf)
    back = read_embeddings(io.StringIO(buf.getvalue()))
    assert back.vocab == t.vocab
    assert back.vectors.tobytes() == t.vectors.tobytes()


@pytest.mark.parametrize("text", ["", "2 3\na 1 2 3\n", "1 3\na 1 2\n", "x y\n"])
def test_embedding_file_errors(text):
    with pytest.raises(LoadError):
        read_embeddings(io.StringIO(text))


def test_config_errors():
    with pytest.raises(ConfigError):
        SkipGramConfig(dim=0)
    with pytest.raises(ConfigError):
        SkipGramConfig(lr_start=0.001, lr_end=0.01)
