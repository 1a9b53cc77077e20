"""Skip-gram tag embeddings trained with negative sampling."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import overrides_for
from .errors import ConfigError, LoadError, OovError, VocabError


@dataclass(frozen=True)
class SkipGramConfig:
    dim: int = 10
    context_window: int = 2
    negatives: int = 5
    epochs: int = 50
    lr_start: float = 0.025
    lr_end: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1 or self.context_window < 1 or self.negatives < 1 or self.epochs < 0:
            raise ConfigError("dim, context_window and negatives must be >= 1, epochs >= 0")
        if self.lr_end > self.lr_start:
            raise ConfigError("lr_end must not exceed lr_start")


def skipgram_config_from_kv(mapping, **extra) -> SkipGramConfig:
    kwargs = overrides_for(SkipGramConfig, mapping)
    kwargs.update(extra)
    return SkipGramConfig(**kwargs)


@dataclass(frozen=True)
class EmbeddingTable:
    vocab: tuple
    vectors: np.ndarray
    context_vectors: np.ndarray | None = None

    def __post_init__(self):
        if len(set(self.vocab)) != len(self.vocab):
            raise VocabError("duplicate vocabulary entries")
        vecs = np.asarray(self.vectors, dtype=np.float64)
        if vecs.ndim != 2 or vecs.shape[0] != len(self.vocab) or vecs.shape[1] < 1:
            raise VocabError(f"vector matrix shape {vecs.shape} does not match vocab of {len(self.vocab)}")
        if not np.all(np.isfinite(vecs)):
            raise VocabError("non-finite embedding entries")
        vecs.flags.writeable = False
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "_index", {tok: i for i, tok in enumerate(self.vocab)})

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __contains__(self, token) -> bool:
        return token in self._index

    def index(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise OovError(token) from None

    def vector(self, token: str) -> np.ndarray:
        return self.vectors[self.index(token)]


def _tokens(seq):
    return seq.tokens if hasattr(seq, "tokens") else seq


def build_vocab(seqs: Iterable) -> tuple[list, dict]:
    counts = Counter()
    n = 0
    for seq in seqs:
        counts.update(_tokens(seq))
        n += 1
    if n == 0 or not counts:
        raise VocabError("empty corpus")
    vocab = sorted(counts)
    return vocab, {tok: counts[tok] for tok in vocab}


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def pair_loss(center: np.ndarray, outputs: np.ndarray, labels: np.ndarray) -> float:
    """Negative-sampling loss of one (center, context) pair.

    ``outputs`` stacks the context vector (label 1) and the negatives (label 0).
    """
    s = outputs @ center
    sign = np.where(labels > 0, 1.0, -1.0)
    # -log sigmoid(z) = log(1 + exp(-z))
    return float(np.sum(np.logaddexp(0.0, -sign * s)))


def pair_gradients(center, outputs, labels):
    """Gradients of ``pair_loss`` w.r.t. the center vector and each output row."""
    err = labels - _sigmoid(outputs @ center)
    return -(err @ outputs), -np.outer(err, center)


def sgd_pair_update(center_vecs, context_vecs, c: int, targets: np.ndarray, labels: np.ndarray, lr: float,
                    distinct: bool = False):
    """In-place descent step on one pair; ``targets[0]`` is the positive context.

    ``distinct`` promises ``targets`` has no repeats, enabling a faster scatter.
    """
    v = center_vecs[c]
    u = context_vecs[targets]
    err = (labels - _sigmoid(u @ v)) * lr
    dv = err @ u
    if distinct:
        context_vecs[targets] = u + np.outer(err, v)
    else:
        np.add.at(context_vecs, targets, np.outer(err, v))
    center_vecs[c] += dv


def training_pairs(seqs: Sequence, index: dict, window: int) -> np.ndarray:
    pairs = []
    for seq in seqs:
        ids = [index[t] for t in _tokens(seq)]
        n = len(ids)
        for t in range(n):
            for o in range(-window, window + 1):
                if o and 0 <= t + o < n:
                    pairs.append((ids[t], ids[t + o]))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def train_skipgram(seqs: Sequence, cfg: SkipGramConfig = SkipGramConfig()) -> EmbeddingTable:
    """Train center/context vectors over the token sequences.

    Every in-range (center, context) pair within ``context_window`` gets one SGD
    step per epoch against ``negatives`` samples from the unigram^0.75
    distribution; the step size decays linearly over all updates.
    """
    vocab, counts = build_vocab(seqs)
    if len(vocab) < 2:
        raise VocabError("skip-gram needs at least two distinct tokens")
    index = {tok: i for i, tok in enumerate(vocab)}
    n_vocab, d = len(vocab), cfg.dim
    rng = np.random.default_rng(cfg.seed)
    center = rng.uniform(-0.5 / d, 0.5 / d, size=(n_vocab, d))
    context = np.zeros((n_vocab, d))

    noise = np.array([counts[t] for t in vocab], dtype=np.float64) ** 0.75
    noise /= noise.sum()
    pairs = training_pairs(seqs, index, cfg.context_window)
    total = cfg.epochs * len(pairs)
    labels = np.zeros(cfg.negatives + 1)
    labels[0] = 1.0
    lrs = cfg.lr_start - (cfg.lr_start - cfg.lr_end) * np.arange(total) / max(total - 1, 1)
    step = 0
    for _ in range(cfg.epochs):
        negs = rng.choice(n_vocab, size=(len(pairs), cfg.negatives), p=noise)
        clash = negs == pairs[:, 1:2]
        while clash.any():
            negs[clash] = rng.choice(n_vocab, size=int(clash.sum()), p=noise)
            clash = negs == pairs[:, 1:2]
        targets = np.concatenate((pairs[:, 1:2], negs), axis=1)
        ordered = np.sort(targets, axis=1)
        distinct = ~np.any(ordered[:, 1:] == ordered[:, :-1], axis=1)
        for j in range(len(pairs)):
            sgd_pair_update(center, context, pairs[j, 0], targets[j], labels, lrs[step], distinct[j])
            step += 1
    return EmbeddingTable(tuple(vocab), center, context)


def embed_window(tokens: Sequence[str], table: EmbeddingTable) -> np.ndarray:
    return np.stack([table.vector(t) for t in tokens])


def cosine(a, b) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def write_embeddings(table: EmbeddingTable, fh):
    fh.write(f"{len(table.vocab)} {table.dim}\n")
    for tok, row in zip(table.vocab, table.vectors):
        fh.write(tok + " " + " ".join(repr(float(x)) for x in row) + "\n")


def read_embeddings(fh) -> EmbeddingTable:
    lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise LoadError("empty embedding file")
    try:
        n, d = (int(x) for x in lines[0].split())
    except ValueError:
        raise LoadError(f"bad embedding header {lines[0]!r}") from None
    if len(lines) - 1 != n:
        raise LoadError(f"header declares {n} vectors, file has {len(lines) - 1}")
    vocab, rows = [], []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != d + 1:
            raise LoadError(f"expected {d} components for {parts[0]!r}")
        vocab.append(parts[0])
        try:
            rows.append([float(x) for x in parts[1:]])
        except ValueError:
            raise LoadError(f"non-numeric component for {parts[0]!r}") from None
    if not all(math.isfinite(x) for r in rows for x in r):
        raise LoadError("non-finite embedding component")
    return EmbeddingTable(tuple(vocab), np.array(rows, dtype=np.float64).reshape(n, d))
