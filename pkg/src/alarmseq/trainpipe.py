"""Epoch/batch training loop and evaluation metrics."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .core import Sample, one_hot
from .embed import embed_window
from .errors import ShapeError
from .net.model import ModelParams, NetConfig, loss_and_backward, predict_proba
from .net.optim import AdamState, adam_step

log = logging.getLogger(__name__)

HISTORY_HEADER = "epoch,train_loss,train_acc,val_acc,wall_time_s"


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_acc: float
    wall_time_s: float

    def csv_row(self) -> str:
        return f"{self.epoch},{self.train_loss!r},{self.train_acc!r},{self.val_acc!r},{self.wall_time_s!r}"


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    per_class_precision: np.ndarray  # NaN where a class is never predicted
    confusion: np.ndarray  # rows = true class, columns = predicted

    @property
    def macro_precision(self) -> float:
        defined = self.per_class_precision[~np.isnan(self.per_class_precision)]
        return float(defined.mean()) if defined.size else float("nan")

    def pretty(self, scenarios=None) -> str:
        C = len(self.confusion)
        names = [str(s) for s in (scenarios or range(C))]
        lines = [f"accuracy {self.accuracy:.4f}", f"macro precision {self.macro_precision:.4f}", "",
                 "true\\pred " + " ".join(f"{n:>5}" for n in names)]
        for name, row in zip(names, self.confusion):
            lines.append(f"{name:>9} " + " ".join(f"{int(x):>5}" for x in row))
        lines.append("")
        for name, p in zip(names, self.per_class_precision):
            lines.append(f"precision[{name}] = " + ("undefined" if np.isnan(p) else f"{p:.4f}"))
        return "\n".join(lines)

    def confusion_csv(self, scenarios=None) -> str:
        C = len(self.confusion)
        names = [str(s) for s in (scenarios or range(C))]
        out = ["true," + ",".join(names)]
        for name, row in zip(names, self.confusion):
            out.append(name + "," + ",".join(str(int(x)) for x in row))
        return "\n".join(out) + "\n"


def make_samples(windows, table, num_classes: int) -> list:
    """Embed token windows into ``Sample``s with one-hot targets."""
    return [Sample(embed_window(w.tokens, table), one_hot(w.label, num_classes), w.source) for w in windows]


def stack(samples):
    if not samples:
        raise ShapeError("empty sample set")
    return np.stack([s.window for s in samples]), np.stack([s.target for s in samples])


def accuracy(params: ModelParams, X, Y) -> float:
    return float(np.mean(np.argmax(predict_proba(X, params), axis=1) == np.argmax(Y, axis=1)))


def train(model: ModelParams, train_samples, val_samples, cfg: NetConfig | None = None, progress=None):
    """Train a copy of ``model`` for exactly ``cfg.epochs`` epochs with Adam.

    Each epoch reshuffles the training set with a generator seeded from
    (seed, epoch); the same generator draws the dropout masks.
    Returns ``(trained_params, [EpochRecord, ...])``.
    """
    cfg = cfg or model.cfg
    params = model.copy()
    Xtr, Ytr = stack(train_samples)
    Xva, Yva = stack(val_samples)
    state = AdamState()
    history = []
    start = time.perf_counter()
    n = len(Xtr)
    for epoch in range(cfg.epochs):
        rng = np.random.default_rng([cfg.seed, epoch])
        perm = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, cfg.batch):
            idx = perm[lo:lo + cfg.batch]
            loss, grads = loss_and_backward((Xtr[idx], Ytr[idx]), params, training=True, rng=rng)
            adam_step(params.tensors, grads, state, cfg.lr)
            total += loss * len(idx)
        rec = EpochRecord(epoch + 1, total / n, accuracy(params, Xtr, Ytr), accuracy(params, Xva, Yva),
                          time.perf_counter() - start)
        history.append(rec)
        log.info("epoch %d loss %.4f train %.3f val %.3f", rec.epoch, rec.train_loss, rec.train_acc, rec.val_acc)
        if progress is not None:
            progress(rec)
    return params, history


def confusion_report(y_true, y_pred, num_classes: int) -> EvalReport:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(confusion, (y_true, y_pred), 1)
    col = confusion.sum(axis=0)
    diag = np.diag(confusion).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(col > 0, diag / np.maximum(col, 1), np.nan)
    return EvalReport(float(np.mean(y_true == y_pred)), precision, confusion)


def evaluate(model: ModelParams, samples) -> EvalReport:
    X, Y = stack(samples)
    pred = np.argmax(predict_proba(X, model), axis=1)
    return confusion_report(np.argmax(Y, axis=1), pred, model.cfg.classes)


def write_history(history, fh):
    fh.write(HISTORY_HEADER + "\n")
    for rec in history:
        fh.write(rec.csv_row() + "\n")


@dataclass
class Experiment:
    """Everything produced by one seeded run of the full training pipeline."""
    seed: int
    table: object
    windows: list
    splits: tuple
    params: ModelParams
    history: list
    reports: tuple
    train_time_s: float
    total_time_s: float

    @property
    def accuracies(self):
        return tuple(r.accuracy for r in self.reports)


def run_experiment(seed: int = 0, gen_cfg=None, prep_cfg=None, sg_cfg=None, **net_overrides) -> Experiment:
    """Simulate, preprocess, embed, split, train and evaluate with a single seed."""
    from dataclasses import replace

    from .core import SplitConfig, split_samples
    from .embed import SkipGramConfig, train_skipgram
    from .ingest import PreprocessConfig, build_sequences, window_sequences
    from .net.model import init_params
    from .simgen import GenConfig, generate_corpus

    t0 = time.perf_counter()
    gen_cfg = replace(gen_cfg, seed=seed, n_faults=0) if gen_cfg else GenConfig(seed=seed)
    prep_cfg = prep_cfg or PreprocessConfig()
    sg_cfg = replace(sg_cfg, seed=seed) if sg_cfg else SkipGramConfig(seed=seed)
    seqs = build_sequences(generate_corpus(gen_cfg), prep_cfg)
    windows = window_sequences(seqs, prep_cfg)
    table = train_skipgram(seqs, sg_cfg)
    cfg = NetConfig.for_scenarios(gen_cfg.scenarios, v=prep_cfg.v, d=table.dim, seed=seed, **net_overrides)
    samples = make_samples(windows, table, cfg.classes)
    splits = split_samples(samples, SplitConfig(seed=seed))
    t1 = time.perf_counter()
    params, history = train(init_params(cfg), splits[0], splits[1], cfg)
    t2 = time.perf_counter()
    reports = tuple(evaluate(params, part) for part in splits)
    return Experiment(seed, table, windows, splits, params, history, reports, t2 - t1, time.perf_counter() - t0)
