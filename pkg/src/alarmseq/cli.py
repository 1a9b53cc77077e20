"""Command-line pipeline: simulate -> preprocess -> train-embed -> train -> detect.

Exit codes: 0 success, 2 configuration error, 3 data/parse/load error, 4 numeric error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .config import read_kv
from .core import SplitConfig, split_samples
from .detect import DetectorState, stream_events
from .embed import read_embeddings, skipgram_config_from_kv, train_skipgram, write_embeddings
from .errors import AlarmSeqError, ConfigError
from .ingest import (PreprocessConfig, assemble_occurrences, parse_alarm_log, preprocess,
                     read_windows, sequences_from_windows, build_sequences, write_alarm_log, write_windows)
from .net.io import load_model, save_model
from .net.model import NetConfig, gradcheck, init_params, layer_report, net_overrides_from_kv
from .simgen import SCALAR_KEYS, gen_config_from_kv, generate_corpus
from .trainpipe import evaluate, make_samples, train, write_history

log = logging.getLogger("alarmseq")

SPLIT_KEYS = {"train_fraction", "val_fraction", "test_fraction"}


def write_manifest(out_path, command: str, config: dict, seeds: dict, inputs: list, started: float):
    manifest = {
        "command": command,
        "config": config,
        "seeds": seeds,
        "inputs": [str(p) for p in inputs],
        "output": str(out_path),
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    Path(str(out_path) + ".manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _read_config(path) -> dict:
    return read_kv(path) if path else {}


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    mapping = _read_config(args.config)
    if args.seed is not None:
        mapping["seed"] = str(args.seed)
    for key in ("occurrences_per_fault", "first_index"):
        value = getattr(args, key)
        if value is not None:
            mapping[key] = str(value)
    cfg = gen_config_from_kv(mapping)
    corpus = generate_corpus(cfg)
    with open(args.out, "w", newline="") as fh:
        n = write_alarm_log(corpus, fh)
    snapshot = {k: getattr(cfg, k) for k in sorted(SCALAR_KEYS)}
    write_manifest(args.out, "simulate", snapshot, {"seed": cfg.seed}, [args.config] if args.config else [],
                   started)
    print(f"wrote {len(corpus)} occurrences, {n} alarms to {args.out}")
    return 0


def _load_occurrences(path):
    with open(path, newline="") as fh:
        return assemble_occurrences(parse_alarm_log(fh))


def cmd_preprocess(args) -> int:
    started = time.perf_counter()
    cfg = PreprocessConfig(k=args.k, v=args.v, repeat_suppress_s=args.repeat_suppress)
    windows = preprocess(_load_occurrences(args.log), cfg)
    with open(args.out, "w") as fh:
        n = write_windows(windows, fh)
    write_manifest(args.out, "preprocess", dataclasses.asdict(cfg), {}, [args.log], started)
    print(f"wrote {n} windows to {args.out}")
    return 0


def _sequences_from(path, k, repeat_suppress):
    with open(path) as fh:
        head = fh.readline()
    if head.startswith("timestamp,"):
        return build_sequences(_load_occurrences(path), PreprocessConfig(k=k, v=1, repeat_suppress_s=repeat_suppress))
    with open(path) as fh:
        return sequences_from_windows(read_windows(fh))


def cmd_train_embed(args) -> int:
    started = time.perf_counter()
    mapping = _read_config(args.config)
    if args.seed is not None:
        mapping["seed"] = str(args.seed)
    cfg = skipgram_config_from_kv(mapping)
    seqs = _sequences_from(args.input, args.k, args.repeat_suppress)
    table = train_skipgram(seqs, cfg)
    with open(args.out, "w") as fh:
        write_embeddings(table, fh)
    write_manifest(args.out, "train-embed", dataclasses.asdict(cfg), {"seed": cfg.seed}, [args.input], started)
    print(f"wrote {len(table.vocab)} vectors of dim {table.dim} to {args.out}")
    return 0


def _train_configs(args, table, windows):
    mapping = _read_config(args.config)
    split_map = {k: mapping.pop(k) for k in list(mapping) if k in SPLIT_KEYS}
    d = mapping.pop("d", None)
    if d is not None and int(d) != table.dim:
        raise ConfigError(f"net config d={d} does not match embedding dimension {table.dim}")
    v = mapping.pop("v", None)
    win_v = len(windows[0].tokens)
    if v is not None and int(v) != win_v:
        raise ConfigError(f"net config v={v} does not match window length {win_v}")
    overrides = net_overrides_from_kv(mapping)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    scenarios = sorted({w.label.scenario_id for w in windows})
    cfg = NetConfig.for_scenarios(scenarios, v=win_v, d=table.dim, **overrides)
    split = SplitConfig(**{k: float(v) for k, v in split_map.items()}, seed=cfg.seed) if split_map \
        else SplitConfig(seed=cfg.seed)
    return cfg, split


def cmd_train(args) -> int:
    started = time.perf_counter()
    with open(args.embeddings) as fh:
        table = read_embeddings(fh)
    with open(args.windows) as fh:
        windows = read_windows(fh)
    if not windows:
        raise ConfigError(f"{args.windows}: no windows")
    cfg, split = _train_configs(args, table, windows)
    samples = make_samples(windows, table, cfg.classes)
    tr, va, te = split_samples(samples, split)
    params, history = train(init_params(cfg), tr, va, cfg)
    save_model(params, args.out)
    history_path = args.history or str(args.out) + ".history.csv"
    with open(history_path, "w") as fh:
        write_history(history, fh)
    reports = [evaluate(params, part) for part in (tr, va, te)]
    report_path = args.report or str(args.out) + ".report.txt"
    Path(report_path).write_text(reports[2].pretty(cfg.scenarios) + "\n")
    Path(str(args.out) + ".confusion.csv").write_text(reports[2].confusion_csv(cfg.scenarios))
    snapshot = dataclasses.asdict(cfg)
    snapshot["split"] = dataclasses.asdict(split)
    write_manifest(args.out, "train", snapshot, {"seed": cfg.seed}, [args.windows, args.embeddings], started)
    print("train_acc={:.4f} val_acc={:.4f} test_acc={:.4f}".format(*(r.accuracy for r in reports)))
    return 0


def cmd_detect(args) -> int:
    model = load_model(args.model)
    with open(args.embeddings) as fh:
        table = read_embeddings(fh)
    state = DetectorState(model, table, oov_policy=args.oov, repeat_suppress_s=args.repeat_suppress)
    source = sys.stdin if args.stream in (None, "-") else open(args.stream, newline="")
    try:
        for event in stream_events(source):
            det = state.push(event)
            if det is not None:
                print(det.csv_line(), flush=True)
    finally:
        if source is not sys.stdin:
            source.close()
    return 0


def cmd_gradcheck(args) -> int:
    ok = True
    for seed in args.seeds:
        report = gradcheck(seed=seed)
        dense = gradcheck(seed=seed, names=("dense.W", "dense.b"))
        per_layer = layer_report(report)
        for layer, err in per_layer.items():
            print(f"seed {seed} {layer:<10} max_rel_err={err:.3e}")
        dense_err = max(dense.values())
        print(f"seed {seed} dense-only max_rel_err={dense_err:.3e}")
        passed = all(e < args.threshold for e in per_layer.values()) and dense_err < min(args.threshold, 1e-7)
        print(f"seed {seed} {'PASS' if passed else 'FAIL'}")
        ok = ok and passed
    print("PASS" if ok else "FAIL")
    return 0 if ok else 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alarmseq", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a labelled synthetic alarm log")
    p.add_argument("--config", help="key=value generator config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--occurrences-per-fault", dest="occurrences_per_fault", type=int)
    p.add_argument("--first-index", dest="first_index", type=int,
                   help="index of the first execution per fault (use to draw held-out executions)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("preprocess", help="suppress repeats, keep first k alarms, cut length-v windows")
    p.add_argument("log")
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--v", type=int, default=5)
    p.add_argument("--repeat-suppress", dest="repeat_suppress", type=float, default=60.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train-embed", help="train skip-gram tag embeddings")
    p.add_argument("input", help="windows file or labelled alarm log")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--repeat-suppress", dest="repeat_suppress", type=float, default=60.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_embed)

    p = sub.add_parser("train", help="train the classifier")
    p.add_argument("windows")
    p.add_argument("embeddings")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--history")
    p.add_argument("--report")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="online detection over an alarm stream")
    p.add_argument("model")
    p.add_argument("embeddings")
    p.add_argument("stream", nargs="?", default="-")
    p.add_argument("--oov", choices=("skip", "halt"), default="skip")
    p.add_argument("--repeat-suppress", dest="repeat_suppress", type=float, default=None)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check on a tiny network")
    p.add_argument("--threshold", type=float, default=1e-4)
    p.add_argument("--seed", dest="seeds", type=int, action="append")
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "gradcheck" and not args.seeds:
        args.seeds = [0]
    try:
        return args.func(args)
    except AlarmSeqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except BrokenPipeError:
        return 0
    except FloatingPointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
