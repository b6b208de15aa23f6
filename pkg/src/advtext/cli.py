"""``advtext`` command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import advtrain, corpus, ensemble, evalkit, pipeline
from .corpus import Label
from .emoji_data import load_emoji_table
from .errors import DataError, LengthMismatch, MisalignedIds, NumericError
from .preprocess import preprocess_dataset
from .textmodel import build_vocab

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_gold(path) -> corpus.Dataset:
    return corpus.load_tsv(path, has_labels=True)


def _read_pred_column(path):
    """Prediction file with either probabilities or label strings in column two."""
    ids, values = [], []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line:
            continue
        cells = line.split("\t")
        if len(cells) != 2:
            raise DataError(f"{path}:{lineno}: expected two columns")
        ids.append(cells[0])
        values.append(cells[1])
    return ids, values


def _align(ids, gold: corpus.Dataset):
    index = {t.id: i for i, t in enumerate(gold)}
    missing = [i for i in ids if i not in index]
    if missing or len(ids) != len(gold):
        raise MisalignedIds(f"prediction ids do not match gold ids ({len(missing)} unknown)")
    order = [index[i] for i in ids]
    return gold.labels()[order]


def _pred_labels(path, threshold):
    ids, values = _read_pred_column(path)
    try:
        probs = np.array([float(v) for v in values])
        return ids, ensemble.apply_threshold(probs, threshold), probs
    except ValueError:
        return ids, np.array([int(Label.parse(v)) for v in values]), None


def cmd_preprocess(args):
    data = corpus.load_tsv(args.inp, has_labels=not args.unlabeled)
    table = load_emoji_table(args.emoji_table)
    corpus.write_tsv(preprocess_dataset(data, table), args.out)


def cmd_synth(args):
    data = corpus.synth_corpus(args.n, args.positive_rate, args.noise_rate, args.seed)
    corpus.write_tsv(data, args.out)


def cmd_folds(args):
    data = _read_gold(args.inp)
    plan = corpus.stratified_folds(data, args.k, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for tid, f in zip(data.ids, plan.assignment):
            fh.write(f"{tid}\t{f}\n")


def cmd_train_fold(args):
    cfg = advtrain.load_train_config(args.config) if args.config else advtrain.TrainConfig()
    train, valid = _read_gold(args.train), _read_gold(args.valid)
    vocab = build_vocab(train, cfg.min_freq, cfg.max_vocab)
    result = advtrain.train_fold(train, valid, vocab, cfg)
    result.write(args.out_dir)
    print(f"best_epoch {result.best_epoch} stopped_epoch {result.stopped_epoch} f1 {max(result.history):.6f}")


def cmd_ensemble(args):
    if args.level == "model" and len(args.files) < 2:
        raise DataError("model-level ensembling needs at least two prediction files")
    matrix = None
    for path in args.files:
        ids, probs = advtrain.read_predictions(path)
        if matrix is None:
            matrix = ensemble.PredictionMatrix(ids)
        matrix.add(str(path), ids, probs)
    if args.level == "fold":
        merged = ensemble.fold_average(matrix)
    else:
        merged = ensemble.model_average(*matrix.runs.values())
    advtrain.write_predictions(args.out, matrix.ids, merged)


def cmd_tune_threshold(args):
    ids, probs = advtrain.read_predictions(args.oof)
    labels = _align(ids, _read_gold(args.gold))
    report = ensemble.optimize_threshold(probs, labels)
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_evaluate(args):
    ids, pred, _ = _pred_labels(args.pred, args.threshold)
    gold = _align(ids, _read_gold(args.gold))
    counts = evalkit.confusion_counts(pred, gold)
    sys.stdout.write(evalkit.format_report(counts))


def cmd_analyze(args):
    gold_ds = _read_gold(args.gold)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ids, probs = advtrain.read_predictions(args.pred_a)
    gold = _align(ids, gold_ds)
    ranked = evalkit.top_k_losses(probs, gold, ids, min(args.k, len(ids)))
    prob_of = dict(zip(ids, probs.tolist()))
    gold_of = dict(zip(ids, gold.tolist()))
    with open(out / "top_k.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for tid, loss in ranked:
            fh.write(f"{tid}\t{loss!r}\t{Label(gold_of[tid]).name}\t{prob_of[tid]!r}\n")
    if args.pred_b:
        ids_b, probs_b = advtrain.read_predictions(args.pred_b)
        if ids_b != ids:
            raise MisalignedIds("the two prediction files list different ids")
        rep = evalkit.disagreement(
            ensemble.apply_threshold(probs, args.threshold_a),
            ensemble.apply_threshold(probs_b, args.threshold_b),
            gold,
            ids,
        )
        (out / "disagreement.tsv").write_text(rep.to_tsv(), encoding="utf-8")
        summary = rep.summary(args.name_a, args.name_b)
        (out / "disagreement.txt").write_text(summary, encoding="utf-8")
        sys.stdout.write(summary)


def cmd_run(args):
    cfg = pipeline.ExperimentConfig.load(args.config)
    manifest = pipeline.run_cv(cfg, jobs=args.jobs)
    for name, v in manifest["variants"].items():
        print(f"{name}\tthreshold {v['threshold']['threshold']:.6f}\tf1 {v['metrics']['f1']:.6f}")
    e = manifest["ensemble"]
    print(f"ensemble\tthreshold {e['threshold']['threshold']:.6f}\tf1 {e['metrics']['f1']:.6f}")


def cmd_predict(args):
    data = corpus.load_tsv(args.inp, has_labels=args.labeled)
    data = corpus.Dataset(tuple(corpus.Tweet(t.id, t.text) for t in data), data.name)
    if not args.no_preprocess:
        data = pipeline.preprocess_for_manifest(args.manifest, data)
    pipeline.predict_unlabeled(args.manifest, data, args.out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="advtext", description="Informative-tweet classification with FGM adversarial training.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("run", help="cross-validated experiment from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("predict", help="label a TSV with a finished run")
    s.add_argument("--manifest", required=True)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--labeled", action="store_true", help="input has a label column (ignored)")
    s.add_argument("--no-preprocess", action="store_true")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("preprocess", help="normalize tweet text")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--emoji-table")
    s.add_argument("--unlabeled", action="store_true")
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("folds", help="stratified fold assignment")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_folds)

    s = sub.add_parser("train-fold", help="train one fold")
    s.add_argument("--train", required=True)
    s.add_argument("--valid", required=True)
    s.add_argument("--config")
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_train_fold)

    s = sub.add_parser("ensemble", help="average prediction files")
    s.add_argument("files", nargs="+")
    s.add_argument("--level", choices=("fold", "model"), required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ensemble)

    s = sub.add_parser("tune-threshold", help="F1-optimal threshold on OOF predictions")
    s.add_argument("--oof", required=True)
    s.add_argument("--gold", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_tune_threshold)

    s = sub.add_parser("evaluate", help="positive-class precision/recall/F1")
    s.add_argument("--pred", required=True)
    s.add_argument("--gold", required=True)
    s.add_argument("--threshold", type=float, default=0.5)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("analyze", help="top-k losses and disagreement report")
    s.add_argument("--pred-a", required=True)
    s.add_argument("--pred-b")
    s.add_argument("--gold", required=True)
    s.add_argument("--k", type=int, default=20)
    s.add_argument("--threshold-a", type=float, default=0.5)
    s.add_argument("--threshold-b", type=float, default=0.5)
    s.add_argument("--name-a", default="A")
    s.add_argument("--name-b", default="B")
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("synth", help="write a synthetic labeled corpus")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--positive-rate", type=float, default=0.47)
    s.add_argument("--noise-rate", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except NumericError as exc:
        print(f"advtext: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"advtext: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
