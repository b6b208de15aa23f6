"""Cross-validated experiment runner and test-time prediction.

A run trains every variant on every fold, assembles out-of-fold (OOF)
probabilities, tunes a threshold per variant and for the model-level
ensemble, and records everything in ``manifest.json`` under the output
directory. Paths inside the manifest are relative to that directory.
"""
from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .advtrain import FoldResult, TrainConfig, read_predictions, train_fold, write_predictions
from .corpus import Dataset, Label, concat, load_tsv, stratified_folds, synth_corpus, write_tsv
from .emoji_data import load_emoji_table
from .ensemble import apply_threshold, fold_average, model_average, optimize_threshold
from .errors import DataError, VocabMismatch
from .evalkit import disagreement, precision_recall_f1, top_k_losses
from .preprocess import preprocess_dataset
from .textmodel import build_vocab, encode_batch, load_checkpoint, predict_proba

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class Variant:
    name: str
    train: TrainConfig

    @classmethod
    def from_dict(cls, d: dict) -> "Variant":
        return cls(d["name"], TrainConfig.from_dict(d.get("train", {})))

    def to_dict(self) -> dict:
        return {"name": self.name, "train": self.train.to_dict()}


@dataclass(frozen=True)
class ExperimentConfig:
    output_dir: str
    variants: tuple[Variant, ...]
    data: tuple[str, ...] = ()
    synth: Optional[dict] = None
    emoji_table: Optional[str] = None
    k: int = 5
    fold_seed: int = 0
    ensemble: Optional[tuple[str, ...]] = None
    top_k: int = 20

    def __post_init__(self):
        object.__setattr__(self, "variants", tuple(self.variants))
        object.__setattr__(self, "data", tuple(self.data))
        if not self.variants:
            raise DataError("experiment needs at least one variant")
        names = [v.name for v in self.variants]
        if len(set(names)) != len(names):
            raise DataError(f"variant names must be unique: {names}")
        if bool(self.data) == bool(self.synth):
            raise DataError("give exactly one of 'data' (TSV paths) or 'synth'")
        if self.ensemble is not None:
            object.__setattr__(self, "ensemble", tuple(self.ensemble))
            unknown = set(self.ensemble) - set(names)
            if unknown:
                raise DataError(f"ensemble names unknown variants: {sorted(unknown)}")

    @property
    def ensemble_members(self) -> tuple[str, ...]:
        return self.ensemble if self.ensemble is not None else tuple(v.name for v in self.variants)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["variants"] = tuple(Variant.from_dict(v) for v in d.get("variants", ()))
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise DataError(f"unknown experiment fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["variants"] = [v.to_dict() for v in self.variants]
        d["data"] = list(self.data)
        if self.ensemble is not None:
            d["ensemble"] = list(self.ensemble)
        return d


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode("utf-8")).hexdigest()


def load_experiment_data(cfg: ExperimentConfig) -> Dataset:
    if cfg.synth is not None:
        return synth_corpus(**cfg.synth)
    return concat([load_tsv(p, has_labels=True) for p in cfg.data], name="cv")


def _fold_task(args):
    data, plan_assignment, fold, variant = args
    train_idx = [i for i, f in enumerate(plan_assignment) if f != fold]
    valid_idx = [i for i, f in enumerate(plan_assignment) if f == fold]
    train, valid = data.subset(train_idx), data.subset(valid_idx)
    tc = variant.train
    vocab = build_vocab(train, tc.min_freq, tc.max_vocab)
    fold_cfg = TrainConfig.from_dict({**tc.to_dict(), "seed": tc.seed + fold})
    return train_fold(train, valid, vocab, fold_cfg)


def _metrics(probs, labels, threshold) -> dict:
    p, r, f1, c = precision_recall_f1(apply_threshold(probs, threshold), labels)
    return {"precision": p, "recall": r, "f1": f1, "tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn}


def run_cv(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    """Run the full cross-validated experiment and return the manifest."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = load_emoji_table(cfg.emoji_table)
    data = preprocess_dataset(load_experiment_data(cfg), table)
    labels = data.labels()
    write_tsv(data, out / "data.tsv")
    plan = stratified_folds(data, cfg.k, cfg.fold_seed)
    with open(out / "folds.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for tid, f in zip(data.ids, plan.assignment):
            fh.write(f"{tid}\t{f}\n")

    # one task per (variant, fold); finished folds are reused
    pending, records = [], {}
    for variant in cfg.variants:
        for fold in range(cfg.k):
            key = (variant.name, fold)
            fold_dir = out / variant.name / f"fold{fold}"
            stamp = _digest({"variant": variant.to_dict(), "fold": fold, "k": cfg.k,
                             "fold_seed": cfg.fold_seed, "data": _sha256(out / "data.tsv")})
            done = fold_dir / "done.json"
            if done.exists():
                rec = json.loads(done.read_text(encoding="utf-8"))
                if rec.get("stamp") == stamp:
                    records[key] = rec
                    continue
            pending.append((key, fold_dir, stamp, (data, plan.assignment, fold, variant)))

    if pending:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_fold_task, [p[3] for p in pending]))
        else:
            results = [_fold_task(p[3]) for p in pending]
        for (key, fold_dir, stamp, _), res in zip(pending, results):
            records[key] = _record_fold(res, fold_dir, out, stamp, key[1])

    manifest = {
        "format_version": MANIFEST_VERSION,
        # output_dir is recorded as "." so the manifest does not depend on where the run lives
        "config": {**cfg.to_dict(), "output_dir": "."},
        "dataset": {"file": "data.tsv", "sha256": _sha256(out / "data.tsv"), "size": len(data),
                    "positives": int(labels.sum())},
        "folds": {"file": "folds.tsv", "k": cfg.k, "seed": cfg.fold_seed},
        "variants": {},
    }
    index = {tid: i for i, tid in enumerate(data.ids)}
    oof = {}
    for variant in cfg.variants:
        vec = np.full(len(data), np.nan)
        folds = []
        for fold in range(cfg.k):
            rec = records[(variant.name, fold)]
            ids, probs = read_predictions(out / rec["files"]["oof"])
            for tid, p in zip(ids, probs):
                i = index[tid]
                if plan.assignment[i] != fold or not np.isnan(vec[i]):
                    raise DataError(f"OOF bookkeeping error for sample {tid!r}")
                vec[i] = p
            folds.append(rec)
        if np.isnan(vec).any():
            raise DataError(f"variant {variant.name!r}: OOF vector incomplete")
        oof[variant.name] = vec
        oof_file = f"{variant.name}/oof.tsv"
        write_predictions(out / oof_file, data.ids, vec)
        report = optimize_threshold(vec, labels)
        manifest["variants"][variant.name] = {
            "train": variant.train.to_dict(),
            "folds": folds,
            "oof": oof_file,
            "threshold": report.to_dict(),
            "metrics": _metrics(vec, labels, report.threshold),
            "metrics_at_0.5": _metrics(vec, labels, 0.5),
        }

    members = list(cfg.ensemble_members)
    ens = oof[members[0]] if len(members) == 1 else model_average(*[oof[m] for m in members])
    write_predictions(out / "ensemble_oof.tsv", data.ids, ens)
    report = optimize_threshold(ens, labels)
    manifest["ensemble"] = {
        "members": members,
        "oof": "ensemble_oof.tsv",
        "threshold": report.to_dict(),
        "metrics": _metrics(ens, labels, report.threshold),
    }
    manifest["analysis"] = _analyze(out, data, labels, ens, oof, manifest, cfg)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def _record_fold(res: FoldResult, fold_dir: Path, out: Path, stamp: str, fold: int) -> dict:
    files = res.write(fold_dir)
    rel = {k: str((fold_dir / v).relative_to(out)) for k, v in files.items()}
    rec = {
        "stamp": stamp,
        "fold": fold,
        "files": rel,
        "history": res.history,
        "best_epoch": res.best_epoch,
        "stopped_epoch": res.stopped_epoch,
        "vocab_size": len(res.vocab),
        "vocab_sha256": res.vocab.fingerprint(),
        "valid_size": len(res.oof_ids),
    }
    (fold_dir / "done.json").write_text(json.dumps(rec, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return rec


def _analyze(out, data, labels, ens, oof, manifest, cfg) -> dict:
    adir = out / "analysis"
    adir.mkdir(exist_ok=True)
    ranked = top_k_losses(ens, labels, data.ids, min(cfg.top_k, len(data)))
    prob_of = dict(zip(data.ids, ens.tolist()))
    gold_of = dict(zip(data.ids, labels.tolist()))
    with open(adir / "top_k.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for tid, loss in ranked:
            fh.write(f"{tid}\t{loss!r}\t{Label(gold_of[tid]).name}\t{prob_of[tid]!r}\n")
    result = {"top_k": "analysis/top_k.tsv"}
    names = [v.name for v in cfg.variants]
    if len(names) >= 2:
        a, b = names[:2]
        pa = apply_threshold(oof[a], manifest["variants"][a]["threshold"]["threshold"])
        pb = apply_threshold(oof[b], manifest["variants"][b]["threshold"]["threshold"])
        rep = disagreement(pa, pb, labels, data.ids)
        (adir / "disagreement.tsv").write_text(rep.to_tsv(), encoding="utf-8")
        (adir / "disagreement.txt").write_text(rep.summary(a, b), encoding="utf-8")
        result["disagreement"] = {
            "a": a,
            "b": b,
            "errors_a": rep.errors_a,
            "errors_b": rep.errors_b,
            "a_wrong_b_right": rep.a_wrong_b_right,
            "b_wrong_a_right": rep.b_wrong_a_right,
            "tsv": "analysis/disagreement.tsv",
            "text": "analysis/disagreement.txt",
        }
    return result


def load_manifest(path) -> tuple[dict, Path]:
    path = Path(path)
    manifest = json.loads(path.read_text(encoding="utf-8"))
    if manifest.get("format_version") != MANIFEST_VERSION:
        raise DataError(f"{path}: unsupported manifest version {manifest.get('format_version')}")
    return manifest, path.parent


def predict_proba_ensemble(manifest_path, data: Dataset) -> np.ndarray:
    """Fold-average each ensemble member's checkpoints, then average the members."""
    manifest, root = load_manifest(manifest_path)
    member_probs = []
    for name in manifest["ensemble"]["members"]:
        runs = {}
        for rec in manifest["variants"][name]["folds"]:
            params, vocab = load_checkpoint(root / rec["files"]["checkpoint"])
            if vocab.fingerprint() != rec["vocab_sha256"]:
                raise VocabMismatch(f"{rec['files']['checkpoint']}: vocabulary differs from manifest")
            ids = encode_batch(data.texts, vocab, params.max_len)
            runs[f"{name}/fold{rec['fold']}"] = predict_proba(params, ids)
        member_probs.append(fold_average(runs))
    if len(member_probs) == 1:
        return member_probs[0]
    return model_average(*member_probs)


def predict_unlabeled(manifest_path, data: Dataset, out_path=None) -> list[tuple[str, Label]]:
    """Label ``data`` (already preprocessed) with the tuned ensemble threshold.

    Writes ``id<TAB>LABEL`` rows to ``out_path`` when given.
    """
    manifest, _ = load_manifest(manifest_path)
    probs = predict_proba_ensemble(manifest_path, data)
    threshold = manifest["ensemble"]["threshold"]["threshold"]
    rows = [(tid, Label(int(y))) for tid, y in zip(data.ids, apply_threshold(probs, threshold))]
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            for tid, y in rows:
                fh.write(f"{tid}\t{y.name}\n")
    return rows


def preprocess_for_manifest(manifest_path, data: Dataset) -> Dataset:
    manifest, _ = load_manifest(manifest_path)
    return preprocess_dataset(data, load_emoji_table(manifest["config"].get("emoji_table")))


def desk_config(output_dir, noise_rate: float = 0.0, n: int = 2000, seed: int = 0,
                variants: Sequence[str] = ("plain", "adv")) -> ExperimentConfig:
    """Two-variant synthetic experiment: plain vs FGM with epsilon 1."""
    base = TrainConfig(learning_rate=3e-3, max_len=32, seed=seed)
    vs = []
    for name in variants:
        tc = TrainConfig.from_dict({**base.to_dict(), "adversarial": name.startswith("adv"), "epsilon": 1.0})
        vs.append(Variant(name, tc))
    return ExperimentConfig(
        output_dir=str(output_dir),
        variants=tuple(vs),
        synth={"n": n, "positive_rate": 0.47, "noise_rate": noise_rate, "seed": seed},
        k=5,
        fold_seed=seed,
    )
