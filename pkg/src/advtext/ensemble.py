"""Fold-level and model-level averaging, and out-of-fold threshold search."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, LengthMismatch, MisalignedIds, SingleClassLabels
from .evalkit import confusion_counts, scores_from_counts


@dataclass
class PredictionMatrix:
    ids: tuple
    runs: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ids = tuple(self.ids)
        for name, probs in list(self.runs.items()):
            self.runs[name] = self._check(name, probs)

    def _check(self, name, probs) -> np.ndarray:
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != (len(self.ids),):
            raise MisalignedIds(f"run {name!r} has {probs.shape} values for {len(self.ids)} ids")
        if probs.size and (probs.min() < 0.0 or probs.max() > 1.0 or not np.all(np.isfinite(probs))):
            raise DataError(f"run {name!r} has probabilities outside [0, 1]")
        return probs

    def add(self, name: str, ids: Sequence[str], probs) -> None:
        if name in self.runs:
            raise DataError(f"duplicate run label {name!r}")
        if tuple(ids) != self.ids:
            raise MisalignedIds(f"run {name!r} ids do not match the matrix ids")
        self.runs[name] = self._check(name, probs)

    def select(self, names: Sequence[str]) -> "PredictionMatrix":
        return PredictionMatrix(self.ids, {n: self.runs[n] for n in names})


def _mean(vectors: Sequence[np.ndarray]) -> np.ndarray:
    # fixed summation order keeps results reproducible across callers
    total = np.zeros_like(vectors[0])
    for v in vectors:
        total = total + v
    return total / len(vectors)


def fold_average(runs: PredictionMatrix | Mapping[str, np.ndarray]) -> np.ndarray:
    """Mean over the runs of one model's folds, in run insertion order."""
    if isinstance(runs, PredictionMatrix):
        runs = runs.runs
    if not runs:
        raise DataError("fold_average needs at least one run")
    vectors = [np.asarray(v, dtype=np.float64) for v in runs.values()]
    if len({v.shape for v in vectors}) != 1:
        raise MisalignedIds("runs have different lengths")
    return _mean(vectors)


def model_average(*vectors) -> np.ndarray:
    """Equal-weight mean of two or more probability vectors."""
    if len(vectors) == 1 and not np.isscalar(vectors[0][0]):
        vectors = tuple(vectors[0])
    vectors = [np.asarray(v, dtype=np.float64) for v in vectors]
    if len(vectors) < 2:
        raise DataError("model_average needs at least two vectors")
    if len({v.shape for v in vectors}) != 1:
        raise LengthMismatch("probability vectors differ in length")
    return _mean(vectors)


def apply_threshold(probs, threshold: float) -> np.ndarray:
    """1 (INFORMATIVE) where ``prob >= threshold``."""
    if not 0.0 <= threshold <= 1.0:
        raise DataError(f"threshold {threshold} outside [0, 1]")
    return (np.asarray(probs, dtype=np.float64) >= threshold).astype(np.int64)


@dataclass(frozen=True)
class ThresholdReport:
    threshold: float
    f1_at_threshold: float
    candidates: int

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "f1": self.f1_at_threshold, "candidates": self.candidates}


def threshold_candidates(probs) -> np.ndarray:
    """0, 1 and every midpoint between consecutive distinct probabilities."""
    u = np.unique(np.asarray(probs, dtype=np.float64))
    mids = (u[:-1] + u[1:]) / 2.0
    return np.unique(np.concatenate([[0.0], mids, [1.0]]))


def optimize_threshold(oof_probs, labels) -> ThresholdReport:
    """Exhaustive F1-maximizing threshold over the midpoint candidate set.

    A single sorted sweep gives the confusion counts at every candidate.
    Ties go to the smallest threshold.
    """
    probs = np.asarray(oof_probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if probs.shape != y.shape:
        raise LengthMismatch(f"{len(probs)} probabilities vs {len(y)} labels")
    if y.size == 0 or y.min() == y.max():
        if y.size and y.min() == 1:
            # everything positive is the unique optimum
            return ThresholdReport(0.0, 1.0, 1)
        raise SingleClassLabels("threshold search needs positive and negative labels")
    cands = threshold_candidates(probs)
    order = np.argsort(probs, kind="stable")
    sp, sy = probs[order], y[order]
    n_pos = int(y.sum())
    # number of samples with prob >= c, and positives among them
    start = np.searchsorted(sp, cands, side="left")
    pos_suffix = np.concatenate([np.cumsum(sy[::-1])[::-1], [0]])
    predicted = len(sp) - start
    tp = pos_suffix[start]
    fp = predicted - tp
    fn = n_pos - tp
    # same float operations as evalkit.scores_from_counts, so F1 values compare exactly
    p = np.divide(tp, tp + fp, out=np.zeros(len(cands)), where=(tp + fp) > 0)
    r = np.divide(tp, tp + fn, out=np.zeros(len(cands)), where=(tp + fn) > 0)
    f1 = np.divide(2 * p * r, p + r, out=np.zeros(len(cands)), where=(p + r) > 0)
    best = int(np.argmax(f1))  # first maximum is the smallest threshold
    threshold = float(cands[best])
    counts = confusion_counts(apply_threshold(probs, threshold), y)
    return ThresholdReport(threshold, scores_from_counts(counts)[2], len(cands))
