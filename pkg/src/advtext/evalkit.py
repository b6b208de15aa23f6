"""Positive-class metrics, per-sample loss ranking and ensemble disagreement."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import LengthMismatch
from .textmodel import bce_loss


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _div(a, b):
    return a / b if b else 0.0


def confusion_counts(pred, gold) -> ConfusionCounts:
    pred = np.asarray(pred, dtype=np.int64)
    gold = np.asarray(gold, dtype=np.int64)
    if pred.shape != gold.shape:
        raise LengthMismatch(f"{len(pred)} predictions vs {len(gold)} gold labels")
    if pred.size == 0:
        raise LengthMismatch("no samples to evaluate")
    return ConfusionCounts(
        tp=int(np.sum((pred == 1) & (gold == 1))),
        fp=int(np.sum((pred == 1) & (gold == 0))),
        fn=int(np.sum((pred == 0) & (gold == 1))),
        tn=int(np.sum((pred == 0) & (gold == 0))),
    )


def scores_from_counts(c: ConfusionCounts) -> tuple[float, float, float]:
    p = _div(c.tp, c.tp + c.fp)
    r = _div(c.tp, c.tp + c.fn)
    return p, r, _div(2 * p * r, p + r)


def precision_recall_f1(pred, gold) -> tuple[float, float, float, ConfusionCounts]:
    """Precision, recall and F1 for the INFORMATIVE class; 0 on any zero division."""
    counts = confusion_counts(pred, gold)
    return (*scores_from_counts(counts), counts)


def format_report(counts: ConfusionCounts) -> str:
    p, r, f1 = scores_from_counts(counts)
    lines = [
        f"tp {counts.tp}",
        f"fp {counts.fp}",
        f"fn {counts.fn}",
        f"tn {counts.tn}",
        f"precision {p:.6f}",
        f"recall {r:.6f}",
        f"f1 {f1:.6f}",
    ]
    return "\n".join(lines) + "\n"


def per_sample_bce(probs, gold) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64)
    if probs.shape != gold.shape:
        raise LengthMismatch(f"{len(probs)} probabilities vs {len(gold)} gold labels")
    return np.atleast_1d(bce_loss(probs, gold))


def top_k_losses(probs, gold, ids: Sequence[str], k: int) -> list[tuple[str, float]]:
    """Highest-loss samples first; equal losses ordered by id."""
    losses = per_sample_bce(probs, gold)
    if len(ids) != len(losses):
        raise LengthMismatch(f"{len(ids)} ids vs {len(losses)} losses")
    ranked = sorted(zip(ids, losses.tolist()), key=lambda t: (-t[1], t[0]))
    return ranked[:k]


@dataclass(frozen=True)
class DisagreementReport:
    errors_a: int
    errors_b: int
    a_wrong_b_right: int
    b_wrong_a_right: int
    ids_a_wrong: tuple = field(default=(), repr=False)
    ids_b_wrong: tuple = field(default=(), repr=False)
    ids_a_wrong_b_right: tuple = field(default=(), repr=False)
    ids_b_wrong_a_right: tuple = field(default=(), repr=False)

    @property
    def both_wrong(self) -> int:
        return self.errors_a - self.a_wrong_b_right

    def to_dict(self) -> dict:
        return {
            "errors_a": self.errors_a,
            "errors_b": self.errors_b,
            "a_wrong_b_right": self.a_wrong_b_right,
            "b_wrong_a_right": self.b_wrong_a_right,
            "ids_a_wrong": list(self.ids_a_wrong),
            "ids_b_wrong": list(self.ids_b_wrong),
            "ids_a_wrong_b_right": list(self.ids_a_wrong_b_right),
            "ids_b_wrong_a_right": list(self.ids_b_wrong_a_right),
        }

    def summary(self, name_a: str = "A", name_b: str = "B") -> str:
        return (
            f"{name_a} misclassified {self.errors_a} samples; "
            f"{self.a_wrong_b_right} of them were correct under {name_b}.\n"
            f"{name_b} misclassified {self.errors_b} samples; "
            f"{self.b_wrong_a_right} of them were correct under {name_a}.\n"
            f"Both wrong: {self.both_wrong}\n"
        )

    def to_tsv(self) -> str:
        rows = ["cell\tcount\tids"]
        for cell, ids in (
            ("a_wrong", self.ids_a_wrong),
            ("b_wrong", self.ids_b_wrong),
            ("a_wrong_b_right", self.ids_a_wrong_b_right),
            ("b_wrong_a_right", self.ids_b_wrong_a_right),
        ):
            rows.append(f"{cell}\t{len(ids)}\t{','.join(ids)}")
        return "\n".join(rows) + "\n"


def disagreement(pred_a, pred_b, gold, ids: Sequence[str]) -> DisagreementReport:
    pred_a, pred_b, gold = (np.asarray(x, dtype=np.int64) for x in (pred_a, pred_b, gold))
    if not (len(pred_a) == len(pred_b) == len(gold) == len(ids)):
        raise LengthMismatch("predictions, gold labels and ids must align")
    wrong_a = pred_a != gold
    wrong_b = pred_b != gold
    ids = np.asarray(list(ids), dtype=object)

    def pick(mask):
        return tuple(ids[mask].tolist())

    return DisagreementReport(
        errors_a=int(wrong_a.sum()),
        errors_b=int(wrong_b.sum()),
        a_wrong_b_right=int((wrong_a & ~wrong_b).sum()),
        b_wrong_a_right=int((wrong_b & ~wrong_a).sum()),
        ids_a_wrong=pick(wrong_a),
        ids_b_wrong=pick(wrong_b),
        ids_a_wrong_b_right=pick(wrong_a & ~wrong_b),
        ids_b_wrong_a_right=pick(wrong_b & ~wrong_a),
    )
