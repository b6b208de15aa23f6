"""FGM perturbations on the embedded sequence, AdamW, and the per-fold training loop."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import Dataset
from .errors import DataError, EmptySplit, NonFiniteGradient, ZeroGradient
from .evalkit import precision_recall_f1
from .textmodel import (
    PAD_ID,
    Gradients,
    ModelParams,
    Vocab,
    backward_batch,
    bce_loss,
    encode_batch,
    forward_batch,
    forward_embedded,
    init_params,
    predict_proba,
    save_checkpoint,
)

log = logging.getLogger(__name__)

ZERO_GRAD_NORM = 1e-12
NO_DECAY = frozenset({"cls_bias"})


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    patience: int = 3
    tolerance: float = 1e-3
    learning_rate: float = 1e-3
    batch_size: int = 16
    epsilon: float = 1.0
    adversarial: bool = False
    weight_decay: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    d: int = 32
    max_len: int = 64
    min_freq: int = 2
    max_vocab: int = 8000

    def __post_init__(self):
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if self.patience < 0:
            raise DataError("patience must be >= 0")
        if self.batch_size < 1:
            raise DataError("batch_size must be >= 1")
        if self.epsilon < 0:
            raise DataError("epsilon must be >= 0")
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DataError(f"unknown TrainConfig fields: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Perturbation:
    wrt_embedded: np.ndarray


def adversarial_perturbation(g: np.ndarray, epsilon: float) -> Perturbation:
    """``-epsilon * g / ||g||`` with the Frobenius norm over the whole matrix.

    ``g`` is the gradient of the log-likelihood, i.e. minus the loss gradient
    returned by :func:`backward`. The result points down the log-likelihood.
    """
    g = np.asarray(g, dtype=np.float64)
    norm = np.sqrt(np.sum(g * g))
    if not norm >= ZERO_GRAD_NORM:
        raise ZeroGradient(f"gradient norm {norm:.3e} below {ZERO_GRAD_NORM}")
    return Perturbation(-epsilon * g / norm)


def adversarial_loss(params: ModelParams, ids, label, z: Perturbation) -> tuple[float, Gradients]:
    """Loss on the perturbed embedding and its parameter gradients.

    The perturbation is a constant: it shifts the looked-up rows but nothing
    flows back into it, so the embedding gradient lands on the clean rows.
    """
    ids = np.asarray(ids, dtype=np.int64)[None, :]
    trace = forward_embedded(
        params, params.embedding[ids] + z.wrt_embedded[None], ids != PAD_ID, ids
    )
    grads = backward_batch(params, trace, [int(label)], reduction="sum")
    grads.wrt_embedded = grads.wrt_embedded[0]
    return bce_loss(trace.prob[0], int(label)), grads


def _batch_perturbations(dX: np.ndarray, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample perturbations for a batch of loss gradients; rows with zero gradient are skipped."""
    norms = np.sqrt(np.einsum("bld,bld->b", dX, dX))
    ok = norms >= ZERO_GRAD_NORM
    z = np.zeros_like(dX)
    # g = -dX, so -eps * g / |g| = eps * dX / |dX|
    z[ok] = epsilon * dX[ok] / norms[ok][:, None, None]
    return z, ok


@dataclass
class OptimizerState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "OptimizerState":
        arrays = params.arrays()
        return cls(0, {k: np.zeros_like(a) for k, a in arrays.items()}, {k: np.zeros_like(a) for k, a in arrays.items()})


def adamw_step(params: ModelParams, grads: Gradients | dict, state: OptimizerState, cfg: TrainConfig) -> tuple[ModelParams, OptimizerState]:
    """One bias-corrected Adam step with decoupled weight decay.

    Returns new params and state; the inputs are left untouched. Decay skips
    the classifier bias and the pad row of the embedding.
    """
    g = grads.params if isinstance(grads, Gradients) else grads
    for name, arr in g.items():
        if not np.all(np.isfinite(arr)):
            raise NonFiniteGradient(f"non-finite gradient in {name}")
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    lr, wd = cfg.learning_rate, cfg.weight_decay
    step = state.step + 1
    c1 = 1.0 - b1**step
    c2 = 1.0 - b2**step
    new, m_new, v_new = {}, {}, {}
    for name, w in params.arrays().items():
        gi = g[name]
        m = b1 * state.m[name] + (1.0 - b1) * gi
        v = b2 * state.v[name] + (1.0 - b2) * gi * gi
        update = lr * (m / c1) / (np.sqrt(v / c2) + cfg.adam_eps)
        if name in NO_DECAY or wd == 0.0:
            w_new = w - update
        else:
            decay = lr * wd * w
            if name == "embedding":
                decay = decay.copy()
                decay[PAD_ID] = 0.0
            w_new = w - decay - update
        new[name], m_new[name], v_new[name] = w_new, m, v
    return ModelParams(**new, max_len=params.max_len), OptimizerState(step, m_new, v_new)


def batch_gradients(params: ModelParams, ids: np.ndarray, labels: np.ndarray, cfg: TrainConfig) -> tuple[dict, float, int]:
    """Clean gradient plus, when enabled, the FGM adversarial gradient.

    Both terms are batch means and are summed. Returns the gradient dict, the
    clean mean loss and the number of samples that got a perturbation.
    """
    trace = forward_batch(params, ids)
    clean = backward_batch(params, trace, labels, reduction="mean")
    loss = float(np.mean(bce_loss(trace.prob, labels)))
    total = clean.params
    n_adv = 0
    if cfg.adversarial and cfg.epsilon > 0:
        z, ok = _batch_perturbations(clean.wrt_embedded, cfg.epsilon)
        n_adv = int(ok.sum())
        if n_adv:
            adv_trace = forward_embedded(params, params.embedding[ids] + z, ids != PAD_ID, ids)
            # a skipped sample gets prob == label, i.e. zero loss gradient
            adv_trace.prob = np.where(ok, adv_trace.prob, labels)
            adv = backward_batch(params, adv_trace, labels, reduction="sum")
            B = len(labels)
            total = {k: total[k] + adv.params[k] / B for k in total}
    return total, loss, n_adv


def early_stopping_trace(history: Sequence[float], patience: int, tolerance: float) -> tuple[int, int]:
    """Replay the stopping rule over a metric history.

    Returns ``(best_epoch, stop_epoch)``, 1-based. Improvement must exceed
    ``tolerance`` strictly; ties do not reset patience.
    """
    best, best_epoch, wait = -np.inf, 0, 0
    for epoch, value in enumerate(history, start=1):
        if value > best + tolerance:
            best, best_epoch, wait = value, epoch, 0
        else:
            wait += 1
            if wait >= patience:
                return best_epoch, epoch
    return best_epoch, len(history)


@dataclass
class FoldResult:
    params: ModelParams
    vocab: Vocab
    history: list[float]
    best_epoch: int
    stopped_epoch: int
    oof_ids: list[str]
    oof_probs: np.ndarray
    train_losses: list[float] = field(default_factory=list)

    def write(self, directory, stem: str = "fold") -> dict:
        """Write checkpoint, metric history and OOF predictions; return their file names."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {
            "checkpoint": f"{stem}.ckpt",
            "history": f"{stem}.history.tsv",
            "oof": f"{stem}.oof.tsv",
        }
        save_checkpoint(directory / paths["checkpoint"], self.params, self.vocab)
        with open(directory / paths["history"], "w", encoding="utf-8", newline="\n") as fh:
            for epoch, f1 in enumerate(self.history, start=1):
                fh.write(f"{epoch}\t{f1!r}\n")
        write_predictions(directory / paths["oof"], self.oof_ids, self.oof_probs)
        return paths


def write_predictions(path, ids: Sequence[str], probs: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, p in zip(ids, probs):
            fh.write(f"{i}\t{float(p)!r}\n")


def read_predictions(path) -> tuple[list[str], np.ndarray]:
    ids, probs = [], []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line:
            continue
        cells = line.split("\t")
        if len(cells) != 2:
            raise DataError(f"{path}:{lineno}: expected id<TAB>prob")
        try:
            p = float(cells[1])
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad probability {cells[1]!r}") from None
        if not 0.0 <= p <= 1.0:
            raise DataError(f"{path}:{lineno}: probability {p} outside [0, 1]")
        ids.append(cells[0])
        probs.append(p)
    return ids, np.array(probs, dtype=np.float64)


def positive_f1(probs: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> float:
    return precision_recall_f1((probs >= threshold).astype(int), labels)[2]


def train_fold(train: Dataset, valid: Dataset, vocab: Vocab, cfg: TrainConfig) -> FoldResult:
    """Train on ``train`` with early stopping on validation F1; return the best epoch's model."""
    if len(train) == 0 or len(valid) == 0:
        raise EmptySplit("train and validation splits must be non-empty")
    if set(train.ids) & set(valid.ids):
        raise DataError("train and validation splits overlap")
    x_train = encode_batch(train.texts, vocab, cfg.max_len)
    y_train = train.labels()
    x_valid = encode_batch(valid.texts, vocab, cfg.max_len)
    y_valid = valid.labels()

    rng = np.random.default_rng(cfg.seed)
    params = init_params(len(vocab), cfg.d, cfg.max_len, seed=cfg.seed)
    state = OptimizerState.zeros_like(params)
    history, losses = [], []
    best_params, best_probs = params, None
    best, wait, best_epoch, stopped = -np.inf, 0, 0, 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(train))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            grads, loss, _ = batch_gradients(params, x_train[idx], y_train[idx], cfg)
            params, state = adamw_step(params, grads, state, cfg)
            epoch_loss += loss * len(idx)
        losses.append(epoch_loss / len(order))
        probs = predict_proba(params, x_valid)
        f1 = positive_f1(probs, y_valid)
        history.append(f1)
        log.debug("epoch %d loss %.5f valid f1 %.5f", epoch, losses[-1], f1)
        stopped = epoch
        if f1 > best + cfg.tolerance:
            best, best_epoch, wait = f1, epoch, 0
            best_params, best_probs = params, probs
        else:
            wait += 1
            if wait >= cfg.patience:
                break
    return FoldResult(best_params, vocab, history, best_epoch, stopped, valid.ids, best_probs, losses)


def load_train_config(path) -> TrainConfig:
    return TrainConfig.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
