"""Vocabulary, encoding and a one-layer attention classifier with hand-written backward.

Architecture per sample, with ``X`` the embedded id sequence (L x d) and
``m`` the non-pad mask::

    Q, K, V = X Wq, X Wk, X Wv
    A       = softmax(Q K^T / sqrt(d))      pad keys masked out
    H       = X + (A V) Wo
    pooled  = sum_i m_i H_i / sum_i m_i
    prob    = sigmoid(pooled . w + b)

All arrays are float64. Every gradient is a gradient of the clamped BCE
loss, so it vanishes once the probability leaves [1e-7, 1 - 1e-7].
"""
from __future__ import annotations

import hashlib
import io
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CheckpointError, EmptyVocabulary, IdOutOfRange

PAD, UNK = "<pad>", "<unk>"
PAD_ID, UNK_ID = 0, 1
PROB_CLAMP = 1e-7

PARAM_NAMES = (
    "embedding",
    "w_query",
    "w_key",
    "w_value",
    "w_out",
    "cls_weight",
    "cls_bias",
)

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Vocab:
    id_to_token: tuple[str, ...]
    token_to_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "id_to_token", tuple(self.id_to_token))
        if self.id_to_token[:2] != (PAD, UNK):
            raise ValueError("vocab must start with the pad and unk tokens")
        mapping = {tok: i for i, tok in enumerate(self.id_to_token)}
        if len(mapping) != len(self.id_to_token):
            raise ValueError("vocab tokens must be unique")
        object.__setattr__(self, "token_to_id", mapping)

    pad_id = PAD_ID
    unk_id = UNK_ID

    def __len__(self):
        return len(self.id_to_token)

    def fingerprint(self) -> str:
        return hashlib.sha256("\n".join(self.id_to_token).encode("utf-8")).hexdigest()


def build_vocab(texts: Iterable[str], min_freq: int = 2, max_size: int = 8000) -> Vocab:
    """Most frequent tokens first, ties broken lexicographically.

    ``texts`` may be a Dataset (its texts are used) or any iterable of strings.
    """
    if hasattr(texts, "texts"):
        texts = texts.texts
    counts = Counter(tok for text in texts for tok in tokenize(text))
    kept = sorted(
        (tok for tok, c in counts.items() if c >= min_freq),
        key=lambda tok: (-counts[tok], tok),
    )[: max(max_size - 2, 0)]
    if not kept:
        raise EmptyVocabulary(f"no token occurs at least {min_freq} times")
    return Vocab((PAD, UNK, *kept))


def encode(text: str, vocab: Vocab, max_len: int) -> list[int]:
    ids = [vocab.token_to_id.get(tok, UNK_ID) for tok in tokenize(text)][:max_len]
    return ids + [PAD_ID] * (max_len - len(ids))


def encode_batch(texts: Sequence[str], vocab: Vocab, max_len: int) -> np.ndarray:
    return np.array([encode(t, vocab, max_len) for t in texts], dtype=np.int64).reshape(
        len(texts), max_len
    )


@dataclass
class ModelParams:
    embedding: np.ndarray
    w_query: np.ndarray
    w_key: np.ndarray
    w_value: np.ndarray
    w_out: np.ndarray
    cls_weight: np.ndarray
    cls_bias: np.ndarray
    max_len: int

    @property
    def d(self) -> int:
        return self.embedding.shape[1]

    @property
    def vocab_size(self) -> int:
        return self.embedding.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "ModelParams":
        return ModelParams(**{k: v.copy() for k, v in self.arrays().items()}, max_len=self.max_len)

    def expected_shapes(self) -> dict[str, tuple]:
        V, d = self.vocab_size, self.d
        square = (d, d)
        return {
            "embedding": (V, d),
            "w_query": square,
            "w_key": square,
            "w_value": square,
            "w_out": square,
            "cls_weight": (d,),
            "cls_bias": (),
        }

    def validate(self):
        for name, shape in self.expected_shapes().items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name}: shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name}: non-finite values")


def init_params(vocab_size: int, d: int = 32, max_len: int = 64, seed: int = 0) -> ModelParams:
    rng = np.random.default_rng(seed)

    def u(*shape):
        return rng.uniform(-0.1, 0.1, size=shape)

    return ModelParams(
        embedding=u(vocab_size, d),
        w_query=u(d, d),
        w_key=u(d, d),
        w_value=u(d, d),
        w_out=u(d, d),
        cls_weight=u(d),
        cls_bias=np.zeros(()),
        max_len=max_len,
    )


def zero_params_like(params: ModelParams) -> ModelParams:
    return ModelParams(
        **{k: np.zeros_like(v) for k, v in params.arrays().items()}, max_len=params.max_len
    )


@dataclass
class ForwardTrace:
    """Cached activations. Batched arrays carry a leading batch axis."""

    token_ids: np.ndarray
    embedded: np.ndarray
    mask: np.ndarray
    query: np.ndarray
    key: np.ndarray
    value: np.ndarray
    attention: np.ndarray
    context: np.ndarray
    hidden: np.ndarray
    pooled: np.ndarray
    logit: np.ndarray
    prob: np.ndarray

    def sample(self, i: int) -> "ForwardTrace":
        return ForwardTrace(**{k: v[i] for k, v in vars(self).items()})


@dataclass
class Gradients:
    params: dict[str, np.ndarray]
    wrt_embedded: np.ndarray

    def __getitem__(self, name):
        return self.params[name]


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


_PROB_LO = np.nextafter(0.0, 1.0)
_PROB_HI = np.nextafter(1.0, 0.0)


def _check_ids(params: ModelParams, ids: np.ndarray):
    if ids.ndim != 2 or ids.shape[1] != params.max_len:
        raise IdOutOfRange(f"id sequence length must be {params.max_len}, got shape {ids.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= params.vocab_size):
        raise IdOutOfRange(f"token id outside [0, {params.vocab_size})")


def forward_embedded(params: ModelParams, embedded: np.ndarray, mask: np.ndarray, token_ids=None) -> ForwardTrace:
    """Run the encoder on an already-embedded batch ``(B, L, d)``."""
    X = np.asarray(embedded, dtype=np.float64)
    m = np.asarray(mask, dtype=np.float64)
    d = X.shape[-1]
    scale = 1.0 / np.sqrt(d)
    Q = X @ params.w_query
    K = X @ params.w_key
    V = X @ params.w_value
    scores = (Q @ K.transpose(0, 2, 1)) * scale
    keymask = m[:, None, :] > 0
    scores = np.where(keymask, scores, -np.inf)
    top = scores.max(axis=-1, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    e = np.where(keymask, np.exp(scores - top), 0.0)
    z = e.sum(axis=-1, keepdims=True)
    A = np.divide(e, z, out=np.zeros_like(e), where=z > 0)
    C = A @ V
    H = X + C @ params.w_out
    n = m.sum(axis=1)
    pooled = (m[..., None] * H).sum(axis=1) / np.maximum(n, 1.0)[:, None]
    logit = pooled @ params.cls_weight + params.cls_bias
    prob = np.clip(sigmoid(logit), _PROB_LO, _PROB_HI)
    if token_ids is None:
        token_ids = np.zeros(m.shape, dtype=np.int64)
    return ForwardTrace(token_ids, X, m, Q, K, V, A, C, H, pooled, logit, prob)


def forward_batch(params: ModelParams, ids) -> ForwardTrace:
    ids = np.asarray(ids, dtype=np.int64)
    _check_ids(params, ids)
    return forward_embedded(params, params.embedding[ids], ids != PAD_ID, ids)


def forward(params: ModelParams, ids) -> ForwardTrace:
    """Single-sample forward pass; arrays in the trace have no batch axis."""
    ids = np.asarray(ids, dtype=np.int64)
    return forward_batch(params, ids[None, :]).sample(0)


def predict_proba(params: ModelParams, ids, batch_size: int = 256) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    out = [forward_batch(params, ids[i : i + batch_size]).prob for i in range(0, len(ids), batch_size)]
    return np.concatenate(out) if out else np.zeros(0)


def bce_loss(prob, label):
    """Per-sample binary cross entropy with probabilities clamped to [1e-7, 1 - 1e-7]."""
    p = np.clip(np.asarray(prob, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = np.asarray(label, dtype=np.float64)
    loss = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    return float(loss) if loss.ndim == 0 else loss


def _batched(trace: ForwardTrace) -> tuple[ForwardTrace, bool]:
    if trace.embedded.ndim == 2:
        return ForwardTrace(**{k: np.asarray(v)[None] for k, v in vars(trace).items()}), True
    return trace, False


def backward_batch(params: ModelParams, trace: ForwardTrace, labels, reduction: str = "mean") -> Gradients:
    """Gradients of the batch loss.

    Parameter gradients are reduced over the batch (``mean`` or ``sum``);
    ``wrt_embedded`` stays per sample and is the gradient of that sample's
    own loss, which is what the adversarial step needs.
    """
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    X, m, A = trace.embedded, trace.mask, trace.attention
    Q, K, V, C = trace.query, trace.key, trace.value, trace.context
    B, L, d = X.shape
    scale = 1.0 / np.sqrt(d)

    # the loss is flat where the probability is clamped
    clamped = (trace.prob < PROB_CLAMP) | (trace.prob > 1.0 - PROB_CLAMP)
    dlogit = np.where(clamped, 0.0, trace.prob - y)
    n = np.maximum(m.sum(axis=1), 1.0)
    d_cls_weight = dlogit @ trace.pooled
    d_cls_bias = dlogit.sum()
    dpooled = dlogit[:, None] * params.cls_weight[None, :]
    dH = (m / n[:, None])[..., None] * dpooled[:, None, :]

    d_w_out = np.einsum("bli,blj->ij", C, dH)
    dC = dH @ params.w_out.T
    dA = dC @ V.transpose(0, 2, 1)
    dV = A.transpose(0, 2, 1) @ dC
    dS = A * (dA - (dA * A).sum(axis=-1, keepdims=True)) * scale
    dQ = dS @ K
    dK = dS.transpose(0, 2, 1) @ Q

    d_w_query = np.einsum("bli,blj->ij", X, dQ)
    d_w_key = np.einsum("bli,blj->ij", X, dK)
    d_w_value = np.einsum("bli,blj->ij", X, dV)
    dX = dH + dQ @ params.w_query.T + dK @ params.w_key.T + dV @ params.w_value.T

    d_embedding = np.zeros_like(params.embedding)
    np.add.at(d_embedding, trace.token_ids.reshape(-1), dX.reshape(-1, d))

    grads = {
        "embedding": d_embedding,
        "w_query": d_w_query,
        "w_key": d_w_key,
        "w_value": d_w_value,
        "w_out": d_w_out,
        "cls_weight": d_cls_weight,
        "cls_bias": np.asarray(d_cls_bias),
    }
    if reduction == "mean":
        grads = {k: v / B for k, v in grads.items()}
    elif reduction != "sum":
        raise ValueError(f"unknown reduction {reduction!r}")
    return Gradients(grads, dX)


def backward(params: ModelParams, trace: ForwardTrace, label) -> Gradients:
    """Single-sample backward pass; ``trace`` comes from :func:`forward`."""
    batched, squeeze = _batched(trace)
    g = backward_batch(params, batched, [int(label)], reduction="sum")
    if squeeze:
        g.wrt_embedded = g.wrt_embedded[0]
    return g


_MAGIC = b"ADVTEXT-CHECKPOINT\n"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, params: ModelParams, vocab: Vocab) -> None:
    """Header line (JSON) followed by float64 little-endian arrays in PARAM_NAMES order."""
    if len(vocab) != params.vocab_size:
        raise CheckpointError("vocab size does not match the embedding matrix")
    header = {
        "format_version": CHECKPOINT_VERSION,
        "V": params.vocab_size,
        "d": params.d,
        "max_len": params.max_len,
        "vocab": list(vocab.id_to_token),
        "arrays": [[name, list(getattr(params, name).shape)] for name in PARAM_NAMES],
    }
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8") + b"\n")
    for name in PARAM_NAMES:
        buf.write(np.ascontiguousarray(getattr(params, name), dtype="<f8").tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path) -> tuple[ModelParams, Vocab]:
    raw = Path(path).read_bytes()
    if not raw.startswith(_MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint file")
    end = raw.index(b"\n", len(_MAGIC))
    header = json.loads(raw[len(_MAGIC) : end].decode("utf-8"))
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {header.get('format_version')}")
    V, d, max_len = header["V"], header["d"], header["max_len"]
    vocab = Vocab(header["vocab"])
    if len(vocab) != V:
        raise CheckpointError(f"{path}: vocabulary listing has {len(vocab)} entries, header says {V}")
    expected = {"embedding": [V, d], "cls_weight": [d], "cls_bias": []}
    names = [name for name, _ in header["arrays"]]
    if names != list(PARAM_NAMES):
        raise CheckpointError(f"{path}: unexpected array order {names}")
    offset = end + 1
    arrays = {}
    for name, shape in header["arrays"]:
        if shape != expected.get(name, [d, d]):
            raise CheckpointError(f"{path}: {name} has shape {shape}, header implies {expected.get(name, [d, d])}")
        count = int(np.prod(shape)) if shape else 1
        nbytes = 8 * count
        if offset + nbytes > len(raw):
            raise CheckpointError(f"{path}: truncated at {name}")
        arrays[name] = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).astype(np.float64).reshape(shape)
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes")
    return ModelParams(**arrays, max_len=max_len), vocab
