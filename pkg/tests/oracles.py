"""Independent reference computations used by the tests.

Nothing here calls the code path it checks: gradients come from central
differences of the forward pass, thresholds from exhaustive scans, and the
synthetic corpus is judged by a keyword counter.
"""
import itertools
import re

import numpy as np

from advtext.textmodel import PARAM_NAMES, bce_loss, forward, forward_embedded, init_params


def random_model(rng, max_vocab=20, max_d=8, max_len=6, scale=0.7):
    V = int(rng.integers(3, max_vocab + 1))
    d = int(rng.integers(1, max_d + 1))
    L = int(rng.integers(1, max_len + 1))
    params = init_params(V, d, L, seed=int(rng.integers(1 << 30)))
    for arr in params.arrays().values():
        arr[...] = rng.normal(0.0, scale, arr.shape)
    n_real = int(rng.integers(1, L + 1))
    ids = np.zeros(L, dtype=np.int64)
    ids[:n_real] = rng.integers(1, V, n_real)
    label = int(rng.integers(0, 2))
    return params, ids, label


def fd_param_grads(params, ids, label, h=1e-4):
    def loss():
        return bce_loss(forward(params, ids).prob, label)

    out = {}
    for name in PARAM_NAMES:
        arr = getattr(params, name)
        num = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + h
            up = loss()
            arr[idx] = orig - h
            down = loss()
            arr[idx] = orig
            num[idx] = (up - down) / (2 * h)
        out[name] = num
    return out


def fd_embedded_grad(params, embedded, mask, label, h=1e-4):
    X = np.array(embedded, dtype=np.float64)
    m = np.asarray(mask)[None]

    def loss():
        return bce_loss(forward_embedded(params, X[None], m).prob[0], label)

    num = np.zeros_like(X)
    for idx in np.ndindex(X.shape):
        orig = X[idx]
        X[idx] = orig + h
        up = loss()
        X[idx] = orig - h
        down = loss()
        X[idx] = orig
        num[idx] = (up - down) / (2 * h)
    return num


def max_rel_error(analytic, numeric, floor=1e-6):
    a, n = np.asarray(analytic), np.asarray(numeric)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)))


def f1_of(pred, gold):
    tp = sum(1 for p, g in zip(pred, gold) if p == 1 and g == 1)
    fp = sum(1 for p, g in zip(pred, gold) if p == 1 and g == 0)
    fn = sum(1 for p, g in zip(pred, gold) if p == 0 and g == 1)
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    return 2 * prec * rec / (prec + rec) if prec + rec else 0.0


def brute_force_best_f1(probs, labels):
    """Best F1 over every way of cutting the sorted distinct probabilities.

    A threshold classifier can only realise "the top j distinct values are
    positive" for j = 0..u, so enumerating those cuts covers all decisions.
    """
    distinct = sorted(set(probs), reverse=True)
    best = 0.0
    for j in range(len(distinct) + 1):
        chosen = set(distinct[:j])
        pred = [1 if p in chosen else 0 for p in probs]
        best = max(best, f1_of(pred, labels))
    return best


def grid_best_f1(probs, labels, points=1001):
    return max(f1_of([1 if p >= t else 0 for p in probs], labels) for t in np.linspace(0, 1, points))


POSITIVE_CUES = {"cases", "confirmed", "deaths", "county", "positive", "patients", "icu", "recorded", "reports", "hospital"}
NEGATIVE_CUES = {"think", "joke", "lol", "opinion", "meme", "memes", "haha", "bored", "dramatic", "overreacting", "imagine", "vibes"}


def keyword_classifier(text):
    words = re.findall(r"[a-z]+", text.lower())
    pos = sum(w in POSITIVE_CUES for w in words)
    neg = sum(w in NEGATIVE_CUES for w in words)
    return 1 if pos > neg else 0


def all_subsets(n):
    return itertools.product((0, 1), repeat=n)
