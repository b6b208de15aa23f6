"""Tweet datasets: TSV I/O, stratified fold assignment, synthetic corpora."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    DataError,
    DuplicateId,
    EmptyFile,
    KTooLarge,
    MalformedRow,
    UnknownLabel,
)


class Label(enum.IntEnum):
    UNINFORMATIVE = 0
    INFORMATIVE = 1

    @classmethod
    def parse(cls, raw: str) -> "Label":
        try:
            return cls[raw.strip().upper()]
        except KeyError:
            raise UnknownLabel(f"unknown label {raw!r}") from None


@dataclass(frozen=True)
class Tweet:
    id: str
    text: str
    label: Optional[Label] = None

    def __post_init__(self):
        if not self.id:
            raise DataError("tweet id must be non-empty")
        if not self.text.strip():
            raise DataError(f"tweet {self.id!r} has empty text")


@dataclass(frozen=True)
class Dataset:
    items: tuple[Tweet, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        seen = set()
        for t in self.items:
            if t.id in seen:
                raise DuplicateId(f"duplicate id {t.id!r} in dataset {self.name!r}")
            seen.add(t.id)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]

    @property
    def ids(self) -> list[str]:
        return [t.id for t in self.items]

    @property
    def texts(self) -> list[str]:
        return [t.text for t in self.items]

    @property
    def is_labeled(self) -> bool:
        return all(t.label is not None for t in self.items)

    def labels(self) -> np.ndarray:
        """Labels as an int array; raises if any item is unlabeled."""
        if not self.is_labeled:
            raise DataError(f"dataset {self.name!r} is not fully labeled")
        return np.array([int(t.label) for t in self.items], dtype=np.int64)

    def subset(self, indices: Iterable[int], name: Optional[str] = None) -> "Dataset":
        return Dataset(tuple(self.items[i] for i in indices), name or self.name)

    def map_text(self, fn) -> "Dataset":
        return Dataset(
            tuple(Tweet(t.id, fn(t.text), t.label) for t in self.items), self.name
        )


def concat(datasets: Sequence[Dataset], name: str = "") -> Dataset:
    items = [t for d in datasets for t in d.items]
    return Dataset(tuple(items), name or "+".join(d.name for d in datasets))


def load_tsv(path, has_labels: bool = True) -> Dataset:
    """Read ``id<TAB>text[<TAB>label]`` rows.

    A first row whose first cell is literally ``id`` is treated as a header.
    """
    path = Path(path)
    raw = path.read_bytes().decode("utf-8")
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if lines and lines[0].split("\t", 1)[0] == "id":
        lines = lines[1:]
    if not lines:
        raise EmptyFile(f"{path}: no data rows")
    ncols = 3 if has_labels else 2
    items = []
    for lineno, line in enumerate(lines, start=1):
        if line.endswith("\r"):
            line = line[:-1]
        cells = line.split("\t")
        if len(cells) != ncols:
            raise MalformedRow(
                f"{path}:{lineno}: expected {ncols} columns, got {len(cells)}"
            )
        label = Label.parse(cells[2]) if has_labels else None
        try:
            items.append(Tweet(cells[0], cells[1], label))
        except DataError as exc:
            raise MalformedRow(f"{path}:{lineno}: {exc}") from None
    return Dataset(tuple(items), path.stem)


def write_tsv(data: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in data.items:
            if "\t" in t.text or "\n" in t.text:
                raise DataError(f"tweet {t.id!r}: text contains tab or newline")
            if t.label is None:
                fh.write(f"{t.id}\t{t.text}\n")
            else:
                fh.write(f"{t.id}\t{t.text}\t{t.label.name}\n")


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: tuple[int, ...]
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(int(a) for a in self.assignment))

    def valid_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignment) if f == fold]

    def train_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignment) if f != fold]


def stratified_folds(data: Dataset | Sequence[int], k: int, seed: int) -> FoldPlan:
    """Shuffle each class with ``seed`` and deal the classes round-robin.

    The deal position carries over from one class to the next, which keeps
    both the fold sizes and the per-class counts within one of each other.
    Accepts a Dataset or a bare label sequence.
    """
    labels = data.labels() if isinstance(data, Dataset) else np.asarray(data)
    n = len(labels)
    if k < 2:
        raise DataError("k must be at least 2")
    if k > n:
        raise KTooLarge(f"k={k} exceeds dataset size {n}")
    rng = np.random.default_rng(seed)
    order = []
    for c in sorted(set(labels.tolist())):
        members = np.flatnonzero(labels == c)
        order.extend(members[rng.permutation(len(members))].tolist())
    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = np.arange(n) % k
    return FoldPlan(k, tuple(assignment.tolist()), seed)


_POS_LEADS = [
    "{n} new cases confirmed in {place}",
    "{place} reports {n} confirmed cases and {m} deaths",
    "health officials in {place} confirm {n} positive tests",
    "{n} deaths recorded in {place} county today",
    "breaking: {place} hospital admits {n} patients , {m} in icu",
    "total cases in {place} rise to {n} , deaths at {m}",
]
_NEG_LEADS = [
    "i think this virus thing is a joke lol",
    "honestly my opinion is everyone is overreacting",
    "lol imagine being scared of a cold",
    "this meme about quarantine is hilarious haha",
    "so bored at home , send memes pls",
    "why is everyone so dramatic about this , just vibes",
]
_SHARED = [
    "#covid19", "@USER", "HTTPURL", "stay safe &amp; wash hands", "😷", "🙏",
    "#coronavirus", "update", "today", "\U0001f602", "news", "&lt;3",
]
_PLACES = [
    "texas", "ohio", "lagos", "delhi", "milan", "madrid", "chicago", "austin",
    "travis", "williamson", "ontario", "kerala",
]


def synth_corpus(
    n: int, positive_rate: float, noise_rate: float = 0.0, seed: int = 0
) -> Dataset:
    """Keyword-separable tweet-like corpus for desk-scale experiments.

    Positives mention case counts, deaths and places; negatives are opinions
    and jokes. Both share hashtags, handles, URLs, entities and emoji so the
    preprocessing path is exercised. The positive count is
    ``n - floor(n * (1 - positive_rate))``; each label is then flipped with
    probability ``noise_rate``.
    """
    if not 0 < positive_rate < 1:
        raise DataError("positive_rate must be in (0, 1)")
    if not 0 <= noise_rate < 0.5:
        raise DataError("noise_rate must be in [0, 0.5)")
    if n < 1:
        raise DataError("n must be positive")
    rng = np.random.default_rng(seed)
    n_pos = n - math.floor(n * (1 - positive_rate) + 1e-9)
    labels = np.array([1] * n_pos + [0] * (n - n_pos))
    labels = labels[rng.permutation(n)]
    items = []
    for i, y in enumerate(labels):
        leads = _POS_LEADS if y else _NEG_LEADS
        text = leads[rng.integers(len(leads))].format(
            n=int(rng.integers(2, 5000)),
            m=int(rng.integers(1, 300)),
            place=_PLACES[rng.integers(len(_PLACES))],
        )
        extras = rng.choice(len(_SHARED), size=rng.integers(0, 4), replace=False)
        words = [text] + [_SHARED[j] for j in sorted(extras)]
        text = " ".join(words)
        if rng.random() < noise_rate:
            y = 1 - y
        items.append(Tweet(str(100000 + i), text, Label(int(y))))
    return Dataset(tuple(items), f"synth-{n}-{seed}")
