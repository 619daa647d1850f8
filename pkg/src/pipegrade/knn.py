"""K-nearest-neighbors classification over encoded rank vectors.

The classifier memorizes the training vectors and predicts the mode of
the K nearest labels. Distances are compared in squared form (ranks are
integers, so comparisons are exact); neighbor order is the stable sort
on (squared distance, training index). Label ties go to the class whose
nearest member is closest, then to the smaller rating; the "lowest"
policy skips straight to the smaller rating.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .encoding import FeatureVector

TIE_BREAKS = ("nearest", "lowest")


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.75
    seed: int = 0
    stratified: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


def split(vectors: Sequence[FeatureVector], spec: SplitSpec) -> tuple[list[FeatureVector], list[FeatureVector]]:
    """Deterministic shuffle split: ceil(fraction * n) train, rest validation."""
    n = len(vectors)
    if n < 4:
        raise ValueError(f"need at least 4 vectors to split, got {n}")
    n_train = math.ceil(spec.train_fraction * n)
    if n_train >= n:
        raise ValueError(
            f"train_fraction {spec.train_fraction} leaves no validation data for n={n}")
    rng = random.Random(spec.seed)
    if spec.stratified:
        by_label: dict[int, list[int]] = {}
        for i, v in enumerate(vectors):
            by_label.setdefault(v.label, []).append(i)
        # largest-remainder allocation keeps the overall train count exact
        quotas = {}
        for label, idxs in sorted(by_label.items()):
            rng.shuffle(idxs)
            quotas[label] = spec.train_fraction * len(idxs)
        base = {lab: int(q) for lab, q in quotas.items()}
        leftover = n_train - sum(base.values())
        order = sorted(quotas, key=lambda lab: (quotas[lab] - base[lab]), reverse=True)
        for lab in order[:leftover]:
            base[lab] += 1
        train_idx = []
        for lab, idxs in sorted(by_label.items()):
            train_idx.extend(idxs[: base[lab]])
        train_set = set(train_idx)
        train = [vectors[i] for i in sorted(train_set)]
        validation = [vectors[i] for i in range(n) if i not in train_set]
        return train, validation
    indices = list(range(n))
    rng.shuffle(indices)
    train = [vectors[i] for i in indices[:n_train]]
    validation = [vectors[i] for i in indices[n_train:]]
    return train, validation


def distance(x: Sequence[int], y: Sequence[int]) -> float:
    """Euclidean distance between two rank vectors of equal dimension."""
    if len(x) != len(y):
        raise ValueError(f"dimension mismatch: {len(x)} vs {len(y)}")
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(x, y)))


@dataclass
class KnnModel:
    """Memorized training set; distance comparisons use squared Euclidean."""

    train: tuple[FeatureVector, ...]
    k: int
    tie_break: str = "nearest"
    factor_names: tuple[str, ...] = ()
    _matrix: np.ndarray | None = field(default=None, repr=False, compare=False)
    _labels: tuple[int, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.train:
            raise ValueError("training set is empty")
        if not 1 <= self.k <= len(self.train):
            raise ValueError(f"k={self.k} outside 1..{len(self.train)}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}")
        dims = {len(v.ranks) for v in self.train}
        if len(dims) != 1:
            raise ValueError("training vectors have mixed dimensions")
        self._matrix = _as_matrix(self.train)
        self._labels = tuple(v.label for v in self.train)

    @property
    def dim(self) -> int:
        return len(self.train[0].ranks)


def fit(train: Sequence[FeatureVector], k: int, tie_break: str = "nearest",
        factor_names: Sequence[str] = ()) -> KnnModel:
    return KnnModel(tuple(train), k, tie_break, tuple(factor_names))


def _as_matrix(vectors: Sequence[FeatureVector]) -> np.ndarray:
    return np.ascontiguousarray([v.ranks for v in vectors], dtype=np.int64)


def _query_matrix(queries: Sequence[Sequence[int]], dim: int) -> np.ndarray:
    arr = np.ascontiguousarray(queries, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"query dimension mismatch: expected {dim}")
    return arr


def _vote(d2_row: Sequence[int], idx_row: Sequence[int], labels: Sequence[int],
          k: int, tie_break: str) -> int:
    votes = Counter(labels[idx_row[i]] for i in range(k))
    top = max(votes.values())
    tied = [lab for lab, c in votes.items() if c == top]
    if len(tied) == 1:
        return tied[0]
    if tie_break == "lowest":
        return min(tied)
    nearest = {}
    for i in range(k):
        lab = labels[idx_row[i]]
        if lab in tied and lab not in nearest:
            nearest[lab] = d2_row[i]
    return min(tied, key=lambda lab: (nearest[lab], lab))


def _self_indices(model: KnnModel, eval_set: Sequence[FeatureVector]) -> list[int]:
    """Training index of each eval vector, matched by identity then equality."""
    pos_by_id = {id(v): i for i, v in enumerate(model.train)}
    out = []
    for v in eval_set:
        i = pos_by_id.get(id(v))
        if i is None:
            try:
                i = model.train.index(v)
            except ValueError:
                raise ValueError(
                    f"exclude_self requires eval vectors from the training set; "
                    f"{v.pipe_id!r} is not in it"
                ) from None
        out.append(i)
    return out


def predict(model: KnnModel, query: Sequence[int] | FeatureVector,
            exclude_self: bool = False) -> int:
    """Predicted rating for one query vector.

    exclude_self drops the query's own stored copy from the candidate
    pool (matched by identity within the training tuple), for
    leave-one-out scoring of training points.
    """
    if exclude_self:
        if not isinstance(query, FeatureVector):
            raise ValueError("exclude_self needs a FeatureVector from the training set")
        skip = _self_indices(model, [query])[0]
    else:
        skip = -1
    ranks = query.ranks if isinstance(query, FeatureVector) else tuple(query)
    available = len(model.train) - (1 if skip >= 0 else 0)
    if model.k > available:
        raise ValueError(f"k={model.k} exceeds available neighbors ({available})")
    q = _query_matrix([ranks], model.dim)
    exclude = np.asarray([skip], dtype=np.int64)
    d2, idx = _kernels.get_active().neighbors(model._matrix, q, model.k, exclude)
    return _vote(d2[0], idx[0], model._labels, model.k, model.tie_break)


def predict_batch(model: KnnModel, queries: Sequence[Sequence[int]],
                  exclude_indices: Sequence[int] | None = None) -> list[int]:
    if len(queries) == 0:
        return []
    q = _query_matrix([tuple(q) for q in queries], model.dim)
    if exclude_indices is None:
        exclude = np.full(len(queries), -1, dtype=np.int64)
    else:
        exclude = np.asarray(exclude_indices, dtype=np.int64)
    available = len(model.train) - (1 if exclude.max() >= 0 else 0)
    if model.k > available:
        raise ValueError(f"k={model.k} exceeds available neighbors ({available})")
    d2, idx = _kernels.get_active().neighbors(model._matrix, q, model.k, exclude)
    return [_vote(d2[i], idx[i], model._labels, model.k, model.tie_break)
            for i in range(len(queries))]


def misclassification(model: KnnModel, eval_set: Sequence[FeatureVector],
                      exclude_self: bool = False) -> float:
    """Fraction of eval vectors whose predicted rating differs from the label."""
    if not eval_set:
        raise ValueError("evaluation set is empty")
    excludes = _self_indices(model, eval_set) if exclude_self else None
    preds = predict_batch(model, [v.ranks for v in eval_set], excludes)
    wrong = sum(1 for p, v in zip(preds, eval_set) if p != v.label)
    return wrong / len(eval_set)


@dataclass(frozen=True)
class SweepRow:
    k: int
    train_count: int
    train_misclassification: float
    validation_count: int
    validation_misclassification: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    @property
    def best_k(self) -> int:
        """Smallest K attaining the lowest validation misclassification."""
        best = min(self.rows, key=lambda r: (r.validation_misclassification, r.k))
        return best.k

    def to_dict(self) -> dict:
        return {
            "best_k": self.best_k,
            "rows": [
                {
                    "k": r.k,
                    "train_count": r.train_count,
                    "train_misclassification": r.train_misclassification,
                    "validation_count": r.validation_count,
                    "validation_misclassification": r.validation_misclassification,
                }
                for r in self.rows
            ],
        }


def sweep_k(train: Sequence[FeatureVector], validation: Sequence[FeatureVector],
            k_max: int, tie_break: str = "nearest") -> SweepResult:
    """Misclassification rates for K = 1..k_max.

    Training rates are leave-one-out (each training point's own copy is
    excluded); validation rates use the full training set. The neighbor
    scan runs once at k_max and each K votes on a prefix.
    """
    if not train or not validation:
        raise ValueError("need non-empty train and validation sets")
    if not 1 <= k_max <= len(train) - 1:
        raise ValueError(f"k range 1..{k_max} exceeds training size {len(train)} "
                         f"after self-exclusion")
    base = fit(train, k=1, tie_break=tie_break)
    labels = base._labels
    backend = _kernels.get_active()

    train_q = _as_matrix(train)
    train_excl = np.arange(len(train), dtype=np.int64)
    td2, tidx = backend.neighbors(base._matrix, train_q, k_max, train_excl)

    val_q = _as_matrix(validation)
    val_excl = np.full(len(validation), -1, dtype=np.int64)
    vd2, vidx = backend.neighbors(base._matrix, val_q, k_max, val_excl)

    val_labels = [v.label for v in validation]
    rows = []
    for k in range(1, k_max + 1):
        t_wrong = sum(
            1 for i, v in enumerate(train)
            if _vote(td2[i], tidx[i], labels, k, tie_break) != v.label
        )
        v_wrong = sum(
            1 for i in range(len(validation))
            if _vote(vd2[i], vidx[i], labels, k, tie_break) != val_labels[i]
        )
        rows.append(SweepRow(k, len(train), t_wrong / len(train),
                             len(validation), v_wrong / len(validation)))
    return SweepResult(tuple(rows))


# ---------------------------------------------------------------------------
# Persistence

MODEL_FORMAT = "pipegrade-knn-1"


def save_model(model: KnnModel, path: str | Path) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "k": model.k,
        "tie_break": model.tie_break,
        "factor_names": list(model.factor_names),
        "train": [
            {"pipe_id": v.pipe_id, "ranks": list(v.ranks), "label": v.label}
            for v in model.train
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> KnnModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} document")
    train = tuple(
        FeatureVector(e["pipe_id"], tuple(int(r) for r in e["ranks"]), int(e["label"]))
        for e in doc["train"]
    )
    return KnnModel(train, int(doc["k"]), doc.get("tie_break", "nearest"),
                    tuple(doc.get("factor_names", ())))
