"""Categorical Naive Bayes over rank vectors, the comparison baseline.

Features are 1-5 ordinals, so the conditionals are per-factor categorical
tables with additive smoothing over the five rank values; priors get the
same smoothing over the five classes. Prediction is the log-posterior
argmax with ties going to the smaller rating.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .encoding import FeatureVector

CLASSES = (1, 2, 3, 4, 5)
RANK_VALUES = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class NbModel:
    priors: tuple[float, ...]  # index c-1
    # conditionals[factor][class-1][value-1] = P(value | factor, class)
    conditionals: tuple[tuple[tuple[float, ...], ...], ...]
    smoothing: float
    factor_names: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return len(self.conditionals)


def nb_fit(train: Sequence[FeatureVector], smoothing: float = 1.0,
           factor_names: Sequence[str] = ()) -> NbModel:
    if not train:
        raise ValueError("training set is empty")
    if smoothing <= 0:
        raise ValueError(f"smoothing must be positive, got {smoothing}")
    dims = {len(v.ranks) for v in train}
    if len(dims) != 1:
        raise ValueError("training vectors have mixed dimensions")
    d = dims.pop()
    n = len(train)

    class_counts = [0] * 5
    value_counts = [[[0] * 5 for _ in CLASSES] for _ in range(d)]
    for v in train:
        c = v.label - 1
        class_counts[c] += 1
        for j, r in enumerate(v.ranks):
            value_counts[j][c][r - 1] += 1

    priors = tuple((class_counts[c] + smoothing) / (n + 5 * smoothing) for c in range(5))
    conditionals = tuple(
        tuple(
            tuple(
                (value_counts[j][c][r] + smoothing) / (class_counts[c] + 5 * smoothing)
                for r in range(5)
            )
            for c in range(5)
        )
        for j in range(d)
    )
    return NbModel(priors, conditionals, smoothing, tuple(factor_names))


def nb_log_posteriors(model: NbModel, query: Sequence[int]) -> list[float]:
    """Unnormalized log posterior per class for one rank vector."""
    if len(query) != model.dim:
        raise ValueError(f"query dimension mismatch: expected {model.dim}, got {len(query)}")
    out = []
    for c in range(5):
        total = math.log(model.priors[c])
        for j, r in enumerate(query):
            if r not in RANK_VALUES:
                raise ValueError(f"rank out of range 1-5: {r!r}")
            total += math.log(model.conditionals[j][c][r - 1])
        out.append(total)
    return out


def nb_posteriors(model: NbModel, query: Sequence[int]) -> list[float]:
    """Normalized class posteriors, computed in log space."""
    logs = nb_log_posteriors(model, query)
    peak = max(logs)
    weights = [math.exp(v - peak) for v in logs]
    z = sum(weights)
    return [w / z for w in weights]


def nb_predict(model: NbModel, query: Sequence[int]) -> int:
    logs = nb_log_posteriors(model, query)
    best = max(logs)
    return min(c for c, v in zip(CLASSES, logs) if v == best)


# ---------------------------------------------------------------------------
# Persistence, same document family as the KNN model

MODEL_FORMAT = "pipegrade-nb-1"


def save_model(model: NbModel, path: str | Path) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "smoothing": model.smoothing,
        "factor_names": list(model.factor_names),
        "priors": list(model.priors),
        "conditionals": [[list(row) for row in per_class] for per_class in model.conditionals],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> NbModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} document")
    return NbModel(
        priors=tuple(doc["priors"]),
        conditionals=tuple(tuple(tuple(row) for row in per_class)
                           for per_class in doc["conditionals"]),
        smoothing=float(doc["smoothing"]),
        factor_names=tuple(doc.get("factor_names", ())),
    )
