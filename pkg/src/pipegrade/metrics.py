"""Confusion matrices and multiclass scores for 1-5 condition ratings.

Matrix orientation everywhere in this module: rows are the predicted
rating, columns are the actual rating. Every rendered table repeats this
so a transposed import is caught by eye.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

RATINGS = (1, 2, 3, 4, 5)

ORIENTATION_NOTE = "rows = predicted rating, columns = actual rating"


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """5x5 count grid, counts[predicted-1][actual-1]."""

    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.counts) != 5 or any(len(row) != 5 for row in self.counts):
            raise MetricsError("confusion matrix must be 5x5")
        for row in self.counts:
            for c in row:
                if not isinstance(c, int) or c < 0:
                    raise MetricsError(f"counts must be non-negative integers, got {c!r}")

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    @property
    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(5))

    def row_sum(self, rating: int) -> int:
        return sum(self.counts[rating - 1])

    def col_sum(self, rating: int) -> int:
        return sum(self.counts[p][rating - 1] for p in range(5))


def confusion(predictions: Sequence[int], actuals: Sequence[int]) -> ConfusionMatrix:
    """Tally (predicted, actual) rating pairs into a ConfusionMatrix."""
    if len(predictions) != len(actuals):
        raise MetricsError(
            f"length mismatch: {len(predictions)} predictions vs {len(actuals)} actuals"
        )
    if not predictions:
        raise MetricsError("empty evaluation")
    grid = [[0] * 5 for _ in range(5)]
    for p, a in zip(predictions, actuals):
        if p not in RATINGS or a not in RATINGS:
            raise MetricsError(f"rating out of range 1-5: predicted={p!r} actual={a!r}")
        grid[p - 1][a - 1] += 1
    return ConfusionMatrix(tuple(tuple(row) for row in grid))


def overall_accuracy(m: ConfusionMatrix) -> float:
    """Fraction of correctly predicted records: trace / total."""
    total = m.total
    if total == 0:
        raise MetricsError("zero total: matrix has no counts")
    return m.trace / total


@dataclass(frozen=True)
class ClassScores:
    rating: int
    tp: int
    fp: int
    fn: int
    tn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    # names of scores whose denominator was zero and were reported as 0
    undefined: frozenset[str] = field(default_factory=frozenset)


def class_scores(m: ConfusionMatrix, rating: int) -> ClassScores:
    """One-vs-rest scores for one rating.

    TP is the diagonal cell; FP the rest of its row (rows are predicted);
    FN the rest of its column; TN the remainder. Zero-denominator
    precision/recall/F1 come back as 0.0 with the score name flagged in
    ``undefined``.
    """
    if rating not in RATINGS:
        raise MetricsError(f"rating out of range 1-5: {rating!r}")
    total = m.total
    if total == 0:
        raise MetricsError("zero total: matrix has no counts")
    tp = m.counts[rating - 1][rating - 1]
    fp = m.row_sum(rating) - tp
    fn = m.col_sum(rating) - tp
    tn = total - tp - fp - fn

    undefined = set()
    accuracy = (tp + tn) / total
    precision = recall = f1 = 0.0
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        undefined.add("precision")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        undefined.add("recall")
    if 2 * tp + fp + fn > 0:
        f1 = 2 * tp / (2 * tp + fp + fn)
    else:
        undefined.add("f1")
    return ClassScores(rating, tp, fp, fn, tn, accuracy, precision, recall, f1,
                       frozenset(undefined))


def all_class_scores(m: ConfusionMatrix) -> list[ClassScores]:
    return [class_scores(m, r) for r in RATINGS]


# ---------------------------------------------------------------------------
# CSV interchange

CSV_HEADER = ["predicted_rating", "actual_1", "actual_2", "actual_3", "actual_4", "actual_5"]


def matrix_to_csv(m: ConfusionMatrix, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in RATINGS:
            writer.writerow([r, *m.counts[r - 1]])


def matrix_from_csv(path: str | Path) -> ConfusionMatrix:
    """Read a 5x5 grid with a header row and a predicted-rating label column."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise MetricsError(f"{path}: empty matrix file")
    body = rows[1:]
    if len(body) != 5:
        raise MetricsError(f"{path}: expected 5 data rows, found {len(body)}")
    grid = []
    for expected, row in zip(RATINGS, body):
        if len(row) != 6:
            raise MetricsError(f"{path}: expected 6 columns, found {len(row)}")
        try:
            label = int(row[0])
            counts = [int(c) for c in row[1:]]
        except ValueError as exc:
            raise MetricsError(f"{path}: non-integer cell: {exc}") from exc
        if label != expected:
            raise MetricsError(f"{path}: row label {label} out of order, expected {expected}")
        if any(c < 0 for c in counts):
            raise MetricsError(f"{path}: negative count in row {label}")
        grid.append(tuple(counts))
    return ConfusionMatrix(tuple(grid))


# ---------------------------------------------------------------------------
# Comparison report

def report(matrices: Mapping[str, ConfusionMatrix] | Iterable[tuple[str, ConfusionMatrix]]) -> "ComparisonReport":
    items = list(matrices.items()) if isinstance(matrices, Mapping) else list(matrices)
    if not items:
        raise MetricsError("report needs at least one matrix")
    return ComparisonReport(tuple(items))


@dataclass(frozen=True)
class ComparisonReport:
    """Overall accuracy plus the per-rating score grid, one column per model."""

    matrices: tuple[tuple[str, ConfusionMatrix], ...]

    def to_dict(self) -> dict:
        out: dict = {"orientation": ORIENTATION_NOTE, "models": {}}
        for name, m in self.matrices:
            scores = all_class_scores(m)
            out["models"][name] = {
                "total": m.total,
                "correct": m.trace,
                "overall_accuracy": overall_accuracy(m),
                "per_class": {
                    str(s.rating): {
                        "accuracy": s.accuracy,
                        "precision": s.precision,
                        "recall": s.recall,
                        "f1": s.f1,
                        "undefined": sorted(s.undefined),
                    }
                    for s in scores
                },
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def render_text(self) -> str:
        names = [name for name, _ in self.matrices]
        lines = [f"Model comparison ({ORIENTATION_NOTE})", ""]
        width = max(12, *(len(n) for n in names)) + 2

        header = "overall accuracy".ljust(22) + "".join(n.rjust(width) for n in names)
        lines.append(header)
        row = "".ljust(22)
        for _, m in self.matrices:
            row += f"{overall_accuracy(m) * 100:.2f}%".rjust(width)
        lines.append(row)
        lines.append("")

        per_model = {name: all_class_scores(m) for name, m in self.matrices}
        for metric, fmt in (("accuracy", "pct"), ("precision", "frac"),
                            ("recall", "frac"), ("f1", "frac")):
            lines.append(metric.capitalize().ljust(22) + "".join(n.rjust(width) for n in names))
            for r in RATINGS:
                row = f"  rating {r}".ljust(22)
                for name in names:
                    s = per_model[name][r - 1]
                    v = getattr(s, metric)
                    cell = f"{v * 100:.2f}%" if fmt == "pct" else f"{v:.2f}"
                    if metric in s.undefined:
                        cell += "*"
                    row += cell.rjust(width)
                lines.append(row)
            lines.append("")
        lines.append("* denominator was zero; score reported as 0")
        return "\n".join(lines) + "\n"
