"""Ordinal rank encoding of raw factor values.

A FactorSchema maps each of the 12 condition factors to a 1-5 rank:
numeric factors through contiguous bands, string factors through a
category table, and the two inspection scores pass through unchanged.
The default schema ships as a JSON data file so a utility can re-band
without touching code.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:
    from .ingest import PipeRecord

logger = logging.getLogger(__name__)

GROUPS = ("PC", "EC", "HC")
KINDS = ("numeric_banded", "categorical", "pass_through")
UNKNOWN_POLICIES = ("strict", "map_to_worst")

WORST_RANK = 5


class SchemaError(ValueError):
    pass


class EncodingError(ValueError):
    """Raised when a value matches no band or category under a strict policy.

    failures holds (pipe_id, factor, value) triples for every offender.
    """

    def __init__(self, failures: list[tuple[str, str, object]]):
        self.failures = failures
        listing = "; ".join(f"{pid}: {factor}={value!r}" for pid, factor, value in failures[:25])
        extra = "" if len(failures) <= 25 else f" (and {len(failures) - 25} more)"
        super().__init__(f"{len(failures)} value(s) match no rank: {listing}{extra}")


def normalize_category(value: str) -> str:
    """Fold case, hyphens, and whitespace so inspector free text matches."""
    return " ".join(value.replace("-", " ").split()).lower()


@dataclass(frozen=True)
class FactorDef:
    name: str
    group: str  # PC | EC | HC
    kind: str
    # numeric_banded: breaks partition the line into len(breaks)+1 bands.
    # right_closed=False: bands are (-inf,b1), [b1,b2), ..., [bk,inf)
    # right_closed=True:  bands are (-inf,b1], (b1,b2], ..., (bk,inf)
    breaks: tuple[float, ...] = ()
    band_ranks: tuple[int, ...] = ()
    right_closed: bool = False
    # categorical: normalized category -> rank
    categories: dict[str, int] | None = None
    unknown_policy: str = "strict"

    def validate(self) -> None:
        if self.group not in GROUPS:
            raise SchemaError(f"{self.name}: unknown group {self.group!r}")
        if self.kind not in KINDS:
            raise SchemaError(f"{self.name}: unknown kind {self.kind!r}")
        if self.unknown_policy not in UNKNOWN_POLICIES:
            raise SchemaError(f"{self.name}: unknown policy {self.unknown_policy!r}")
        if self.kind == "numeric_banded":
            if len(self.band_ranks) != len(self.breaks) + 1:
                raise SchemaError(f"{self.name}: need one rank per band")
            if any(b2 <= b1 for b1, b2 in zip(self.breaks, self.breaks[1:])):
                raise SchemaError(f"{self.name}: breaks must be strictly increasing")
            if sorted(self.band_ranks) != [1, 2, 3, 4, 5]:
                raise SchemaError(f"{self.name}: band ranks must be a permutation of 1..5")
        elif self.kind == "categorical":
            if not self.categories:
                raise SchemaError(f"{self.name}: categorical factor needs categories")
            if any(r not in (1, 2, 3, 4, 5) for r in self.categories.values()):
                raise SchemaError(f"{self.name}: category ranks must be in 1..5")

    def rank_of(self, value: object) -> int | None:
        """Rank for a raw value, or None when nothing matches."""
        if self.kind == "pass_through":
            iv = int(value)  # type: ignore[arg-type]
            return iv if iv in (1, 2, 3, 4, 5) else None
        if self.kind == "numeric_banded":
            v = float(value)  # type: ignore[arg-type]
            for i, b in enumerate(self.breaks):
                if (v <= b) if self.right_closed else (v < b):
                    return self.band_ranks[i]
            return self.band_ranks[-1]
        key = normalize_category(str(value))
        assert self.categories is not None
        rank = self.categories.get(key)
        if rank is None and self.unknown_policy == "map_to_worst":
            return WORST_RANK
        return rank


@dataclass(frozen=True)
class FactorSchema:
    factors: tuple[FactorDef, ...]

    def validate(self) -> None:
        for f in self.factors:
            f.validate()
        names = [f.name for f in self.factors]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate factor names")
        counts = {g: sum(1 for f in self.factors if f.group == g) for g in GROUPS}
        if len(self.factors) != 12 or counts != {"PC": 4, "EC": 5, "HC": 3}:
            raise SchemaError(
                f"schema must define 12 factors grouped 4 PC + 5 EC + 3 HC, got {counts}"
            )

    @property
    def factor_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    def factor(self, name: str) -> FactorDef:
        for f in self.factors:
            if f.name == name:
                return f
        raise SchemaError(f"unknown factor {name!r}")


@dataclass(frozen=True)
class FeatureVector:
    pipe_id: str
    ranks: tuple[int, ...]
    label: int


@dataclass(frozen=True)
class EncodedDataset:
    """Feature vectors plus the factor order their ranks follow."""

    factor_names: tuple[str, ...]
    vectors: tuple[FeatureVector, ...]

    def __len__(self) -> int:
        return len(self.vectors)

    def column(self, factor: str) -> list[int]:
        j = self.factor_names.index(factor)
        return [v.ranks[j] for v in self.vectors]


# Field of PipeRecord holding each factor's raw value.
FACTOR_FIELDS = {
    "age": "pipe_age_years",
    "material": "material",
    "diameter": "diameter_inches",
    "shape": "shape",
    "depth": "depth_category",
    "soil_type": "soil_type",
    "loading": "loading",
    "waste_type": "waste_type",
    "seismic_zone": "seismic_zone",
    "structural_score": "structural_score",
    "om_score": "om_score",
    "repair_history": "repair_history",
}


def encode(record: "PipeRecord", schema: FactorSchema) -> FeatureVector:
    """Map one cleaned record to its rank vector; strict factors raise."""
    vec, failures = _encode_one(record, schema)
    if failures:
        raise EncodingError(failures)
    assert vec is not None
    return vec


def _encode_one(record: "PipeRecord", schema: FactorSchema):
    ranks = []
    failures: list[tuple[str, str, object]] = []
    for f in schema.factors:
        raw = getattr(record, FACTOR_FIELDS[f.name])
        if raw is None:
            failures.append((record.pipe_id, f.name, None))
            continue
        try:
            rank = f.rank_of(raw)
        except (TypeError, ValueError):
            rank = None
        if rank is None:
            failures.append((record.pipe_id, f.name, raw))
            continue
        if (f.kind == "categorical" and f.unknown_policy == "map_to_worst"
                and normalize_category(str(raw)) not in f.categories):
            logger.warning("pipe %s: %s=%r matches no listed category; using worst rank %d",
                           record.pipe_id, f.name, raw, WORST_RANK)
        ranks.append(rank)
    if failures:
        return None, failures
    return FeatureVector(record.pipe_id, tuple(ranks), record.comprehensive_rating), []


def encode_dataset(records: Sequence["PipeRecord"], schema: FactorSchema) -> EncodedDataset:
    """Encode every record; raises one EncodingError listing all offenders."""
    vectors = []
    failures: list[tuple[str, str, object]] = []
    for rec in records:
        vec, fails = _encode_one(rec, schema)
        if fails:
            failures.extend(fails)
        else:
            vectors.append(vec)
    if failures:
        raise EncodingError(failures)
    return EncodedDataset(schema.factor_names, tuple(vectors))


def project(dataset: EncodedDataset, keep: Iterable[str]) -> EncodedDataset:
    """Restrict vectors to the kept factors, preserving factor and row order."""
    keep_set = set(keep)
    if not keep_set:
        raise ValueError("empty projection: keep at least one factor")
    unknown = keep_set - set(dataset.factor_names)
    if unknown:
        raise ValueError(f"unknown factor name(s) in keep: {sorted(unknown)}")
    idx = [j for j, name in enumerate(dataset.factor_names) if name in keep_set]
    names = tuple(dataset.factor_names[j] for j in idx)
    vectors = tuple(
        FeatureVector(v.pipe_id, tuple(v.ranks[j] for j in idx), v.label)
        for v in dataset.vectors
    )
    return EncodedDataset(names, vectors)


# ---------------------------------------------------------------------------
# Schema file handling

def schema_from_dict(data: dict) -> FactorSchema:
    factors = []
    for fd in data.get("factors", []):
        try:
            kind = fd["kind"]
            factor = FactorDef(
                name=fd["name"],
                group=fd["group"],
                kind=kind,
                breaks=tuple(fd.get("breaks", ())),
                band_ranks=tuple(fd.get("band_ranks", ())),
                right_closed=bool(fd.get("right_closed", False)),
                categories=(
                    {normalize_category(k): int(v) for k, v in fd["categories"].items()}
                    if kind == "categorical" else None
                ),
                unknown_policy=fd.get("unknown_policy", "strict"),
            )
        except KeyError as exc:
            raise SchemaError(f"factor entry missing key {exc}") from exc
        factors.append(factor)
    schema = FactorSchema(tuple(factors))
    schema.validate()
    return schema


def load_schema(path: str | Path) -> FactorSchema:
    with open(path, encoding="utf-8") as fh:
        return schema_from_dict(json.load(fh))


@lru_cache(maxsize=1)
def default_schema() -> FactorSchema:
    data = resources.files("pipegrade.data").joinpath("default_schema.json").read_text("utf-8")
    return schema_from_dict(json.loads(data))
