"""Deterministic synthetic pipe-record generator.

Every pipeline stage is testable at desk scale without the survey data
this toolkit was shaped on: records draw raw attribute values from the
default schema's domains, labels come from a planted rule over the
encoded ranks, and label noise plus missing/inconsistent defects are
injected by exact count so tests can assert figures instead of
probabilities.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Mapping

from .encoding import FactorSchema, default_schema
from .ingest import DEPTH_LABELS, PipeRecord

RATINGS = (1, 2, 3, 4, 5)


class GenSpecError(ValueError):
    pass


@dataclass(frozen=True)
class DistSpec:
    """Per-factor value distribution.

    kind "constant": every record gets ``value`` (raw, e.g. 8 or "Zone 2").
    kind "categorical": rank drawn from ``weights`` (rank -> probability).
    kind "class": rank equals the record's planted class, which makes the
    factor a perfect class marker (separable data).
    """

    kind: str
    value: object = None
    weights: Mapping[int, float] | None = None

    def validate(self, name: str) -> None:
        if self.kind not in ("constant", "categorical", "class"):
            raise GenSpecError(f"{name}: unknown distribution kind {self.kind!r}")
        if self.kind == "constant" and self.value is None:
            raise GenSpecError(f"{name}: constant distribution needs a value")
        if self.kind == "categorical":
            if not self.weights:
                raise GenSpecError(f"{name}: categorical distribution needs weights")
            if any(r not in RATINGS for r in self.weights):
                raise GenSpecError(f"{name}: weight keys must be ranks 1..5")
            if abs(sum(self.weights.values()) - 1.0) > 1e-9:
                raise GenSpecError(f"{name}: weights must sum to 1")


BELL_WEIGHTS = {1: 0.10, 2: 0.20, 3: 0.40, 4: 0.20, 5: 0.10}


def default_distributions() -> dict[str, DistSpec]:
    """Survey-shaped defaults: one pipe stock (constant diameter and zone),
    class-marking inspection scores, bell-shaped everything else. The
    seismic zone constant is an arbitrary choice, not a claim about any
    particular system."""
    dists = {
        "age": DistSpec("categorical", weights=BELL_WEIGHTS),
        "material": DistSpec("constant", value="Vitrified Clay Pipe"),
        "diameter": DistSpec("constant", value=8),
        "shape": DistSpec("categorical", weights=BELL_WEIGHTS),
        "depth": DistSpec("categorical", weights=BELL_WEIGHTS),
        "soil_type": DistSpec("categorical", weights=BELL_WEIGHTS),
        "loading": DistSpec("categorical", weights=BELL_WEIGHTS),
        "waste_type": DistSpec("categorical", weights=BELL_WEIGHTS),
        "seismic_zone": DistSpec("constant", value="Zone 2"),
        "structural_score": DistSpec("class"),
        "om_score": DistSpec("class"),
        "repair_history": DistSpec("class"),
    }
    return dists


def separable_distributions() -> dict[str, DistSpec]:
    """Every non-constant factor marks the class exactly; with zero noise
    the classes are disjoint points in rank space."""
    dists = default_distributions()
    for name in ("age", "shape", "depth", "soil_type", "loading", "waste_type"):
        dists[name] = DistSpec("class")
    return dists


@dataclass(frozen=True)
class PlantedRule:
    """clamp(round(sum of weight * rank)) over named factors."""

    weights: Mapping[str, float]

    def label(self, ranks: Mapping[str, int]) -> int:
        total = sum(w * ranks[name] for name, w in self.weights.items())
        return min(max(round(total), 1), 5)


DEFAULT_RULE = PlantedRule({"structural_score": 0.4, "om_score": 0.4, "repair_history": 0.2})


@dataclass(frozen=True)
class GenSpec:
    n: int
    seed: int = 0
    class_distribution: Mapping[int, float] = dc_field(
        default_factory=lambda: {r: 0.2 for r in RATINGS})
    rule: PlantedRule = DEFAULT_RULE
    noise_rate: float = 0.0
    distributions: Mapping[str, DistSpec] = dc_field(default_factory=default_distributions)
    missing_rate: float = 0.0
    inconsistent_rate: float = 0.0

    def validate(self, schema: FactorSchema) -> None:
        if self.n <= 0:
            raise GenSpecError(f"n must be positive, got {self.n}")
        if not 0.0 <= self.noise_rate < 1.0:
            raise GenSpecError(f"noise_rate must be in [0, 1), got {self.noise_rate}")
        for name, rate in (("missing_rate", self.missing_rate),
                           ("inconsistent_rate", self.inconsistent_rate)):
            if not 0.0 <= rate < 1.0:
                raise GenSpecError(f"{name} must be in [0, 1), got {rate}")
        if self.missing_rate + self.inconsistent_rate >= 1.0:
            raise GenSpecError("defect rates sum to 1 or more; nothing would remain")
        if set(self.class_distribution) - set(RATINGS):
            raise GenSpecError("class_distribution keys must be ratings 1..5")
        if abs(sum(self.class_distribution.values()) - 1.0) > 1e-9:
            raise GenSpecError("class_distribution must sum to 1")
        missing = set(schema.factor_names) - set(self.distributions)
        if missing:
            raise GenSpecError(f"no distribution for factor(s): {sorted(missing)}")
        for name, dist in self.distributions.items():
            dist.validate(name)
        unknown_rule = set(self.rule.weights) - set(schema.factor_names)
        if unknown_rule:
            raise GenSpecError(f"rule references unknown factor(s): {sorted(unknown_rule)}")


def _largest_remainder_counts(n: int, dist: Mapping[int, float]) -> dict[int, int]:
    quotas = {r: n * dist.get(r, 0.0) for r in RATINGS}
    counts = {r: int(q) for r, q in quotas.items()}
    leftover = n - sum(counts.values())
    order = sorted(RATINGS, key=lambda r: quotas[r] - counts[r], reverse=True)
    for r in order[:leftover]:
        counts[r] += 1
    return counts


# Raw materialization choices per factor and rank. Values stay inside the
# default schema's bands and category lists.
_AGE_SPANS = {1: (0, 9), 2: (10, 24), 3: (25, 39), 4: (40, 49), 5: (50, 79)}
_DIAMETER_CHOICES = {5: (6, 8, 10), 4: (12, 15, 18), 3: (21, 24, 30), 2: (36, 42, 48), 1: (54, 60, 72)}
_MATERIAL_CHOICES = {
    1: ("Vitrified Clay Pipe", "Polyvinyl Chloride", "Polyethylene", "Reinforced Plastic Pipe"),
    2: ("Cast Iron", "Ductile Iron Pipe"),
    3: ("Reinforced Concrete Pipe", "Concrete Segments"),
    4: ("Not Known",),
    5: ("Other",),
}
_SHAPES = {1: "Circular", 2: "Oval", 3: "Horseshoe", 4: "Semielliptical", 5: "Arch"}
_SOILS = {1: "Low corrosivity", 2: "Low to moderate corrosivity", 3: "Moderate corrosivity",
          4: "Moderate to high corrosivity", 5: "High corrosivity"}
_LOADINGS = {1: "No traffic to very light traffic", 2: "Light traffic", 3: "Medium traffic",
             4: "Moderate to heavy traffic", 5: "Heavy traffic"}
_WASTES = {1: "Mildly corrosive", 2: "Mildly to moderate corrosive", 3: "Moderately corrosive",
           4: "Moderately to highly corrosive", 5: "Highly corrosive"}
_ZONES = {1: "Zone 1", 2: "Zone 2", 3: "Zone 3", 4: "Zone 4", 5: "Zone 5"}
_REPAIRS = {1: "No maintenance", 2: "Minor maintenance", 3: "Moderate maintenance",
            4: "Significant maintenance", 5: "Extreme maintenance"}


def _materialize(factor: str, rank: int, rng: random.Random) -> object:
    if factor == "age":
        lo, hi = _AGE_SPANS[rank]
        return rng.randint(lo, hi)
    if factor == "diameter":
        return rng.choice(_DIAMETER_CHOICES[rank])
    if factor == "material":
        return rng.choice(_MATERIAL_CHOICES[rank])
    if factor == "shape":
        return _SHAPES[rank]
    if factor == "depth":
        return DEPTH_LABELS[rank - 1]
    if factor == "soil_type":
        return _SOILS[rank]
    if factor == "loading":
        return _LOADINGS[rank]
    if factor == "waste_type":
        return _WASTES[rank]
    if factor == "seismic_zone":
        return _ZONES[rank]
    if factor in ("structural_score", "om_score"):
        return rank
    if factor == "repair_history":
        return _REPAIRS[rank]
    raise GenSpecError(f"no materializer for factor {factor!r}")


_FACTOR_TO_FIELD = {
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

# Fields blanked, in rotation, for missing-defect injection.
_MISSING_TARGETS = ("structural_score", "material", "depth_category", "om_score")
# (field, bad value) rotations for inconsistent-defect injection; all
# violate the default range rules.
_INCONSISTENT_TARGETS = (("total_length_feet", 0.0), ("pipe_age_years", -4.0),
                         ("diameter_inches", 0.0))


def generate(spec: GenSpec, schema: FactorSchema | None = None) -> list[PipeRecord]:
    """Build n records, deterministic in the seed.

    Class counts follow the class distribution by largest remainder;
    ranks follow the per-factor distributions ("class" factors mark the
    planted class, which the default rule then reproduces as the label);
    exactly round(rate * n) labels get flipped and exactly round(rate * n)
    records get each defect kind.
    """
    schema = schema or default_schema()
    spec.validate(schema)
    rng = random.Random(spec.seed)

    counts = _largest_remainder_counts(spec.n, spec.class_distribution)
    classes = [r for r in RATINGS for _ in range(counts[r])]
    rng.shuffle(classes)

    rows: list[dict] = []
    for i, cls in enumerate(classes):
        ranks: dict[str, int] = {}
        fields: dict[str, object] = {"pipe_id": f"P{i + 1:05d}"}
        for fdef in schema.factors:
            dist = spec.distributions[fdef.name]
            if dist.kind == "class":
                rank = cls
                raw = _materialize(fdef.name, rank, rng)
            elif dist.kind == "constant":
                raw = dist.value
                derived = fdef.rank_of(raw)
                if derived is None:
                    raise GenSpecError(
                        f"{fdef.name}: constant {raw!r} matches no rank in the schema")
                rank = derived
            else:
                assert dist.weights is not None
                choices = sorted(dist.weights)
                rank = rng.choices(choices, weights=[dist.weights[r] for r in choices])[0]
                raw = _materialize(fdef.name, rank, rng)
            ranks[fdef.name] = rank
            fields[_FACTOR_TO_FIELD[fdef.name]] = raw
        fields["total_length_feet"] = float(rng.randint(50, 500))
        fields["comprehensive_rating"] = spec.rule.label(ranks)
        rows.append(fields)

    n_flip = round(spec.noise_rate * spec.n)
    if n_flip:
        for i in sorted(rng.sample(range(spec.n), n_flip)):
            current = rows[i]["comprehensive_rating"]
            rows[i]["comprehensive_rating"] = rng.choice(
                [r for r in RATINGS if r != current])

    n_missing = round(spec.missing_rate * spec.n)
    n_inconsistent = round(spec.inconsistent_rate * spec.n)
    if n_missing + n_inconsistent:
        defect_idx = rng.sample(range(spec.n), n_missing + n_inconsistent)
        for slot, i in enumerate(defect_idx[:n_missing]):
            rows[i][_MISSING_TARGETS[slot % len(_MISSING_TARGETS)]] = None
        for slot, i in enumerate(defect_idx[n_missing:]):
            name, bad = _INCONSISTENT_TARGETS[slot % len(_INCONSISTENT_TARGETS)]
            rows[i][name] = bad

    return [PipeRecord(**row) for row in rows]  # type: ignore[arg-type]


# ---------------------------------------------------------------------------
# Spec file handling (same JSON family as the schema file)

def spec_from_dict(data: dict) -> GenSpec:
    dists = dict(default_distributions())
    if data.get("separable"):
        dists = separable_distributions()
    for name, entry in data.get("distributions", {}).items():
        dists[name] = DistSpec(
            kind=entry["kind"],
            value=entry.get("value"),
            weights={int(k): float(v) for k, v in entry["weights"].items()}
            if entry.get("weights") else None,
        )
    rule = DEFAULT_RULE
    if "rule_weights" in data:
        rule = PlantedRule({str(k): float(v) for k, v in data["rule_weights"].items()})
    class_dist = {r: 0.2 for r in RATINGS}
    if "class_distribution" in data:
        class_dist = {int(k): float(v) for k, v in data["class_distribution"].items()}
    return GenSpec(
        n=int(data["n"]),
        seed=int(data.get("seed", 0)),
        class_distribution=class_dist,
        rule=rule,
        noise_rate=float(data.get("noise_rate", 0.0)),
        distributions=dists,
        missing_rate=float(data.get("missing_rate", 0.0)),
        inconsistent_rate=float(data.get("inconsistent_rate", 0.0)),
    )


def load_spec(path: str | Path) -> GenSpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))
