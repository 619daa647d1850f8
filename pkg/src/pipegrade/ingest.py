"""CSV ingestion and cleaning of pipe segment records.

load_records parses rows into PipeRecord objects and reports malformed
rows individually; clean drops records that are missing required factor
values or that fail the configured consistency rules, and accounts for
every input record in its report.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

DEPTH_LABELS = ("0-10 Feet", "10-15 Feet", "15-20 Feet", "20-25 Feet", ">25 Feet")
_DEPTH_BREAKS = (10.0, 15.0, 20.0, 25.0)

RATING_SET = frozenset({1, 2, 3, 4, 5})


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class PipeRecord:
    pipe_id: str
    pipe_age_years: Optional[float] = None
    material: Optional[str] = None
    diameter_inches: Optional[float] = None
    shape: Optional[str] = None
    depth_category: Optional[str] = None
    soil_type: Optional[str] = None
    loading: Optional[str] = None
    waste_type: Optional[str] = None
    seismic_zone: Optional[str] = None
    structural_score: Optional[int] = None
    om_score: Optional[int] = None
    repair_history: Optional[str] = None
    total_length_feet: Optional[float] = None  # metadata, not a model factor
    comprehensive_rating: int = 0


# Canonical field -> default CSV header. "depth" doubles as the header for
# depth_category since source files carry either a band label or feet.
DEFAULT_COLUMNS = {
    "pipe_id": "pipe_id",
    "pipe_age_years": "pipe_age_years",
    "material": "material",
    "diameter_inches": "diameter_inches",
    "shape": "shape",
    "depth_category": "depth",
    "soil_type": "soil_type",
    "loading": "loading",
    "waste_type": "waste_type",
    "seismic_zone": "seismic_zone",
    "structural_score": "structural_score",
    "om_score": "om_score",
    "repair_history": "repair_history",
    "total_length_feet": "total_length_feet",
    "comprehensive_rating": "comprehensive_rating",
}

REQUIRED_FACTOR_FIELDS = (
    "pipe_age_years",
    "material",
    "diameter_inches",
    "shape",
    "depth_category",
    "soil_type",
    "loading",
    "waste_type",
    "seismic_zone",
    "structural_score",
    "om_score",
    "repair_history",
)

_FLOAT_FIELDS = ("pipe_age_years", "diameter_inches", "total_length_feet")
_SCORE_FIELDS = ("structural_score", "om_score")
_STRING_FIELDS = ("material", "shape", "soil_type", "loading", "waste_type",
                  "seismic_zone", "repair_history")


def normalize_depth(raw: str) -> str:
    """Map feet or a band string onto the canonical depth label.

    Unrecognized text is returned unchanged so cleaning can flag it as
    inconsistent instead of ingest guessing.
    """
    text = raw.strip()
    for label in DEPTH_LABELS:
        if text.lower() == label.lower():
            return label
    candidate = text.lower().replace("feet", "").replace("ft", "").strip()
    if candidate.startswith(">"):
        try:
            feet = float(candidate[1:]) + 0.5
        except ValueError:
            return text
    elif "-" in candidate and not candidate.startswith("-"):
        try:
            feet = float(candidate.split("-", 1)[1])
        except ValueError:
            return text
    else:
        try:
            feet = float(candidate)
        except ValueError:
            return text
    for label, brk in zip(DEPTH_LABELS, _DEPTH_BREAKS):
        if feet <= brk:
            return label
    return DEPTH_LABELS[-1]


@dataclass(frozen=True)
class ParseDiagnostic:
    row: int  # 1-based data row number (header excluded)
    pipe_id: str
    message: str


def load_column_map(path: str | Path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        overrides = json.load(fh)
    unknown = set(overrides) - set(DEFAULT_COLUMNS)
    if unknown:
        raise IngestError(f"column map names unknown fields: {sorted(unknown)}")
    return {**DEFAULT_COLUMNS, **overrides}


def load_records(
    path: str | Path,
    columns: dict[str, str] | None = None,
) -> tuple[list[PipeRecord], list[ParseDiagnostic]]:
    """Parse a CSV file into records plus per-row diagnostics.

    Blank cells become None on the record (cleaning decides their fate);
    rows that cannot form a valid record at all (no pipe_id, unparseable
    numbers, label or score outside 1-5, duplicate pipe_id) are skipped
    and reported.
    """
    colmap = {**DEFAULT_COLUMNS, **(columns or {})}
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise IngestError(f"{path}: missing header row")
        missing_cols = [hdr for hdr in colmap.values() if hdr not in reader.fieldnames]
        if missing_cols:
            raise IngestError(f"{path}: missing required column(s): {missing_cols}")

        records: list[PipeRecord] = []
        diagnostics: list[ParseDiagnostic] = []
        seen_ids: set[str] = set()
        for rownum, row in enumerate(reader, start=1):
            cells = {f: (row.get(colmap[f]) or "").strip() for f in colmap}
            pipe_id = cells["pipe_id"]
            problems: list[str] = []
            if not pipe_id:
                problems.append("pipe_id is empty")

            values: dict[str, object] = {"pipe_id": pipe_id}
            for f in _FLOAT_FIELDS:
                values[f] = _parse_float(cells[f], f, problems)
            for f in _SCORE_FIELDS:
                values[f] = _parse_score(cells[f], f, problems)
            for f in _STRING_FIELDS:
                values[f] = cells[f] or None
            values["depth_category"] = normalize_depth(cells["depth_category"]) \
                if cells["depth_category"] else None

            label_text = cells["comprehensive_rating"]
            if not label_text:
                problems.append("comprehensive_rating is empty")
            else:
                try:
                    label = int(label_text)
                except ValueError:
                    problems.append(f"comprehensive_rating: cannot parse {label_text!r}")
                else:
                    if label not in RATING_SET:
                        problems.append("label out of range 1-5")
                    else:
                        values["comprehensive_rating"] = label

            if not problems and pipe_id in seen_ids:
                problems.append(f"duplicate pipe_id {pipe_id!r}; later occurrence dropped")

            if problems:
                diagnostics.append(ParseDiagnostic(rownum, pipe_id, "; ".join(problems)))
                continue
            seen_ids.add(pipe_id)
            records.append(PipeRecord(**values))  # type: ignore[arg-type]
    return records, diagnostics


def _parse_float(text: str, name: str, problems: list[str]) -> float | None:
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        problems.append(f"{name}: cannot parse {text!r} as a number")
        return None
    if not math.isfinite(value):
        problems.append(f"{name}: non-finite value {text!r}")
        return None
    return value


def _parse_score(text: str, name: str, problems: list[str]) -> int | None:
    if not text:
        return None
    try:
        score = int(text)
    except ValueError:
        problems.append(f"{name}: cannot parse {text!r} as an integer")
        return None
    if score not in RATING_SET:
        problems.append(f"{name}: {score} out of range 1-5")
        return None
    return score


# ---------------------------------------------------------------------------
# Cleaning

@dataclass(frozen=True)
class RangeRule:
    field: str
    minimum: float | None = None
    maximum: float | None = None
    exclusive_min: bool = False

    def violates(self, record: PipeRecord) -> str | None:
        value = getattr(record, self.field)
        if value is None:
            return None  # missing handling owns absent values
        if self.minimum is not None:
            if value < self.minimum or (self.exclusive_min and value == self.minimum):
                return f"{self.field}={value} below {self.minimum}"
        if self.maximum is not None and value > self.maximum:
            return f"{self.field}={value} above {self.maximum}"
        return None


@dataclass(frozen=True)
class DomainRule:
    field: str
    allowed: tuple[str, ...]

    def violates(self, record: PipeRecord) -> str | None:
        from .encoding import normalize_category

        value = getattr(record, self.field)
        if value is None:
            return None
        options = {normalize_category(a) for a in self.allowed}
        if normalize_category(str(value)) not in options:
            return f"{self.field}={value!r} not in the known set"
        return None


_DEFAULT_RANGE_RULES = (
    RangeRule("pipe_age_years", minimum=0),
    RangeRule("diameter_inches", minimum=0, exclusive_min=True),
    RangeRule("total_length_feet", minimum=0, exclusive_min=True),
)


def _schema_domain_rules() -> tuple[DomainRule, ...]:
    from .encoding import FACTOR_FIELDS, default_schema

    return tuple(
        DomainRule(FACTOR_FIELDS[f.name], tuple(f.categories))
        for f in default_schema().factors
        if f.kind == "categorical" and f.unknown_policy == "strict"
    )


@dataclass(frozen=True)
class CleaningRules:
    """Declarative validation config.

    The defaults mirror the shipped schema: every strict categorical
    factor gets a domain rule over its category table, so a record that
    survives cleaning is guaranteed to encode.
    """

    required: tuple[str, ...] = REQUIRED_FACTOR_FIELDS
    range_rules: tuple[RangeRule, ...] = _DEFAULT_RANGE_RULES
    domain_rules: tuple[DomainRule, ...] = field(default_factory=_schema_domain_rules)

    @classmethod
    def for_schema(cls, schema) -> "CleaningRules":
        """Rules whose domain checks follow a custom factor schema."""
        from .encoding import FACTOR_FIELDS

        return cls(domain_rules=tuple(
            DomainRule(FACTOR_FIELDS[f.name], tuple(f.categories))
            for f in schema.factors
            if f.kind == "categorical" and f.unknown_policy == "strict"
        ))

    @classmethod
    def from_file(cls, path: str | Path) -> "CleaningRules":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(
            required=tuple(data.get("required", REQUIRED_FACTOR_FIELDS)),
            range_rules=tuple(
                RangeRule(r["field"], r.get("minimum"), r.get("maximum"),
                          bool(r.get("exclusive_min", False)))
                for r in data.get("range_rules", [])
            ),
            domain_rules=tuple(
                DomainRule(r["field"], tuple(r["allowed"]))
                for r in data.get("domain_rules", [])
            ),
        )


@dataclass(frozen=True)
class CleaningReport:
    total_in: int
    dropped_missing: int
    dropped_inconsistent: int
    retained: int
    drop_reasons: tuple[tuple[str, str], ...]  # (pipe_id, reason)

    def to_dict(self) -> dict:
        return {
            "total_in": self.total_in,
            "dropped_missing": self.dropped_missing,
            "dropped_inconsistent": self.dropped_inconsistent,
            "retained": self.retained,
            "drop_reasons": [list(item) for item in self.drop_reasons],
        }

    def render_text(self) -> str:
        lines = [
            f"records in:            {self.total_in}",
            f"dropped (missing):     {self.dropped_missing}",
            f"dropped (inconsistent):{self.dropped_inconsistent}",
            f"retained:              {self.retained}",
        ]
        for pid, reason in self.drop_reasons:
            lines.append(f"  {pid}: {reason}")
        return "\n".join(lines) + "\n"


def clean(
    records: Sequence[PipeRecord],
    rules: CleaningRules | None = None,
) -> tuple[list[PipeRecord], CleaningReport]:
    """Partition records into retained / missing / inconsistent.

    Missing takes precedence: a record lacking a required field is counted
    under missing even if it also breaks a consistency rule. Input order is
    preserved among retained records, and cleaning never raises.
    """
    rules = rules or CleaningRules()
    retained: list[PipeRecord] = []
    reasons: list[tuple[str, str]] = []
    n_missing = 0
    n_inconsistent = 0
    for rec in records:
        absent = [f for f in rules.required if getattr(rec, f) is None]
        if absent:
            n_missing += 1
            reasons.append((rec.pipe_id, f"missing: {', '.join(absent)}"))
            continue
        violations = []
        for rule in rules.range_rules:
            v = rule.violates(rec)
            if v:
                violations.append(v)
        for rule in rules.domain_rules:
            v = rule.violates(rec)
            if v:
                violations.append(v)
        if violations:
            n_inconsistent += 1
            reasons.append((rec.pipe_id, f"inconsistent: {'; '.join(violations)}"))
            continue
        retained.append(rec)
    report = CleaningReport(
        total_in=len(records),
        dropped_missing=n_missing,
        dropped_inconsistent=n_inconsistent,
        retained=len(retained),
        drop_reasons=tuple(reasons),
    )
    return retained, report


def write_records_csv(records: Sequence[PipeRecord], path: str | Path) -> None:
    """Write records using the default column layout (the format load_records reads)."""
    field_order = [f.name for f in fields(PipeRecord)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([DEFAULT_COLUMNS[f] for f in field_order])
        for rec in records:
            row = []
            for f in field_order:
                value = getattr(rec, f)
                if value is None:
                    row.append("")
                elif isinstance(value, float) and value == int(value):
                    row.append(str(int(value)))
                else:
                    row.append(str(value))
            writer.writerow(row)
