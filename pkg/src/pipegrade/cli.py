"""Command-line driver for the condition-rating pipeline.

Subcommands: generate, ingest, screen, sweep, train, evaluate,
score-matrix, predict, report, pipeline. Tables are written as CSV,
human reports as aligned text, machine reports as JSON. All file writes
go through a temp-and-rename so a crash never leaves a half-written
artifact; artifacts of completed stages are kept when a later stage
fails. PIPEGRADE_OUTPUT_DIR overrides the output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import _kernels, baselines, knn, metrics, screening, synthgen
from .encoding import EncodedDataset, FactorSchema, default_schema, encode_dataset, load_schema, project
from .ingest import CleaningRules, clean, load_column_map, load_records, write_records_csv

SWEEP_CAVEAT = (
    "misclassification rates below are computed from this run's input data and split seed. "
    "Published sweep figures for the original survey records (lowest validation "
    "misclassification 0.31290 at K=7, i.e. 68.71% accuracy) are not reproducible "
    "without those records and disagree with the 73.23% overall accuracy implied by "
    "the corresponding published confusion matrix; treat absolute rates as "
    "dataset-specific."
)


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage {stage}: {message}")


@dataclass(frozen=True)
class RunConfig:
    input_path: Path
    out_dir: Path
    schema_path: Path | None = None
    columns_path: Path | None = None
    rules_path: Path | None = None
    seed: int = 0
    train_fraction: float = 0.75
    alpha: float = 0.05
    k: int | None = None  # None: choose by validation argmin from the sweep
    k_max: int | None = None  # None: min(30, train size - 1)
    tie_break: str = "nearest"
    stratify: bool = False
    smoothing: float = 1.0
    report_format: str = "both"  # text | json | both


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _out_dir(raw: str) -> Path:
    override = os.environ.get("PIPEGRADE_OUTPUT_DIR")
    out = Path(override) if override else Path(raw)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_schema(path: Path | None) -> FactorSchema:
    return load_schema(path) if path else default_schema()


def _prepare(config: RunConfig) -> tuple[EncodedDataset, "screening.ScreeningReport", dict]:
    """ingest -> clean -> encode -> screen -> project, shared by several commands."""
    schema = _load_schema(config.schema_path)
    columns = load_column_map(config.columns_path) if config.columns_path else None
    rules = CleaningRules.from_file(config.rules_path) if config.rules_path \
        else CleaningRules.for_schema(schema)

    records, diagnostics = load_records(config.input_path, columns)
    for diag in diagnostics:
        print(f"row {diag.row}: {diag.message}", file=sys.stderr)
    retained, report = clean(records, rules)
    if not retained:
        raise StageError("clean", "no records retained")

    dataset = encode_dataset(retained, schema)
    screen_report = screening.screen(dataset, config.alpha)
    if not screen_report.retained:
        raise StageError(
            "screen",
            f"no factors retained at alpha={config.alpha:g}; "
            "re-run with a smaller --alpha (0 keeps every non-degenerate factor)",
        )
    projected = project(dataset, screen_report.retained)
    # preserve schema order for the retained factors
    meta = {"cleaning": report, "schema": schema}
    return projected, screen_report, meta


def _split_dataset(dataset: EncodedDataset, config: RunConfig):
    spec = knn.SplitSpec(config.train_fraction, config.seed, config.stratify)
    return knn.split(list(dataset.vectors), spec)


def _resolve_k_max(explicit: int | None, train_size: int) -> int:
    limit = train_size - 1
    if explicit is None:
        return min(30, limit)
    if explicit > limit:
        raise StageError("sweep", f"k range 1..{explicit} exceeds training size {train_size}")
    return explicit


def _sweep_csv(result: knn.SweepResult) -> str:
    lines = [f"# {SWEEP_CAVEAT}"]
    lines.append("k,train_count,train_misclassification,validation_count,validation_misclassification")
    for r in result.rows:
        lines.append(f"{r.k},{r.train_count},{r.train_misclassification:.5f},"
                     f"{r.validation_count},{r.validation_misclassification:.5f}")
    return "\n".join(lines) + "\n"


def _sweep_text(result: knn.SweepResult) -> str:
    lines = [
        "K sweep (train rates are leave-one-out)",
        f"note: {SWEEP_CAVEAT}",
        "",
        f"{'K':>3} {'train n':>8} {'train rate':>11} {'valid n':>8} {'valid rate':>11}",
    ]
    for r in result.rows:
        lines.append(f"{r.k:>3} {r.train_count:>8} {r.train_misclassification:>11.5f} "
                     f"{r.validation_count:>8} {r.validation_misclassification:>11.5f}")
    lines.append(f"lowest validation misclassification at K={result.best_k}")
    return "\n".join(lines) + "\n"


def _screening_csv(report: "screening.ScreeningReport") -> str:
    lines = ["factor,n,W,p_value,degenerate,verdict"]
    for r in report.results:
        w = "" if r.degenerate else f"{r.statistic:.6f}"
        lines.append(f"{r.factor},{r.n},{w},{r.p_value:.6g},{str(r.degenerate).lower()},{r.verdict}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Subcommands

def cmd_generate(args: argparse.Namespace) -> int:
    if args.spec:
        spec = synthgen.load_spec(args.spec)
    else:
        dists = synthgen.separable_distributions() if args.separable \
            else synthgen.default_distributions()
        spec = synthgen.GenSpec(
            n=args.n, seed=args.seed, noise_rate=args.noise,
            distributions=dists,
            missing_rate=args.missing_rate, inconsistent_rate=args.inconsistent_rate,
        )
    records = synthgen.generate(spec)
    write_records_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    out = _out_dir(args.out_dir)
    schema = _load_schema(_opt_path(args.schema))
    columns = load_column_map(args.columns) if args.columns else None
    rules = CleaningRules.from_file(args.rules) if args.rules \
        else CleaningRules.for_schema(schema)
    records, diagnostics = load_records(args.input, columns)
    for diag in diagnostics:
        print(f"row {diag.row}: {diag.message}", file=sys.stderr)
    retained, report = clean(records, rules)
    _atomic_write(out / "cleaning_report.json",
                  json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    write_records_csv(retained, out / "cleaned.csv")
    print(report.render_text(), end="")
    print(f"artifacts in {out}")
    return 0


def cmd_screen(args: argparse.Namespace) -> int:
    out = _out_dir(args.out_dir)
    config = RunConfig(Path(args.input), out, schema_path=_opt_path(args.schema),
                       columns_path=_opt_path(args.columns), rules_path=_opt_path(args.rules),
                       alpha=args.alpha)
    schema = _load_schema(config.schema_path)
    records, diagnostics = load_records(config.input_path,
                                        load_column_map(config.columns_path) if config.columns_path else None)
    for diag in diagnostics:
        print(f"row {diag.row}: {diag.message}", file=sys.stderr)
    retained, _ = clean(records, CleaningRules.from_file(config.rules_path)
                        if config.rules_path else CleaningRules.for_schema(schema))
    if not retained:
        print("error: stage clean: no records retained", file=sys.stderr)
        return 1
    dataset = encode_dataset(retained, schema)
    report = screening.screen(dataset, config.alpha)
    _atomic_write(out / "screening.csv", _screening_csv(report))
    _atomic_write(out / "screening.json",
                  json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    print(report.render_text(), end="")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    out = _out_dir(args.out_dir)
    config = _run_config(args, out)
    dataset, _, _ = _prepare(config)
    train, validation = _split_dataset(dataset, config)
    k_max = _resolve_k_max(config.k_max, len(train))
    result = knn.sweep_k(train, validation, k_max, config.tie_break)
    _atomic_write(out / "sweep.csv", _sweep_csv(result))
    _atomic_write(out / "sweep.json",
                  json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
    print(_sweep_text(result), end="")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _run_config(args, _out_dir(args.out_dir))
    dataset, _, _ = _prepare(config)
    train, validation = _split_dataset(dataset, config)
    if args.model_type == "knn":
        if config.k is None:
            k_max = _resolve_k_max(config.k_max, len(train))
            result = knn.sweep_k(train, validation, k_max, config.tie_break)
            chosen_k = result.best_k
        else:
            chosen_k = config.k
            if chosen_k > len(train):
                raise StageError("train", f"k={chosen_k} exceeds training size {len(train)}")
        model = knn.fit(train, chosen_k, config.tie_break, dataset.factor_names)
        knn.save_model(model, args.model_out)
        val_rate = knn.misclassification(model, validation)
        print(f"trained KNN (K={chosen_k}, d={model.dim}) on {len(train)} records; "
              f"validation misclassification {val_rate:.5f}")
    else:
        nb = baselines.nb_fit(train, config.smoothing, dataset.factor_names)
        baselines.save_model(nb, args.model_out)
        preds = [baselines.nb_predict(nb, v.ranks) for v in validation]
        wrong = sum(1 for p, v in zip(preds, validation) if p != v.label)
        print(f"trained NB (smoothing={config.smoothing:g}, d={nb.dim}) on {len(train)} "
              f"records; validation misclassification {wrong / len(validation):.5f}")
    print(f"model written to {args.model_out}")
    return 0


def _load_any_model(path: Path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    fmt = doc.get("format", "")
    if fmt == knn.MODEL_FORMAT:
        return "knn", knn.load_model(path)
    if fmt == baselines.MODEL_FORMAT:
        return "nb", baselines.load_model(path)
    raise StageError("evaluate", f"{path}: unrecognized model format {fmt!r}")


def _encode_for_model(args, model_factors: tuple[str, ...]) -> EncodedDataset:
    schema = _load_schema(_opt_path(args.schema))
    columns = load_column_map(args.columns) if getattr(args, "columns", None) else None
    records, diagnostics = load_records(args.input, columns)
    for diag in diagnostics:
        print(f"row {diag.row}: {diag.message}", file=sys.stderr)
    retained, _ = clean(records, CleaningRules.for_schema(schema))
    if not retained and records:
        raise StageError("clean", "no records retained")
    dataset = encode_dataset(retained, schema)
    if not model_factors:
        return dataset
    missing = set(model_factors) - set(dataset.factor_names)
    if missing:
        raise StageError("project", f"records lack model factor(s): {sorted(missing)}")
    return project(dataset, model_factors) if retained else dataset


def cmd_evaluate(args: argparse.Namespace) -> int:
    out = _out_dir(args.out_dir)
    kind, model = _load_any_model(Path(args.model))
    dataset = _encode_for_model(args, model.factor_names)
    if not dataset.vectors:
        raise StageError("evaluate", "no records to evaluate")
    if kind == "knn":
        preds = knn.predict_batch(model, [v.ranks for v in dataset.vectors])
    else:
        preds = [baselines.nb_predict(model, v.ranks) for v in dataset.vectors]
    actuals = [v.label for v in dataset.vectors]
    matrix = metrics.confusion(preds, actuals)
    metrics.matrix_to_csv(matrix, out / "confusion.csv")
    rep = metrics.report({kind.upper(): matrix})
    _write_report(rep, out)
    print(rep.render_text(), end="")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    kind, model = _load_any_model(Path(args.model))
    dataset = _encode_for_model(args, model.factor_names)
    rows = []
    for v in dataset.vectors:
        if kind == "knn":
            pred = knn.predict(model, v.ranks)
        else:
            pred = baselines.nb_predict(model, v.ranks)
        rows.append((v.pipe_id, pred))
    rows.sort(key=lambda r: -r[1])  # worst condition first; stable within rating
    lines = ["pipe_id,predicted_rating"]
    lines.extend(f"{pid},{pred}" for pid, pred in rows)
    _atomic_write(Path(args.out), "\n".join(lines) + "\n")
    print(f"wrote {len(rows)} predictions to {args.out}")
    return 0


def cmd_score_matrix(args: argparse.Namespace) -> int:
    out = _out_dir(args.out_dir)
    matrix = metrics.matrix_from_csv(args.matrix)
    rep = metrics.report({args.name: matrix})
    _write_report(rep, out)
    print(rep.render_text(), end="")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    out = _out_dir(args.out_dir)
    named = []
    for item in args.matrix:
        if "=" not in item:
            print(f"error: --matrix needs NAME=PATH, got {item!r}", file=sys.stderr)
            return 1
        name, _, path = item.partition("=")
        named.append((name, metrics.matrix_from_csv(path)))
    rep = metrics.report(named)
    _write_report(rep, out)
    print(rep.render_text(), end="")
    return 0


def _write_report(rep: metrics.ComparisonReport, out: Path) -> None:
    _atomic_write(out / "scores.json", rep.to_json() + "\n")
    _atomic_write(out / "scores.txt", rep.render_text())


def cmd_pipeline(args: argparse.Namespace) -> int:
    out = _out_dir(args.out_dir)
    config = _run_config(args, out)
    stage = "ingest"
    try:
        schema = _load_schema(config.schema_path)
        columns = load_column_map(config.columns_path) if config.columns_path else None
        rules = CleaningRules.from_file(config.rules_path) if config.rules_path \
            else CleaningRules.for_schema(schema)
        records, diagnostics = load_records(config.input_path, columns)
        for diag in diagnostics:
            print(f"row {diag.row}: {diag.message}", file=sys.stderr)

        stage = "clean"
        retained, cleaning_report = clean(records, rules)
        _atomic_write(out / "cleaning_report.json",
                      json.dumps(cleaning_report.to_dict(), indent=2, sort_keys=True) + "\n")
        if not retained:
            raise StageError(stage, "no records retained")

        stage = "encode"
        dataset = encode_dataset(retained, schema)

        stage = "screen"
        screen_report = screening.screen(dataset, config.alpha)
        _atomic_write(out / "screening.csv", _screening_csv(screen_report))
        if not screen_report.retained:
            raise StageError(stage, f"no factors retained at alpha={config.alpha:g}; "
                                    "re-run with a smaller --alpha")
        projected = project(dataset, screen_report.retained)

        stage = "split"
        train, validation = _split_dataset(projected, config)

        stage = "sweep"
        k_max = _resolve_k_max(config.k_max, len(train))
        sweep_result = knn.sweep_k(train, validation, k_max, config.tie_break)
        _atomic_write(out / "sweep.csv", _sweep_csv(sweep_result))
        chosen_k = config.k if config.k is not None else sweep_result.best_k
        if chosen_k > len(train):
            raise StageError(stage, f"k={chosen_k} exceeds training size {len(train)}")

        stage = "train"
        model = knn.fit(train, chosen_k, config.tie_break, projected.factor_names)
        knn.save_model(model, out / "model.json")
        nb = baselines.nb_fit(train, config.smoothing, projected.factor_names)

        stage = "evaluate"
        preds = knn.predict_batch(model, [v.ranks for v in validation])
        actuals = [v.label for v in validation]
        matrix = metrics.confusion(preds, actuals)
        metrics.matrix_to_csv(matrix, out / "confusion.csv")
        nb_preds = [baselines.nb_predict(nb, v.ranks) for v in validation]
        nb_matrix = metrics.confusion(nb_preds, actuals)

        stage = "report"
        rep = metrics.report({"KNN": matrix, "NBC": nb_matrix})
        doc = rep.to_dict()
        doc["chosen_k"] = chosen_k
        doc["split"] = {"seed": config.seed, "train": len(train),
                        "validation": len(validation),
                        "stratified": config.stratify}
        doc["retained_factors"] = list(projected.factor_names)
        doc["kernel_backend"] = _kernels.active_name()
        if config.report_format in ("json", "both"):
            _atomic_write(out / "scores.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
        if config.report_format in ("text", "both"):
            _atomic_write(out / "scores.txt", rep.render_text())
    except StageError:
        raise
    except (OSError, ValueError, RuntimeError) as exc:
        raise StageError(stage, str(exc)) from exc

    print(f"pipeline complete: K={chosen_k}, "
          f"validation accuracy {metrics.overall_accuracy(matrix) * 100:.2f}%; "
          f"artifacts in {out}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing

def _opt_path(value) -> Path | None:
    return Path(value) if value else None


def _run_config(args: argparse.Namespace, out: Path) -> RunConfig:
    return RunConfig(
        input_path=Path(args.input),
        out_dir=out,
        schema_path=_opt_path(getattr(args, "schema", None)),
        columns_path=_opt_path(getattr(args, "columns", None)),
        rules_path=_opt_path(getattr(args, "rules", None)),
        seed=getattr(args, "seed", 0),
        train_fraction=getattr(args, "train_fraction", 0.75),
        alpha=getattr(args, "alpha", 0.05),
        k=getattr(args, "k", None),
        k_max=getattr(args, "k_max", None),
        tie_break=getattr(args, "tie_break", "nearest"),
        stratify=getattr(args, "stratify", False),
        smoothing=getattr(args, "smoothing", 1.0),
        report_format=getattr(args, "report_format", "both"),
    )


def _add_data_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="records CSV")
    p.add_argument("--schema", help="factor schema JSON (default: built-in)")
    p.add_argument("--columns", help="column-name map JSON")
    p.add_argument("--rules", help="cleaning rules JSON")


def _add_model_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.05, help="screening significance (default 0.05)")
    p.add_argument("--seed", type=int, default=0, help="split shuffle seed")
    p.add_argument("--train-fraction", dest="train_fraction", type=float, default=0.75)
    p.add_argument("--tie-break", dest="tie_break", choices=knn.TIE_BREAKS, default="nearest")
    p.add_argument("--stratify", action="store_true", help="stratify the split by rating")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pipegrade",
                                     description="wastewater pipe condition-rating toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic records CSV")
    p.add_argument("--spec", help="generator spec JSON")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0, help="label noise rate")
    p.add_argument("--missing-rate", dest="missing_rate", type=float, default=0.0)
    p.add_argument("--inconsistent-rate", dest="inconsistent_rate", type=float, default=0.0)
    p.add_argument("--separable", action="store_true",
                   help="every varying factor marks the class exactly")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("ingest", help="load, clean, and report")
    _add_data_options(p)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("screen", help="normality screening of encoded factors")
    _add_data_options(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("sweep", help="misclassification for K = 1..k_max")
    _add_data_options(p)
    _add_model_options(p)
    p.add_argument("--k-max", dest="k_max", type=int, help="default: min(30, train size - 1)")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train", help="fit and persist a model")
    _add_data_options(p)
    _add_model_options(p)
    p.add_argument("--model-type", dest="model_type", choices=("knn", "nb"), default="knn")
    p.add_argument("--k", type=int, help="neighbor count; default: sweep argmin")
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--smoothing", type=float, default=1.0)
    p.add_argument("--model-out", dest="model_out", required=True)
    p.add_argument("--out-dir", dest="out_dir", default=".")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="confusion matrix and scores for a model")
    p.add_argument("--model", required=True)
    _add_data_options(p)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("score-matrix", help="scores for one stored confusion matrix")
    p.add_argument("--matrix", required=True, help="confusion matrix CSV")
    p.add_argument("--name", default="model")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_score_matrix)

    p = sub.add_parser("report", help="comparison report over named matrices")
    p.add_argument("--matrix", action="append", required=True, metavar="NAME=PATH")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("predict", help="batch-score records, worst condition first")
    p.add_argument("--model", required=True)
    _add_data_options(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("pipeline", help="run every stage end to end")
    _add_data_options(p)
    _add_model_options(p)
    p.add_argument("--k", type=int, help="fix K instead of using the sweep argmin")
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--smoothing", type=float, default=1.0)
    p.add_argument("--report-format", dest="report_format",
                   choices=("text", "json", "both"), default="both")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
