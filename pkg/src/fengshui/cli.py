"""Command-line entry point for the offline pipeline.

Every subcommand is a thin shell over the library: identical parameters
give byte-identical results to direct calls. Human-readable tables go to
stdout; machine formats are written only via --out paths.

Exit codes: 0 success, 1 validation/data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import analysis, evaluation, features, ingest, models, store, survey, synth

FEATURES_FORMAT = "fengshui-features"
FEATURES_VERSION = 1

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


class _UsageError(Exception):
    pass


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _load_log_and_meta(args) -> tuple[ingest.SessionMeta, ingest.SensorLog]:
    meta = ingest.parse_session_meta(_read_text(args.meta))
    log = ingest.parse_sensor_log(_read_text(args.csv), session_id=meta.session_id)
    if args.despike:
        log = ingest.despike(log, args.z_threshold)
    return meta, log


def _load_labeled(path: str) -> evaluation.LabeledDataset:
    rows = store.load_dataset(path)
    return evaluation.label_by_mean(rows)


def _model_spec(args) -> models.ModelSpec:
    return models.ModelSpec(
        kind=args.model,
        knn_k=args.knn_k,
        standardize_features=not args.no_standardize,
        tree_max_depth=args.tree_max_depth,
        tree_min_leaf=args.tree_min_leaf,
        forest_n_trees=args.forest_trees,
        forest_features_per_split=args.forest_features,
        forest_bootstrap=not args.forest_no_bootstrap,
        seed=args.seed if args.seed is not None else 0,
    )


def _cv_spec(args) -> evaluation.CvSpec:
    return evaluation.CvSpec(
        kind=args.cv, k=args.folds, stratified=not args.no_stratify
    )


def _needs_seed(args) -> bool:
    return getattr(args, "model", None) == "random_forest" or getattr(
        args, "cv", None
    ) == "kfold"


def _require_seed(args, why: str) -> None:
    if args.seed is None:
        raise _UsageError(f"--seed is required {why}")


def _feature_list(raw: str | None) -> tuple[str, ...] | None:
    if raw is None:
        return None
    names = tuple(n.strip() for n in raw.split(",") if n.strip())
    unknown = [n for n in names if n not in features.FEATURE_NAMES]
    if unknown:
        raise ingest.IngestError(f"unknown feature names: {', '.join(unknown)}")
    if not names:
        raise ingest.IngestError("empty feature list")
    return names


def _forest_features_arg(value: str):
    if value == "sqrt":
        return "sqrt"
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected an integer or 'sqrt', got {value!r}"
        )


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=models.MODEL_KINDS, default="knn")
    p.add_argument("--knn-k", type=int, default=3)
    p.add_argument("--no-standardize", action="store_true",
                   help="skip per-feature standardization in KNN")
    p.add_argument("--tree-max-depth", type=int, default=None)
    p.add_argument("--tree-min-leaf", type=int, default=1)
    p.add_argument("--forest-trees", type=int, default=100)
    p.add_argument("--forest-features", type=_forest_features_arg, default="sqrt",
                   help="features per split: integer or 'sqrt'")
    p.add_argument("--forest-no-bootstrap", action="store_true")


def _add_cv_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cv", choices=("loo", "kfold"), default="loo")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--no-stratify", action="store_true")


def _add_despike_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--despike", action="store_true",
                   help="mask per-channel outliers before aggregation")
    p.add_argument("--z-threshold", type=float,
                   default=ingest.DEFAULT_Z_THRESHOLD)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fengshui",
        description="Room sensing, survey scoring and well-being classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a sensor log + metadata pair")
    p.add_argument("--csv", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--min-samples", type=int, default=ingest.DEFAULT_MIN_SAMPLES)
    _add_despike_flags(p)
    p.add_argument("--out", help="write a session summary as JSON")

    p = sub.add_parser("survey-score", help="score a survey record")
    p.add_argument("--record", required=True, help="survey record JSON")
    p.add_argument("--definition", help="survey definition JSON (default built-in)")
    p.add_argument("--out", help="write the score document as JSON")

    p = sub.add_parser("features", help="compute the 25-feature vector")
    p.add_argument("--csv", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--best-ratio", type=float, default=features.DEFAULT_BEST_RATIO)
    p.add_argument("--sample-std", action="store_true",
                   help="use the N-1 std form in channel aggregation")
    _add_despike_flags(p)
    p.add_argument("--out", help="write the feature vector as JSON")

    p = sub.add_parser("correlate", help="feature-score correlation table")
    p.add_argument("--dataset", required=True, help="dataset JSONL path")
    p.add_argument("--out", help="write the two-column CSV")

    p = sub.add_parser("select", help="screen candidates and search subsets")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", help="dataset JSONL path")
    src.add_argument("--correlations",
                     help="correlation CSV; filter only, no search")
    p.add_argument("--threshold", type=float, default=analysis.DEFAULT_THRESHOLD)
    _add_model_flags(p)
    _add_cv_flags(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="write the full ranking as CSV")

    p = sub.add_parser("train", help="fit a model on a labeled dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--features", help="comma-separated feature names (default all)")
    _add_model_flags(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="model JSON path")

    p = sub.add_parser("evaluate", help="cross-validated metrics report")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model-file", help="saved model JSON; overrides model flags")
    p.add_argument("--features", help="comma-separated feature names (default all)")
    _add_model_flags(p)
    _add_cv_flags(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="write the report as JSON")

    p = sub.add_parser("synth", help="generate a synthetic session dataset")
    p.add_argument("--rooms", type=int, required=True)
    p.add_argument("--informative", default="",
                   help="comma-separated name:weight pairs")
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--spike-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dataset", help="write rows to a dataset JSONL")
    p.add_argument("--out-dir", help="write per-session CSV/meta files")

    p = sub.add_parser("serve", help="run the session-capture HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--min-samples", type=int, default=ingest.DEFAULT_MIN_SAMPLES)
    _add_despike_flags(p)
    p.add_argument("--best-ratio", type=float, default=features.DEFAULT_BEST_RATIO)
    p.add_argument("--ttl-hours", type=float, default=4.0)

    return parser


def _cmd_ingest(args) -> int:
    meta, log = _load_log_and_meta(args)
    complete = log.is_complete(args.min_samples)
    masked = {c: len(log.channel_masks.get(c, ())) for c in ingest.CHANNELS}
    masked = {c: n for c, n in masked.items() if n}
    print(f"session      {meta.session_id}")
    print(f"samples      {len(log)}")
    print(f"duration_ms  {log.duration_ms()}")
    print(f"complete     {'yes' if complete else 'no'} "
          f"(target {args.min_samples})")
    if masked:
        print("masked       " + " ".join(f"{c}:{n}" for c, n in masked.items()))
    if args.out:
        doc = {
            "format": "fengshui-session",
            "format_version": 1,
            "session_id": meta.session_id,
            "sample_count": len(log),
            "duration_ms": log.duration_ms(),
            "complete": complete,
            "masked": masked,
        }
        _write_text(args.out, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def _cmd_survey_score(args) -> int:
    record = survey.record_from_dict(json.loads(_read_text(args.record)))
    if args.definition:
        definition = survey.definition_from_json(_read_text(args.definition))
    else:
        definition = survey.default_definition()
    violations = survey.validate_record(record, definition)
    if violations:
        for v in violations:
            print(f"violation: {v.code}: {v.message}", file=sys.stderr)
        return EXIT_DATA
    score = survey.wellbeing_score(record, definition)
    print(f"session  {record.session_id}")
    print(f"score    {score.value!r}")
    if args.out:
        doc = {
            "format": "fengshui-score",
            "format_version": 1,
            "session_id": record.session_id,
            "score": score.value,
        }
        _write_text(args.out, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def _cmd_features(args) -> int:
    meta, log = _load_log_and_meta(args)
    vector = features.build_feature_vector(
        meta,
        log,
        cfg=features.RatioConfig(best_ratio=args.best_ratio),
        sample_std=args.sample_std,
    )
    for name in features.FEATURE_NAMES:
        print(f"{name} = {vector[name]!r}")
    if args.out:
        doc = {
            "format": FEATURES_FORMAT,
            "format_version": FEATURES_VERSION,
            "session_id": meta.session_id,
            "best_ratio": args.best_ratio,
            "sample_std": bool(args.sample_std),
            "despike": bool(args.despike),
            "features": {n: vector[n] for n in features.FEATURE_NAMES},
        }
        _write_text(args.out, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def _cmd_correlate(args) -> int:
    dataset = _load_labeled(args.dataset)
    report = analysis.correlate_dataset(dataset)
    print(f"{'feature':<26} {'r':>12}")
    for name, r in report.entries:
        shown = f"{r:>12.6f}" if r is not None else f"{'undefined':>12}"
        print(f"{name:<26} {shown}")
    print(f"n_rows = {report.n_rows}")
    if args.out:
        _write_text(args.out, analysis.correlation_report_to_csv(report))
    return EXIT_OK


def _cmd_select(args) -> int:
    if args.correlations:
        report = analysis.correlation_report_from_csv(
            _read_text(args.correlations)
        )
        candidates = analysis.filter_candidates(report, args.threshold)
        print(f"candidates (|r| > {args.threshold}): {len(candidates)}")
        for name in candidates:
            print(name)
        return EXIT_OK

    _require_seed(args, "when searching subsets")
    dataset = _load_labeled(args.dataset)
    report = analysis.correlate_dataset(dataset)
    candidates = analysis.filter_candidates(report, args.threshold)
    print(f"candidates (|r| > {args.threshold}): {len(candidates)}")
    for name in candidates:
        print(name)
    if not candidates:
        print("no candidates above threshold; nothing to search", file=sys.stderr)
        return EXIT_DATA
    spec = _model_spec(args)
    cv = _cv_spec(args)
    result = analysis.exhaustive_subset_search(
        dataset, candidates, spec, cv, seed=args.seed, jobs=args.jobs
    )
    print(f"subsets evaluated: {len(result.ranking)}")
    print(f"best accuracy: {result.best_score:.4f}")
    print("best subset: " + ", ".join(result.best_subset))
    if args.out:
        header = (
            f"# model={spec.kind} cv={cv.kind} seed={args.seed} "
            f"threshold={args.threshold}\n"
        )
        _write_text(args.out, header + analysis.ranking_to_csv(result))
    return EXIT_OK


def _cmd_train(args) -> int:
    if _needs_seed(args):
        _require_seed(args, "for random_forest models")
    dataset = _load_labeled(args.dataset)
    names = _feature_list(args.features)
    spec = _model_spec(args)
    model = evaluation.train_full(dataset, spec, names)
    _write_text(args.out, models.model_to_json(model))
    print(f"trained {spec.kind} on {len(dataset)} rows, "
          f"{len(model.feature_names)} features")
    print(f"model written to {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    dataset = _load_labeled(args.dataset)
    if args.model_file:
        saved = models.model_from_json(_read_text(args.model_file))
        spec = saved.spec
        names = saved.feature_names
    else:
        if _needs_seed(args):
            _require_seed(args, "for random_forest models and k-fold CV")
        spec = _model_spec(args)
        names = _feature_list(args.features)
    cv = _cv_spec(args)
    report = evaluation.cross_validate(dataset, spec, cv, names)
    print(evaluation.format_report(report))
    print(f"baseline accuracy: {evaluation.baseline_accuracy(dataset):.4f}")
    if args.out:
        _write_text(
            args.out,
            json.dumps(evaluation.report_to_dict(report), indent=2) + "\n",
        )
    return EXIT_OK


def _parse_informative(raw: str) -> tuple[tuple[str, float], ...]:
    pairs = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        name, sep, weight = chunk.partition(":")
        if not sep:
            raise _UsageError(
                f"--informative expects name:weight pairs, got {chunk!r}"
            )
        try:
            pairs.append((name.strip(), float(weight)))
        except ValueError:
            raise _UsageError(f"bad weight in {chunk!r}")
    return tuple(pairs)


def _cmd_synth(args) -> int:
    _require_seed(args, "for synthetic generation")
    if not args.out_dataset and not args.out_dir:
        raise _UsageError("synth needs --out-dataset and/or --out-dir")
    spec = synth.SynthSpec(
        n_rooms=args.rooms,
        informative_features=_parse_informative(args.informative),
        noise_std=args.noise_std,
        sensor_spike_rate=args.spike_rate,
        seed=args.seed,
    )
    metas, logs, scores = synth.generate(spec)
    if args.out_dir:
        synth.write_session_files(metas, logs, args.out_dir)
        print(f"wrote {len(metas)} session file pairs to {args.out_dir}")
    if args.out_dataset:
        for meta, log, score in zip(metas, logs, scores):
            vector = features.build_feature_vector(meta, log)
            store.append_row(
                args.out_dataset,
                store.DatasetRow(
                    session_id=meta.session_id,
                    timestamp="synthetic",
                    features=vector,
                    score=score,
                    refs={},
                ),
            )
        print(f"appended {len(metas)} rows to {args.out_dataset}")
    values = [s.value for s in scores]
    print(f"rooms {len(metas)}, score mean "
          f"{sum(values) / len(values):.4f}, seed {args.seed}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        data_dir=args.data_dir,
        min_samples=args.min_samples,
        despike_enabled=args.despike,
        despike_z_threshold=args.z_threshold,
        best_ratio=args.best_ratio,
        session_ttl_s=args.ttl_hours * 3600.0,
    )
    uvicorn.run(create_app(config), host=args.host, port=args.port)
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "survey-score": _cmd_survey_score,
    "features": _cmd_features,
    "correlate": _cmd_correlate,
    "select": _cmd_select,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "synth": _cmd_synth,
    "serve": _cmd_serve,
}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
