"""Pipeline command line: synth, cohort, featurize, train, evaluate, serve.

Each stage reads and writes only documented CSV/JSON artifacts and drops a
manifest.json recording the effective config, seed, and artifact checksums,
so identical runs are verifiable byte-for-byte. Exit codes: 0 success,
1 usage/validation error, 2 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from datetime import date
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .codes import ProxyCodeSet, load_bundled_catalog, load_catalog
from .cohort import (
    FixedCohortRules,
    MonthlyCohortRules,
    build_fixed_date_cohort,
    build_monthly_cohort,
    read_instances,
    write_cohort_report,
    write_instances,
)
from .dates import parse_month
from .errors import C19RiskError
from .eval import (
    evaluate_scores,
    write_lift_csv,
    write_report_json,
    write_sla_csv,
    write_sla_gnuplot,
)
from .features import (
    SURVEY_FEATURE_NAMES,
    FeatureMatrixWriter,
    ccsr_feature_names,
    charlson_features,
    extract_ccsr_indicators,
    extract_survey_features,
    read_feature_matrix,
)
from .ingest import assemble_timelines, parse_claims, parse_demographics, parse_eligibility
from .models import (
    LogisticModel,
    LogisticTrainConfig,
    TrainConfig,
    TreeEnsembleModel,
    fit_logistic,
    fit_percentile_map,
    load_bundled_survey_model,
    load_model,
    save_model,
    score_ensemble_matrix,
    score_logistic_matrix,
    train_boosted_trees,
)
from .service import serve_forever
from .synth import SynthConfig, generate_population

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    """Bad flags or unusable configuration; maps to exit code 1."""


class DataError(Exception):
    """Unusable input data; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2; validation errors are exit 1
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(EXIT_USAGE)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(
    out_dir: Path,
    command: str,
    config: dict,
    seed: Optional[int],
    inputs: Sequence[Path],
    artifacts: Sequence[Path],
) -> None:
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {p.name: _sha256(p) for p in inputs},
        "artifacts": {p.name: _sha256(p) for p in artifacts},
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _require_file(path_text: Optional[str], flag: str) -> Path:
    if not path_text:
        raise UsageError(f"{flag} is required")
    path = Path(path_text)
    if not path.is_file():
        raise UsageError(f"{flag}: no such file: {path}")
    return path


def _out_dir(path_text: Optional[str]) -> Path:
    if not path_text:
        raise UsageError("--out is required")
    out = Path(path_text)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _apply_config_file(args: argparse.Namespace) -> None:
    """Fill unset flags from the JSON config file; explicit flags win."""
    if not getattr(args, "config", None):
        return
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"--config: no such file: {path}")
    try:
        loaded = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config: invalid JSON: {exc}")
    if not isinstance(loaded, dict):
        raise UsageError("--config: top level must be a JSON object")
    for key, value in loaded.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, value)


def _parse_rows(parse_fn, path: Path, what: str, threshold: float):
    rows, errors = parse_fn(path)
    total = len(rows) + len(errors)
    if errors:
        for err in errors[:5]:
            logger.warning("%s line %d: %s (%s)", what, err.line, err.message, err.kind)
        if total and len(errors) / total > threshold:
            preview = "; ".join(f"line {e.line}: {e.message}" for e in errors[:3])
            raise DataError(
                f"{what}: {len(errors)}/{total} rows invalid "
                f"(threshold {threshold:.1%}): {preview}"
            )
    return rows


def _load_timelines(args, threshold: float):
    claims_path = _require_file(args.claims, "--claims")
    elig_path = _require_file(args.eligibility, "--eligibility")
    demo_path = _require_file(args.demographics, "--demographics")
    claims = _parse_rows(parse_claims, claims_path, "claims", threshold)
    spans = _parse_rows(parse_eligibility, elig_path, "eligibility", threshold)
    demos = _parse_rows(parse_demographics, demo_path, "demographics", threshold)
    timelines, warnings = assemble_timelines(claims, spans, demos)
    for w in warnings[:5]:
        logger.warning("orphan %s for person %s (%s)", w.kind, w.person_id, w.detail)
    return timelines, [claims_path, elig_path, demo_path]


def _load_catalog(args) -> tuple:
    if args.catalog:
        path = _require_file(args.catalog, "--catalog")
        return load_catalog(path, version=path.stem), [path]
    return load_bundled_catalog(), []


# --- subcommands ---


def cmd_synth(args) -> int:
    out = _out_dir(args.out)
    seed = args.seed if args.seed is not None else 0
    config = SynthConfig(
        n_persons=args.n if args.n is not None else 1000,
        elder_fraction=args.elder_fraction if args.elder_fraction is not None else 0.21,
        months_of_history=args.months_history if args.months_history is not None else 15,
        prediction_date=date.fromisoformat(args.prediction_date)
        if args.prediction_date
        else date(2019, 9, 30),
        seed=seed,
    )
    paths = generate_population(config, out)
    artifacts = [paths.claims_path, paths.eligibility_path, paths.demographics_path, paths.truth_path]
    _write_manifest(
        out,
        "synth",
        {
            "n_persons": config.n_persons,
            "elder_fraction": config.elder_fraction,
            "months_of_history": config.months_of_history,
            "prediction_date": config.prediction_date.isoformat(),
        },
        seed,
        [],
        artifacts,
    )
    logger.info("synth: wrote %d artifact files to %s", len(artifacts), out)
    return EXIT_OK


def cmd_cohort(args) -> int:
    out = _out_dir(args.out)
    threshold = args.bad_row_threshold if args.bad_row_threshold is not None else 0.01
    catalog, catalog_inputs = _load_catalog(args)
    timelines, input_paths = _load_timelines(args, threshold)
    proxy = ProxyCodeSet()
    if args.proxy_config:
        proxy_path = _require_file(args.proxy_config, "--proxy-config")
        proxy = ProxyCodeSet.from_config(json.loads(proxy_path.read_text(encoding="utf-8")))
        input_paths.append(proxy_path)

    mode = args.mode or "fixed"
    if mode == "fixed":
        if not args.prediction_date:
            raise UsageError("--prediction-date is required for --mode fixed")
        rules = FixedCohortRules(
            min_age=args.min_age if args.min_age is not None else 65,
            min_continuous_months=args.min_continuous_months
            if args.min_continuous_months is not None
            else 6,
            outcome_months=args.outcome_months if args.outcome_months is not None else 3,
        )
        instances, report = build_fixed_date_cohort(
            timelines, date.fromisoformat(args.prediction_date), catalog, proxy, rules
        )
        config = {
            "mode": "fixed",
            "prediction_date": args.prediction_date,
            "rules": rules.__dict__,
        }
    elif mode == "monthly":
        if not args.start_month or not args.end_month:
            raise UsageError("--start-month and --end-month are required for --mode monthly")
        rules = MonthlyCohortRules(
            min_age=args.min_age if args.min_age is not None else 18,
            post_window_months=args.post_window_months
            if args.post_window_months is not None
            else 3,
            outcome_months=args.outcome_months if args.outcome_months is not None else 3,
        )
        instances, report = build_monthly_cohort(
            timelines,
            (parse_month(args.start_month), parse_month(args.end_month)),
            catalog,
            proxy,
            rules,
        )
        config = {
            "mode": "monthly",
            "start_month": args.start_month,
            "end_month": args.end_month,
            "rules": rules.__dict__,
        }
    else:
        raise UsageError(f"--mode must be fixed or monthly, got {mode!r}")

    instances_path = out / "instances.csv"
    report_path = out / "cohort_report.csv"
    write_instances(instances, instances_path)
    write_cohort_report(report, report_path)
    _write_manifest(
        out,
        "cohort",
        config,
        args.seed,
        input_paths + catalog_inputs,
        [instances_path, report_path],
    )
    logger.info("cohort: %d instances (%s)", len(instances), mode)
    return EXIT_OK


def cmd_featurize(args) -> int:
    out = _out_dir(args.out)
    threshold = args.bad_row_threshold if args.bad_row_threshold is not None else 0.01
    instances_path = _require_file(args.instances, "--instances")
    instances = read_instances(instances_path)
    catalog, catalog_inputs = _load_catalog(args)
    timelines, input_paths = _load_timelines(args, threshold)
    schema = args.schema or "survey"

    if schema == "survey":
        names = SURVEY_FEATURE_NAMES
        extract = lambda t, d: extract_survey_features(t, d, catalog)  # noqa: E731
    elif schema == "ccsr":
        names = ccsr_feature_names(catalog)
        extract = lambda t, d: extract_ccsr_indicators(t, d, catalog)  # noqa: E731
    elif schema == "charlson":
        names = ("charlson_index",)
        extract = lambda t, d: charlson_features(t, d)  # noqa: E731
    else:
        raise UsageError(f"--schema must be survey, ccsr or charlson, got {schema!r}")

    features_path = out / "features.csv"
    missing = 0
    with FeatureMatrixWriter(features_path, names) as writer:
        for inst in instances:
            timeline = timelines.get(inst.person_id)
            if timeline is None:
                missing += 1
                continue
            writer.write_row(
                inst.person_id, inst.prediction_date, int(inst.label), extract(timeline, inst.prediction_date)
            )
    if missing:
        logger.warning("featurize: %d instances had no timeline and were skipped", missing)
    _write_manifest(
        out,
        "featurize",
        {"schema": schema},
        args.seed,
        [instances_path] + input_paths + catalog_inputs,
        [features_path],
    )
    logger.info("featurize: wrote %s (%s schema)", features_path, schema)
    return EXIT_OK


def cmd_train(args) -> int:
    out = _out_dir(args.out)
    features_path = _require_file(args.features, "--features")
    matrix = read_feature_matrix(features_path)
    kind = args.kind or "logistic"
    seed = args.seed if args.seed is not None else 0
    if kind == "logistic":
        config = LogisticTrainConfig(
            l2_lambda=args.l2_lambda if args.l2_lambda is not None else 1.0, seed=seed
        )
        model = fit_logistic(matrix.X, matrix.labels.astype(np.float64), matrix.feature_names, config)
        model.percentiles = fit_percentile_map(score_logistic_matrix(model, matrix.X))
        train_config = {"kind": kind, "l2_lambda": config.l2_lambda}
    elif kind == "ensemble":
        config = TrainConfig(
            rounds=args.rounds if args.rounds is not None else 200,
            max_depth=args.max_depth if args.max_depth is not None else 4,
            learning_rate=args.learning_rate if args.learning_rate is not None else 0.1,
            l2_lambda=args.l2_lambda if args.l2_lambda is not None else 1.0,
            gamma_min_gain=args.gamma if args.gamma is not None else 0.0,
            min_child_hessian=args.min_child_hessian if args.min_child_hessian is not None else 1e-3,
            seed=seed,
        )
        model = train_boosted_trees(
            matrix.X, matrix.labels.astype(np.float64), matrix.feature_names, config
        )
        train_config = {
            "kind": kind,
            "rounds": config.rounds,
            "max_depth": config.max_depth,
            "learning_rate": config.learning_rate,
            "l2_lambda": config.l2_lambda,
            "gamma_min_gain": config.gamma_min_gain,
            "min_child_hessian": config.min_child_hessian,
        }
    else:
        raise UsageError(f"--kind must be logistic or ensemble, got {kind!r}")

    model_path = out / "model.json"
    save_model(model, model_path)
    _write_manifest(out, "train", train_config, seed, [features_path], [model_path])
    logger.info("train: wrote %s (%s, %d rows)", model_path, kind, len(matrix))
    return EXIT_OK


def _scores_for(matrix, model) -> np.ndarray:
    index = {name: i for i, name in enumerate(matrix.feature_names)}
    if isinstance(model, LogisticModel):
        try:
            cols = [index[name] for name in model.feature_names]
        except KeyError as exc:
            raise DataError(f"feature matrix lacks model feature {exc}")
        return score_logistic_matrix(model, matrix.X[:, cols])
    if isinstance(model, TreeEnsembleModel):
        n = matrix.X.shape[0]
        X = np.zeros((n, len(model.feature_names)))
        for j, name in enumerate(model.feature_names):
            if name in index:  # absent features score as 0
                X[:, j] = matrix.X[:, index[name]]
        return score_ensemble_matrix(model, X)
    raise DataError(f"unsupported model type {type(model)!r}")


def cmd_evaluate(args) -> int:
    out = _out_dir(args.out)
    features_path = _require_file(args.features, "--features")
    matrix = read_feature_matrix(features_path)
    if len(matrix) == 0:
        raise DataError("feature matrix is empty")
    inputs = [features_path]
    if args.score_feature:
        if args.score_feature not in matrix.feature_names:
            raise UsageError(f"--score-feature {args.score_feature!r} not in the matrix")
        scores = matrix.X[:, matrix.feature_names.index(args.score_feature)]
        model_version = f"feature:{args.score_feature}"
    else:
        model_path = _require_file(args.model, "--model")
        model = load_model(model_path)
        scores = _scores_for(matrix, model)
        model_version = model.model_version
        inputs.append(model_path)

    report = evaluate_scores(
        matrix.labels, scores, ids=matrix.person_ids, model_version=model_version
    )
    report_path = out / "report.json"
    sla_path = out / "sla.csv"
    lift_path = out / "lift.csv"
    dat_path = out / "sla.dat"
    write_report_json(report, report_path)
    write_sla_csv(report, sla_path)
    write_lift_csv(report, lift_path)
    write_sla_gnuplot(report, dat_path)
    _write_manifest(
        out,
        "evaluate",
        {"score_feature": args.score_feature, "model_version": model_version},
        args.seed,
        inputs,
        [report_path, sla_path, lift_path, dat_path],
    )
    logger.info("evaluate: auc %.4f over %d rows", report.auc, report.n)
    return EXIT_OK


def cmd_serve(args) -> int:
    if args.model:
        model_path = _require_file(args.model, "--model")
        model = load_model(model_path)
        if not isinstance(model, LogisticModel):
            raise UsageError("--model must point to a logistic model for serving")
    else:
        model = load_bundled_survey_model()
    port = args.port if args.port is not None else 8000
    host = args.host or "127.0.0.1"
    serve_forever(model, host, port, args.allow_origin)
    return EXIT_OK


# --- parser wiring ---


def _add_common(parser: _Parser):
    parser.add_argument("--config", help="JSON config file; explicit flags win")
    parser.add_argument("--seed", type=int, default=None, help="run seed recorded in outputs")
    parser.add_argument("--out", default=None, help="output directory")


def _add_inputs(parser: _Parser):
    parser.add_argument("--claims", default=None, help="claims CSV")
    parser.add_argument("--eligibility", default=None, help="eligibility CSV")
    parser.add_argument("--demographics", default=None, help="demographics CSV")
    parser.add_argument("--catalog", default=None, help="CCSR catalog CSV (bundled fixture when omitted)")
    parser.add_argument(
        "--bad-row-threshold",
        type=float,
        default=None,
        help="max tolerated invalid-row fraction per file (default 0.01)",
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="c19risk", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic population", parents=[])
    _add_common(p)
    p.add_argument("--n", type=int, default=None, help="persons to generate (default 1000)")
    p.add_argument("--elder-fraction", type=float, default=None)
    p.add_argument("--months-history", type=int, default=None)
    p.add_argument("--prediction-date", default=None, help="YYYY-MM-DD")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("cohort", help="build labeled prediction instances")
    _add_common(p)
    _add_inputs(p)
    p.add_argument("--mode", choices=["fixed", "monthly"], default=None)
    p.add_argument("--prediction-date", default=None, help="YYYY-MM-DD (fixed mode)")
    p.add_argument("--start-month", default=None, help="YYYY-MM (monthly mode)")
    p.add_argument("--end-month", default=None, help="YYYY-MM (monthly mode)")
    p.add_argument("--min-age", type=int, default=None)
    p.add_argument("--min-continuous-months", type=int, default=None)
    p.add_argument("--outcome-months", type=int, default=None)
    p.add_argument("--post-window-months", type=int, default=None)
    p.add_argument("--proxy-config", default=None, help="JSON proxy code-set override")
    p.set_defaults(fn=cmd_cohort)

    p = sub.add_parser("featurize", help="extract feature vectors for instances")
    _add_common(p)
    _add_inputs(p)
    p.add_argument("--instances", default=None, help="instances CSV from the cohort stage")
    p.add_argument("--schema", choices=["survey", "ccsr", "charlson"], default=None)
    p.set_defaults(fn=cmd_featurize)

    p = sub.add_parser("train", help="fit a model on a feature matrix")
    _add_common(p)
    p.add_argument("--features", default=None, help="features CSV from the featurize stage")
    p.add_argument("--kind", choices=["logistic", "ensemble"], default=None)
    p.add_argument("--l2-lambda", type=float, default=None)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--min-child-hessian", type=float, default=None)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="score a feature matrix and report metrics")
    _add_common(p)
    p.add_argument("--features", default=None)
    p.add_argument("--model", default=None, help="model JSON to score with")
    p.add_argument(
        "--score-feature",
        default=None,
        help="use this matrix column directly as the score (e.g. charlson_index)",
    )
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("serve", help="run the HTTP scoring service")
    _add_common(p)
    p.add_argument("--model", default=None, help="logistic model JSON (bundled model when omitted)")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--allow-origin", default=None, help="CORS allowed origin for the survey client")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=os.environ.get("C19_LOG", "INFO").upper(),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        return args.fn(args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (DataError, C19RiskError) as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
