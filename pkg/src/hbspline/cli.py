"""Command-line interface: fit, predict, bench, theory, hilbert.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure.  Every data-producing command writes a manifest
JSON beside its output recording the command, a hash of its effective
configuration, the seed, and any warnings; all outputs are
bit-reproducible given the same flags and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from .bench import ExperimentConfig, run_experiment
from .errors import HbsplineError, IngestionError, InvalidConfigError
from .hilbert import CurveOrder, decode, encode, point_to_index
from .ingest import (
    append_prediction_csv,
    load_json_config,
    read_numeric_csv,
    write_manifest,
)
from .kernels import AnovaSpec, default_spec
from .selection import SelectionConfig, condition5_diagnostic, scale_to_unit_cube, select
from .solver import (
    LambdaGrid,
    fit_fixed_lambda,
    gcv_select,
    load_model,
    model_predictor_names,
    predict_with_diagnostics,
    save_model,
)
from .theory import variance_scaling_study

# Beyond this dimension the all-pairs default would add d*(d-1)/2
# interaction terms; an explicit spec is required instead.
AUTO_INTERACTION_MAX_D = 7


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _build_parser() -> _Parser:
    parser = _Parser(prog="hbspline", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_fit = sub.add_parser("fit", help="fit a model on a CSV file")
    p_fit.add_argument("--data", required=True, help="training CSV with header")
    p_fit.add_argument("--response", required=True, help="response column name")
    p_fit.add_argument(
        "--method", default="hbs", choices=["hbs", "ubs", "abs", "sbs"]
    )
    p_fit.add_argument("--q", type=int, required=True, help="basis size")
    p_fit.add_argument("--C", type=int, default=None, help="histogram bins (hbs)")
    p_fit.add_argument("--k", type=int, default=None, help="curve order (hbs)")
    p_fit.add_argument("--predictors", default=None, help="comma-separated columns")
    p_fit.add_argument("--spec", default=None, help="JSON term-structure file")
    p_fit.add_argument(
        "--lambda", dest="lam", type=float, default=None,
        help="fixed smoothing parameter (default: GCV search)",
    )
    p_fit.add_argument("--gcv", action="store_true", help="force GCV search")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--out", required=True, help="model JSON path")

    p_pred = sub.add_parser("predict", help="apply a saved model to a CSV")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--data", required=True)
    p_pred.add_argument("--out", required=True)

    p_bench = sub.add_parser("bench", help="run a benchmark config")
    p_bench.add_argument("--config", required=True, help="experiment JSON")
    p_bench.add_argument("--out", required=True, help="results CSV")
    p_bench.add_argument(
        "--jobs", type=int, default=None,
        help="worker processes (default: HBSPLINE_JOBS or 1)",
    )
    p_bench.add_argument(
        "--timings", action="store_true",
        help="record wall-clock fit times (makes output machine-dependent)",
    )

    p_theory = sub.add_parser("theory", help="variance scaling study")
    p_theory.add_argument("--dist", required=True, choices=["d1", "d2", "d3", "d4"])
    p_theory.add_argument("--dim", type=int, required=True)
    p_theory.add_argument("--out", required=True, help="report CSV")
    p_theory.add_argument("--replicates", type=int, default=200)
    p_theory.add_argument("--n", type=int, default=100_000)
    p_theory.add_argument("--q-list", default=None, help="comma-separated bin counts")
    p_theory.add_argument("--seed", type=int, default=0)

    p_hil = sub.add_parser("hilbert", help="curve debugging")
    p_hil.add_argument("action", choices=["encode", "decode", "index"])
    p_hil.add_argument("--d", type=int, required=True)
    p_hil.add_argument("--k", type=int, required=True)
    p_hil.add_argument("--cell", default=None, help="comma-separated coordinates")
    p_hil.add_argument("--index", type=int, default=None)
    p_hil.add_argument("--point", default=None, help="comma-separated floats")

    return parser


def _load_spec(path, d: int) -> AnovaSpec:
    obj = load_json_config(path)
    unknown = set(obj) - {"main_effects", "interactions", "term_scales", "d"}
    if unknown:
        raise InvalidConfigError(f"unknown spec keys: {sorted(unknown)}")
    return AnovaSpec(
        d=int(obj.get("d", d)),
        main_effects=tuple(obj.get("main_effects", range(d))),
        interactions=tuple(tuple(p) for p in obj.get("interactions", ())),
        term_scales=(
            tuple(obj["term_scales"]) if obj.get("term_scales") is not None else None
        ),
    )


def _cmd_fit(args) -> int:
    started = _now()
    predictors = args.predictors.split(",") if args.predictors else None
    X, y, names = read_numeric_csv(args.data, response=args.response, predictors=predictors)
    if not X:
        raise IngestionError(f"{args.data}: no data rows to fit on")
    data = scale_to_unit_cube(np.asarray(X), np.asarray(y))
    if args.spec:
        spec = _load_spec(args.spec, data.d)
    else:
        spec = default_spec(data.d, with_interactions=data.d <= AUTO_INTERACTION_MAX_D)
    cfg = SelectionConfig(
        q=args.q, method=args.method, seed=args.seed, C=args.C, k=args.k
    )
    sel = select(data, cfg)
    if args.lam is not None and not args.gcv:
        model = fit_fixed_lambda(data, sel, spec, args.lam)
    else:
        model = gcv_select(data, sel, spec, LambdaGrid())
    save_model(model, args.out, predictors=names)
    warnings = {}
    if model.diagnostics.get("jitter"):
        warnings["jitter"] = model.diagnostics["jitter"]
    if args.method == "hbs":
        warnings["bin_balance"] = condition5_diagnostic(data, cfg)
    config = {
        "data": args.data,
        "response": args.response,
        "predictors": names,
        "method": args.method,
        "q": args.q,
        "C": args.C,
        "k": args.k,
        "spec": args.spec,
        "lambda": args.lam,
        "seed": args.seed,
    }
    write_manifest(args.out, "fit", config, args.seed, warnings, started)
    print(
        f"fit: n={data.n} d={data.d} q={sel.q} method={args.method} "
        f"lambda={model.lam:.6g} gcv={model.gcv_score:.6g} -> {args.out}"
    )
    return 0


def _cmd_predict(args) -> int:
    started = _now()
    model = load_model(args.model)
    names = model_predictor_names(args.model)
    X, _, used = read_numeric_csv(args.data, predictors=names)
    d = model.scaler.shape[1]
    arr = np.asarray(X, dtype=np.float64) if X else np.empty((0, d))
    if arr.shape[0] and arr.shape[1] != d:
        raise IngestionError(
            f"{args.data}: {arr.shape[1]} predictor columns, model expects {d}"
        )
    preds, clamped = predict_with_diagnostics(model, arr)
    append_prediction_csv(args.data, args.out, preds)
    warnings = {"clamped_coordinates": clamped} if clamped else {}
    config = {"model": args.model, "data": args.data, "predictors": used}
    write_manifest(args.out, "predict", config, None, warnings, started)
    print(f"predict: {len(preds)} rows -> {args.out}")
    return 0


_BENCH_KEYS = {
    "distribution", "function", "n", "n_test", "q_grid", "methods",
    "replicates", "snr", "seed", "full_cap", "d2_variant",
}


def _cmd_bench(args) -> int:
    started = _now()
    obj = load_json_config(args.config)
    problems = []
    if not isinstance(obj, dict):
        raise InvalidConfigError(f"{args.config}: expected a JSON object")
    unknown = set(obj) - _BENCH_KEYS
    if unknown:
        problems.append(f"unknown keys: {sorted(unknown)}")
    for key in ("distribution", "function"):
        if key not in obj:
            problems.append(f"missing key: {key}")
    if problems:
        raise InvalidConfigError(f"{args.config}: " + "; ".join(problems))
    kwargs = dict(obj)
    for tuple_key in ("q_grid", "methods"):
        if tuple_key in kwargs:
            kwargs[tuple_key] = tuple(kwargs[tuple_key])
    cfg = ExperimentConfig(**kwargs)
    jobs = args.jobs
    if jobs is None:
        jobs = int(os.environ.get("HBSPLINE_JOBS", "1"))
    result = run_experiment(cfg, jobs=max(jobs, 1), timings=args.timings)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(result.to_csv())
    failures = sum(1 for r in result.rows if not np.isfinite(r.mse))
    warnings = {"failed_cells": failures} if failures else {}
    write_manifest(args.out, "bench", obj, cfg.seed, warnings, started)
    print(
        f"bench: {len(result.rows)} rows ({failures} failed) "
        f"sigma={result.sigma:.6g} -> {args.out}"
    )
    return 0


def _cmd_theory(args) -> int:
    started = _now()
    q_list = None
    if args.q_list:
        q_list = tuple(int(v) for v in args.q_list.split(","))
    kwargs = {}
    if q_list is not None:
        kwargs["q_list"] = q_list
    report = variance_scaling_study(
        args.dist,
        args.dim,
        replicates=args.replicates,
        seed=args.seed,
        n=args.n,
        **kwargs,
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
    config = {
        "dist": args.dist,
        "dim": args.dim,
        "replicates": args.replicates,
        "n": args.n,
        "q_list": list(report.q_list),
        "seed": args.seed,
    }
    write_manifest(args.out, "theory", config, args.seed, {}, started)
    print(report.summary())
    print(f"theory: report -> {args.out}")
    return 0


def _parse_ints(text, what):
    try:
        return [int(v) for v in text.split(",")]
    except (ValueError, AttributeError):
        raise InvalidConfigError(f"--{what} expects comma-separated values") from None


def _cmd_hilbert(args) -> int:
    order = CurveOrder(k=args.k, d=args.d)
    if args.action == "encode":
        if args.cell is None:
            raise InvalidConfigError("encode requires --cell")
        cell = _parse_ints(args.cell, "cell")
        print(encode(np.asarray(cell), order))
    elif args.action == "decode":
        if args.index is None:
            raise InvalidConfigError("decode requires --index")
        coords = decode(args.index, order)
        print(" ".join(str(int(c)) for c in coords))
    else:
        if args.point is None:
            raise InvalidConfigError("index requires --point")
        try:
            point = [float(v) for v in args.point.split(",")]
        except ValueError:
            raise InvalidConfigError("--point expects comma-separated floats") from None
        print(point_to_index(np.asarray(point), order))
    return 0


_COMMANDS = {
    "fit": _cmd_fit,
    "predict": _cmd_predict,
    "bench": _cmd_bench,
    "theory": _cmd_theory,
    "hilbert": _cmd_hilbert,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except HbsplineError as exc:
        print(f"hbspline {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
