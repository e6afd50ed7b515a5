"""Command line interface.

Subcommands mirror the pipeline stages (ingest, clean, impute, bin,
select, sample, train, evaluate) plus the grid runner, the synthetic
data generator, and report re-rendering. Exit codes: 0 success,
1 configuration error, 2 data error, 3 grid completed with failed cells.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import binning as binning_mod
from . import impute as impute_mod
from .cleanse import (
    CodedValueRule,
    detect_coded_table,
    drop_constant,
    drop_high_missing,
    recode_as_missing,
)
from .errors import ConfigError, DataError, RiskpipeError
from .evaluate import evaluate_scores, render_chart
from .experiment import (
    GridConfig,
    SynthConfig,
    config_echo,
    emit_report,
    mark_best,
    parse_config,
    run_grid,
)
from .learners import load_model, predict_proba, save_model, train_gbt, train_logreg
from .resample import ResamplePlan, resample
from .select import select_features
from .synth import SyntheticSpec, generate_synthetic
from .table import (
    Column,
    ColumnKind,
    Table,
    load_csv,
    load_table,
    save_table,
    write_csv,
)

PROTECTED_DEFAULT = "goodbad,target"


def _load_config(args):
    if getattr(args, "config", None):
        text = Path(args.config).read_text()
        grid, synth = parse_config(text)
    else:
        grid, synth = GridConfig(), SynthConfig()
    if getattr(args, "seed", None) is not None:
        grid.seed = args.seed
    return grid, synth


def _read_table(path) -> Table:
    p = Path(path)
    if p.is_dir():
        return load_table(p)
    return load_csv(p)


def _write_eval_outputs(report, out_dir: Path, model_name: str, cell: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "eval.csv").write_text(report.to_csv())
    (out_dir / "eval.md").write_text(report.to_markdown())
    (out_dir / f"{model_name}_{cell}.roc.svg").write_text(
        render_chart(report.roc_points, "roc")
    )
    gain_points = [(0.0, 0.0)] + [(f, c) for f, c, _ in report.gain_lift]
    (out_dir / f"{model_name}_{cell}.gain.svg").write_text(
        render_chart(gain_points, "gain")
    )


def cmd_synth(args):
    grid, synth = _load_config(args)
    spec = SyntheticSpec(
        n_rows=synth.rows,
        n_features=synth.features,
        n_informative=synth.informative,
        nonlinearity=synth.nonlinearity,
        coded_rate=synth.coded_rate,
        missing_rate=synth.missing_rate,
        responder_frac=synth.responder_frac,
        bad_frac_among_responders=synth.bad_frac,
        seed=grid.seed,
    )
    table = generate_synthetic(spec)
    out = Path(args.out)
    if args.format == "csv":
        write_csv(table, out)
    else:
        save_table(table, out)
    print(f"wrote {table.n_rows} rows x {len(table.columns)} columns to {out}")
    return 0


def cmd_ingest(args):
    tokens = frozenset([""] + (args.missing_token or []))
    table = load_csv(args.input, tokens)
    save_table(table, args.out)
    print(f"ingested {table.n_rows} rows x {len(table.columns)} columns")
    return 0


def cmd_clean(args):
    grid, _ = _load_config(args)
    table = _read_table(args.input)
    protected = {s for s in args.protect.split(",") if s}
    rule = CodedValueRule(pattern=grid.coded_rule)
    codes = {
        k: v
        for k, v in detect_coded_table(table, rule).items()
        if k not in protected
    }
    table = recode_as_missing(table, codes)
    protected_cols = tuple(c for c in table.columns if c.name in protected)
    body = Table(
        tuple(c for c in table.columns if c.name not in protected),
        table.n_rows,
        table.provenance,
    )
    body, log1 = drop_high_missing(body, grid.thresholds.missing)
    body, log2 = drop_constant(body)
    log1.extend(log2)
    merged = Table(body.columns + protected_cols, body.n_rows, body.provenance)
    save_table(merged, args.out)
    out_dir = Path(args.out)
    (out_dir / "droplog.csv").write_text(log1.to_csv())
    print(f"kept {len(merged.columns)} columns, dropped {len(log1.entries)}")
    return 0


def cmd_impute(args):
    grid, _ = _load_config(args)
    table = _read_table(args.input)
    codes = None
    if args.strategy == impute_mod.CUSTOM_BINS:
        rule = CodedValueRule(pattern=grid.coded_rule)
        codes = detect_coded_table(table, rule)
    model = impute_mod.fit_imputation(
        table,
        args.strategy,
        codes_per_column=codes,
        good_label=grid.target_spec().favorable_label,
    )
    out = impute_mod.apply_imputation(model, table)
    save_table(out, args.out)
    impute_mod.save_imputation(model, Path(args.out) / "imputation.txt")
    print(f"imputed with strategy={args.strategy}")
    return 0


def cmd_bin(args):
    grid, _ = _load_config(args)
    table = _read_table(args.input)
    model = binning_mod.fit_binning(
        table,
        mode=args.mode,
        max_prebins=grid.max_prebins,
        constraints=grid.merge_constraints(),
        smoothing=grid.smoothing,
        good_label=grid.target_spec().favorable_label,
    )
    out = binning_mod.transform(table, model)
    save_table(out, args.out)
    binning_mod.save_binning(model, Path(args.out) / "binning.txt")
    ivs = sorted(model.iv_table().items(), key=lambda kv: -kv[1])
    for name, iv in ivs:
        print(f"{name}\tIV={iv:.6f}")
    return 0


def cmd_select(args):
    grid, _ = _load_config(args)
    table = _read_table(args.input)
    report = select_features(
        table,
        split_threshold=grid.thresholds.varclus_split,
        pov_coverage=grid.thresholds.pov,
        vif_threshold=grid.thresholds.vif,
    )
    keep = set(report.final_variables) | {
        c.name for c in table.columns if c.kind is ColumnKind.TARGET
    }
    out = Table(
        tuple(c for c in table.columns if c.name in keep),
        table.n_rows,
        table.provenance + (f"selection kept={len(report.final_variables)}",),
    )
    save_table(out, args.out)
    out_dir = Path(args.out)
    (out_dir / "selection.csv").write_text(report.to_csv())
    (out_dir / "pov.svg").write_text(report.pov_svg())
    print(f"selected {len(report.final_variables)} variables: "
          + ",".join(report.final_variables))
    return 0


def cmd_sample(args):
    grid, _ = _load_config(args)
    table = _read_table(args.input)
    y = table.target_column().values
    names = table.predictor_names()
    X = table.predictor_matrix(names)
    plan = ResamplePlan(args.method, seed=grid.seed, k_neighbors=grid.smote_k)
    X2, y2, _ = resample(X, y, plan)
    n2 = y2.size
    cols = [
        Column(name, X2[:, j], np.zeros(n2, dtype=bool))
        for j, name in enumerate(names)
    ]
    cols.append(Column("target", y2, np.zeros(n2, dtype=bool), ColumnKind.TARGET))
    out = Table(
        tuple(cols), n2, table.provenance + (f"resample method={args.method} rows={n2}",)
    )
    save_table(out, args.out)
    print(f"resampled to {n2} rows")
    return 0


def cmd_train(args):
    grid, _ = _load_config(args)
    table = _read_table(args.input)
    y = table.target_column().values
    X = table.predictor_matrix()
    if args.model == "logreg":
        model = train_logreg(X, y, grid.logreg)
    else:
        model = train_gbt(X, y, grid.gbt)
    save_model(model, args.out)
    print(f"trained {args.model} on {X.shape[0]} rows x {X.shape[1]} features")
    return 0


def cmd_evaluate(args):
    table = _read_table(args.input)
    model = load_model(args.model)
    y = table.target_column().values
    X = table.predictor_matrix()
    scores = predict_proba(model, X)
    report = evaluate_scores(scores, y)
    name = Path(args.model).stem
    _write_eval_outputs(report, Path(args.out), name, "eval")
    for k, v in report.metric_row().items():
        print(f"{k}\t{v:.2f}")
    return 0


def cmd_grid(args):
    grid, _ = _load_config(args)
    table = _read_table(args.data)
    results, _ = run_grid(grid, table, out_dir=args.out_dir, jobs=args.jobs)
    failed = [r for r in results if r.failed]
    for r in results:
        status = (
            f"FAILED({r.error_stage})" if r.failed else f"auc={r.report.auc:.2f}"
        )
        flag = " *" if r.best else ""
        print(f"{r.imputation}/{r.binning}/{r.sampling}/{r.model}\t{status}{flag}")
    if failed:
        print(f"{len(failed)} of {len(results)} cells failed", file=sys.stderr)
        return 3
    return 0


def cmd_report(args):
    # re-render from a persisted grid run directory
    import csv as _csv

    from .evaluate import EvalReport

    grid, _ = _load_config(args)
    run_dir = Path(args.results)
    cfg = run_dir / "config.txt"
    if cfg.is_file():
        grid, _ = parse_config(cfg.read_text())
    results = []
    for prep_dir in sorted((run_dir / "cells").iterdir()):
        if not prep_dir.is_dir():
            continue
        imputation, _, binning = prep_dir.name.partition("_")
        for cell_dir in sorted(prep_dir.iterdir()):
            if not cell_dir.is_dir() or cell_dir.name == "train_table":
                continue
            sampling, _, model_name = cell_dir.name.rpartition("_")
            eval_csv = cell_dir / "eval.csv"
            from .experiment import CellResult

            if not eval_csv.is_file():
                results.append(
                    CellResult(imputation, binning, sampling, model_name,
                               error_stage="missing", error="no eval.csv")
                )
                continue
            metrics = {}
            confusion = {}
            for row in _csv.reader(eval_csv.read_text().splitlines()[1:]):
                if row[0] in ("accuracy", "precision", "recall", "f1", "auc"):
                    metrics[row[0]] = float(row[1])
                elif row[0] in ("tp", "fp", "tn", "fn"):
                    confusion[row[0]] = int(row[1])
                elif row[0] == "threshold":
                    metrics["threshold"] = float(row[1])
            report = EvalReport(
                metrics["accuracy"], metrics["precision"], metrics["recall"],
                metrics["f1"], metrics["auc"], metrics.get("threshold", 0.5),
                (confusion["tp"], confusion["fp"], confusion["tn"], confusion["fn"]),
            )
            results.append(
                CellResult(imputation, binning, sampling, model_name, report=report)
            )
    if not results:
        raise DataError(f"{run_dir}: no persisted cells found")
    mark_best(results, grid)
    doc = emit_report(results, grid, args.format)
    out = Path(args.out) if args.out else None
    if out:
        out.write_text(doc)
        print(f"wrote {out}")
    else:
        print(doc, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskpipe",
        description="Credit-risk scorecard pipeline and experiment grid runner",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out-dir", default="riskpipe-out", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers for grid cells")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "table"], default="csv")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", parents=[common], help="CSV -> native table artifact")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--missing-token", action="append")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("clean", parents=[common], help="recode sentinels, drop columns")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--protect", default=PROTECTED_DEFAULT,
                   help="comma-separated columns exempt from cleansing")
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("impute", parents=[common], help="fill missing values")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strategy", choices=[impute_mod.MEDIAN, impute_mod.CUSTOM_BINS],
                   default=impute_mod.MEDIAN)
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("bin", parents=[common], help="fit optimal bins, WoE-transform")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=[binning_mod.QUANTILE, binning_mod.CATEGORICAL],
                   default=binning_mod.QUANTILE)
    p.set_defaults(func=cmd_bin)

    p = sub.add_parser("select", parents=[common], help="cluster, PoV, VIF selection")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("sample", parents=[common], help="rebalance training data")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=["random_over", "smote"], default="random_over")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", parents=[common], help="train a classifier")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", choices=["logreg", "gbt"], default="logreg")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="score a table, emit metrics")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grid", parents=[common], help="run the full experiment grid")
    p.add_argument("--data", required=True, help="input CSV or table artifact")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("report", parents=[common], help="re-render a grid report")
    p.add_argument("--results", required=True, help="grid output directory")
    p.add_argument("--format", choices=["csv", "markdown"], default="markdown")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("config", parents=[common], help="print the effective config")
    p.set_defaults(func=lambda a: (print(config_echo(*_load_config(a)), end=""), 0)[1])

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except RiskpipeError as err:
        print(f"data error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
