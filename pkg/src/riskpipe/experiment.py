"""Declarative experiment grid: {imputation x binning x sampling x model}
per target, with per-cell lineage, persistence, and table/markdown reports.

Per cell the pipeline is: derive target -> cleanse (policy drops, coded
sentinels, 30% missing rule, constant columns) -> stratified split ->
fit imputation on train, apply to both -> profile -> fit binning on
train, WoE-transform both -> IV filter -> variable clustering -> PoV ->
VIF -> resample the training rows only -> train -> evaluate on test.

The custom-bin imputation arm needs sentinels in place, so its tables
keep the codes until imputation while drop decisions still come from the
recoded view; the median arm recodes first. A `none` entry on the
binning axis runs the no-binning ablation: features pass through raw
after imputation and the WoE-dependent selection stages are skipped.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import binning as binning_mod
from . import impute as impute_mod
from .cleanse import (
    LIST_RULE,
    CodedValueRule,
    DropEntry,
    DropLog,
    detect_coded_table,
    drop_constant,
    drop_high_missing,
    recode_as_missing,
)
from .errors import ConfigError, DataError, RiskpipeError
from .evaluate import EvalReport, evaluate_scores, render_chart
from .learners import (
    GbtParams,
    LogRegParams,
    predict_proba,
    save_model,
    train_gbt,
    train_logreg,
)
from .resample import ResamplePlan, resample
from .select import select_features
from .profile import profile_table, profiles_to_csv
from .table import ModelKind, Table, TargetSpec, derive_target, drop_columns, save_table

CONFIG_VERSION = "riskpipe-config v1"
REPORT_VERSION = "riskpipe-report v1"

NO_BINNING = "none"

_TARGET_MEANINGS = {
    ModelKind.MAIL_OR_DONT: "likely responder with good credit standing",
    ModelKind.RESPONDERS: "responded to the mail campaign",
    ModelKind.CREDIT: "delinquency after the card was opened",
}


@dataclass(frozen=True)
class Thresholds:
    missing: float = 0.30
    iv: float = 0.1
    vif: float = 3.0
    pov: float = 0.99
    varclus_split: float = 1.0


@dataclass
class GridConfig:
    target_kind: ModelKind = ModelKind.RESPONDERS
    goodbad_col: str = "goodbad"
    imputations: list = field(default_factory=lambda: [impute_mod.MEDIAN, impute_mod.CUSTOM_BINS])
    binnings: list = field(default_factory=lambda: [binning_mod.QUANTILE, binning_mod.CATEGORICAL])
    samplings: list = field(default_factory=lambda: ["none", "random_over", "smote"])
    models: list = field(default_factory=lambda: ["logreg", "gbt"])
    train_frac: float = 0.8
    stratified: bool = True
    seed: int = 42
    thresholds: Thresholds = field(default_factory=Thresholds)
    coded_rule: str = LIST_RULE
    policy_drops: list = field(default_factory=list)
    logreg: LogRegParams = field(default_factory=LogRegParams)
    gbt: GbtParams = field(default_factory=GbtParams)
    smote_k: int = 5
    max_prebins: int = 20
    min_bin_frac: float = 0.05
    max_bins: int = 10
    monotonic: str = "auto"
    smoothing: float = 0.5

    def target_spec(self) -> TargetSpec:
        return TargetSpec(self.target_kind, _TARGET_MEANINGS[self.target_kind])

    def merge_constraints(self) -> binning_mod.MergeConstraints:
        return binning_mod.MergeConstraints(self.min_bin_frac, self.max_bins, self.monotonic)

    def validate(self) -> None:
        if not (0.0 < self.train_frac < 1.0):
            raise ConfigError(f"train_frac must be in (0, 1), got {self.train_frac}")
        for axis, allowed in (
            (self.imputations, {impute_mod.MEDIAN, impute_mod.CUSTOM_BINS}),
            (self.binnings, {binning_mod.QUANTILE, binning_mod.CATEGORICAL, NO_BINNING}),
            (self.samplings, {"none", "random_over", "smote"}),
            (self.models, {"logreg", "gbt"}),
        ):
            if not axis:
                raise ConfigError("every grid axis needs at least one value")
            bad = [v for v in axis if v not in allowed]
            if bad:
                raise ConfigError(f"unknown axis value(s) {bad}, allowed {sorted(allowed)}")
            if len(set(axis)) != len(axis):
                raise ConfigError(f"duplicate axis values in {axis}")
        self.merge_constraints()
        th = self.thresholds
        if not (0.0 < th.missing <= 1.0):
            raise ConfigError(f"missing threshold must be in (0, 1], got {th.missing}")
        if th.iv < 0 or th.vif < 1.0 or th.varclus_split <= 0:
            raise ConfigError("iv/vif/varclus thresholds out of range")
        if not (0.0 < th.pov <= 1.0):
            raise ConfigError(f"pov coverage must be in (0, 1], got {th.pov}")


@dataclass(frozen=True)
class SynthConfig:
    rows: int = 20000
    features: int = 30
    informative: int = 10
    nonlinearity: str = "linear"
    coded_rate: float = 0.0
    missing_rate: float = 0.0
    responder_frac: float = 0.248
    bad_frac: float = 0.373


@dataclass
class CellResult:
    imputation: str
    binning: str
    sampling: str
    model: str
    report: EvalReport | None = None
    error_stage: str | None = None
    error: str | None = None
    wall_time: float = 0.0
    best: bool = False

    @property
    def failed(self) -> bool:
        return self.report is None

    def cell_key(self) -> str:
        return f"{self.imputation}-{self.binning}-{self.sampling}"


# -- config file --------------------------------------------------------------
_AXIS_KEYS = {"imputation", "binning", "sampling", "model", "policy_drop"}

_TARGETS = {k.value: k for k in ModelKind}


def parse_config(text: str) -> tuple:
    """Parse the flat key/value config format; returns (GridConfig, SynthConfig)."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != CONFIG_VERSION:
        raise ConfigError(f"config must start with {CONFIG_VERSION!r}")
    raw = {}
    for ln, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"config line {ln}: expected key = value, got {line!r}")
        key = key.strip()
        val = val.strip()
        if key in _AXIS_KEYS:
            raw.setdefault(key, []).append(val)
        elif key in raw:
            raise ConfigError(f"config line {ln}: duplicate key {key}")
        else:
            raw[key] = val
    return build_config(raw)


def _pop(raw, key, cast, default):
    if key not in raw:
        return default
    val = raw.pop(key)
    try:
        return cast(val)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"config key {key}: bad value {val!r}") from err


def _bool(v: str) -> bool:
    if v.lower() in ("true", "1", "yes"):
        return True
    if v.lower() in ("false", "0", "no"):
        return False
    raise ValueError(v)


def build_config(raw: dict) -> tuple:
    raw = dict(raw)
    target = _pop(raw, "target", str, ModelKind.RESPONDERS.value)
    if target not in _TARGETS:
        raise ConfigError(f"unknown target {target!r}, expected one of {sorted(_TARGETS)}")
    grid = GridConfig(
        target_kind=_TARGETS[target],
        goodbad_col=_pop(raw, "goodbad_col", str, "goodbad"),
        imputations=raw.pop("imputation", [impute_mod.MEDIAN, impute_mod.CUSTOM_BINS]),
        binnings=raw.pop("binning", [binning_mod.QUANTILE, binning_mod.CATEGORICAL]),
        samplings=raw.pop("sampling", ["none", "random_over", "smote"]),
        models=raw.pop("model", ["logreg", "gbt"]),
        train_frac=_pop(raw, "train_frac", float, 0.8),
        stratified=_pop(raw, "stratified", _bool, True),
        seed=_pop(raw, "seed", int, 42),
        thresholds=Thresholds(
            missing=_pop(raw, "missing_threshold", float, 0.30),
            iv=_pop(raw, "iv_threshold", float, 0.1),
            vif=_pop(raw, "vif_threshold", float, 3.0),
            pov=_pop(raw, "pov_coverage", float, 0.99),
            varclus_split=_pop(raw, "varclus_split_threshold", float, 1.0),
        ),
        coded_rule=_pop(raw, "coded_rule", str, LIST_RULE),
        policy_drops=raw.pop("policy_drop", []),
        logreg=LogRegParams(
            l2=_pop(raw, "logreg_l2", float, 1e-4),
            max_iter=_pop(raw, "logreg_max_iter", int, 100),
            tol=_pop(raw, "logreg_tol", float, 1e-8),
        ),
        gbt=GbtParams(
            n_trees=_pop(raw, "gbt_trees", int, 200),
            max_depth=_pop(raw, "gbt_depth", int, 4),
            learning_rate=_pop(raw, "gbt_learning_rate", float, 0.1),
            reg_lambda=_pop(raw, "gbt_lambda", float, 1.0),
            gamma=_pop(raw, "gbt_gamma", float, 0.0),
            min_child_weight=_pop(raw, "gbt_min_child_weight", float, 1.0),
        ),
        smote_k=_pop(raw, "smote_k", int, 5),
        max_prebins=_pop(raw, "max_prebins", int, 20),
        min_bin_frac=_pop(raw, "min_bin_frac", float, 0.05),
        max_bins=_pop(raw, "max_bins", int, 10),
        monotonic=_pop(raw, "monotonic", str, "auto"),
        smoothing=_pop(raw, "binning_smoothing", float, 0.5),
    )
    synth = SynthConfig(
        rows=_pop(raw, "synth_rows", int, 20000),
        features=_pop(raw, "synth_features", int, 30),
        informative=_pop(raw, "synth_informative", int, 10),
        nonlinearity=_pop(raw, "synth_nonlinearity", str, "linear"),
        coded_rate=_pop(raw, "synth_coded_rate", float, 0.0),
        missing_rate=_pop(raw, "synth_missing_rate", float, 0.0),
        responder_frac=_pop(raw, "synth_responder_frac", float, 0.248),
        bad_frac=_pop(raw, "synth_bad_frac", float, 0.373),
    )
    if raw:
        raise ConfigError(f"unknown config key(s): {sorted(raw)}")
    grid.validate()
    return grid, synth


def config_echo(grid: GridConfig, synth: SynthConfig | None = None) -> str:
    lines = [
        CONFIG_VERSION,
        f"target = {grid.target_kind.value}",
        f"goodbad_col = {grid.goodbad_col}",
    ]
    lines += [f"imputation = {v}" for v in grid.imputations]
    lines += [f"binning = {v}" for v in grid.binnings]
    lines += [f"sampling = {v}" for v in grid.samplings]
    lines += [f"model = {v}" for v in grid.models]
    lines += [
        f"train_frac = {grid.train_frac!r}",
        f"stratified = {str(grid.stratified).lower()}",
        f"seed = {grid.seed}",
        f"missing_threshold = {grid.thresholds.missing!r}",
        f"iv_threshold = {grid.thresholds.iv!r}",
        f"vif_threshold = {grid.thresholds.vif!r}",
        f"pov_coverage = {grid.thresholds.pov!r}",
        f"varclus_split_threshold = {grid.thresholds.varclus_split!r}",
        f"coded_rule = {grid.coded_rule}",
    ]
    lines += [f"policy_drop = {v}" for v in grid.policy_drops]
    lines += [
        f"logreg_l2 = {grid.logreg.l2!r}",
        f"logreg_max_iter = {grid.logreg.max_iter}",
        f"logreg_tol = {grid.logreg.tol!r}",
        f"gbt_trees = {grid.gbt.n_trees}",
        f"gbt_depth = {grid.gbt.max_depth}",
        f"gbt_learning_rate = {grid.gbt.learning_rate!r}",
        f"gbt_lambda = {grid.gbt.reg_lambda!r}",
        f"gbt_gamma = {grid.gbt.gamma!r}",
        f"gbt_min_child_weight = {grid.gbt.min_child_weight!r}",
        f"smote_k = {grid.smote_k}",
        f"max_prebins = {grid.max_prebins}",
        f"min_bin_frac = {grid.min_bin_frac!r}",
        f"max_bins = {grid.max_bins}",
        f"monotonic = {grid.monotonic}",
        f"binning_smoothing = {grid.smoothing!r}",
    ]
    if synth is not None:
        lines += [
            f"synth_rows = {synth.rows}",
            f"synth_features = {synth.features}",
            f"synth_informative = {synth.informative}",
            f"synth_nonlinearity = {synth.nonlinearity}",
            f"synth_coded_rate = {synth.coded_rate!r}",
            f"synth_missing_rate = {synth.missing_rate!r}",
            f"synth_responder_frac = {synth.responder_frac!r}",
            f"synth_bad_frac = {synth.bad_frac!r}",
        ]
    return "\n".join(lines) + "\n"


# -- pipeline stages -----------------------------------------------------------
def stratified_split(y: np.ndarray, train_frac: float, seed: int, stratified: bool = True):
    rng = np.random.default_rng(seed)
    n = y.size
    train_mask = np.zeros(n, dtype=bool)
    if stratified:
        for cls in (0.0, 1.0):
            idx = np.flatnonzero(y == cls)
            perm = rng.permutation(idx)
            k = int(round(train_frac * idx.size))
            train_mask[perm[:k]] = True
    else:
        perm = rng.permutation(n)
        train_mask[perm[: int(round(train_frac * n))]] = True
    return train_mask


def _keep_predictors(table: Table, names, reason: str) -> Table:
    drop = set(table.predictor_names()) - set(names)
    return drop_columns(table, drop, reason=reason) if drop else table


@dataclass
class PreparedCell:
    imputation: str
    binning: str
    feature_names: list
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray


def cleanse_for_grid(data: Table, grid: GridConfig):
    """Target derivation plus the shared cleansing pass.

    Returns (recoded table for the median arm, coded table for the
    custom arm, detected codes, drop log). Both tables have identical
    columns; drop decisions always come from the recoded view.
    """
    spec = grid.target_spec()
    t = derive_target(data, spec, grid.goodbad_col)
    policy = [c for c in grid.policy_drops if c in t.names()]
    if policy:
        t = drop_columns(t, policy, reason="policy")
    rule = CodedValueRule(pattern=grid.coded_rule)
    codes = detect_coded_table(t, rule)
    recoded = recode_as_missing(t, codes)
    recoded, log_missing = drop_high_missing(recoded, grid.thresholds.missing)
    recoded, log_const = drop_constant(recoded)
    droplog = DropLog()
    for c in policy:
        droplog.entries.append(DropEntry(c, "policy", float("nan")))
    droplog.extend(log_missing)
    droplog.extend(log_const)
    kept = set(recoded.names())
    coded_arm = drop_columns(
        t, set(t.names()) - kept, reason="cleansing"
    ) if set(t.names()) - kept else t
    codes = {k: v for k, v in codes.items() if k in kept}
    return recoded, coded_arm, codes, droplog


def prepare_cell_inputs(
    recoded: Table,
    coded_arm: Table,
    codes: dict,
    train_mask: np.ndarray,
    grid: GridConfig,
    imputation: str,
    binning: str,
    out_dir: Path | None = None,
) -> PreparedCell:
    """Shared preprocessing for all (sampling, model) cells of one
    imputation x binning combination. Fits on training rows only."""
    spec = grid.target_spec()
    base = recoded if imputation == impute_mod.MEDIAN else coded_arm
    train = base.take_rows(np.flatnonzero(train_mask), "split part=train")
    test = base.take_rows(np.flatnonzero(~train_mask), "split part=test")

    imodel = impute_mod.fit_imputation(
        train,
        imputation,
        codes_per_column=codes if imputation == impute_mod.CUSTOM_BINS else None,
        good_label=spec.favorable_label,
    )
    train = impute_mod.apply_imputation(imodel, train)
    test = impute_mod.apply_imputation(imodel, test)

    if binning == NO_BINNING:
        names = train.predictor_names()
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            impute_mod.save_imputation(imodel, out_dir / "imputation.txt")
        return PreparedCell(
            imputation, binning, names,
            train.predictor_matrix(names), train.target_column().values,
            test.predictor_matrix(names), test.target_column().values,
        )

    train, profiles = profile_table(train)
    bmodel = binning_mod.fit_binning(
        train,
        mode=binning,
        max_prebins=grid.max_prebins,
        constraints=grid.merge_constraints(),
        smoothing=grid.smoothing,
        good_label=spec.favorable_label,
    )
    survivors = binning_mod.select_by_iv(bmodel, grid.thresholds.iv)
    train = _keep_predictors(train, survivors, "iv_filter")
    test = _keep_predictors(test, survivors, "iv_filter")
    train = binning_mod.transform(train, bmodel)
    test = binning_mod.transform(test, bmodel)

    sel = select_features(
        train,
        split_threshold=grid.thresholds.varclus_split,
        pov_coverage=grid.thresholds.pov,
        vif_threshold=grid.thresholds.vif,
    )
    names = sel.final_variables
    train = _keep_predictors(train, names, "selection")
    test = _keep_predictors(test, names, "selection")

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        impute_mod.save_imputation(imodel, out_dir / "imputation.txt")
        binning_mod.save_binning(bmodel, out_dir / "binning.txt")
        (out_dir / "selection.csv").write_text(sel.to_csv())
        (out_dir / "pov.svg").write_text(sel.pov_svg())
        (out_dir / "profiles.csv").write_text(profiles_to_csv(profiles))

    return PreparedCell(
        imputation, binning, names,
        train.predictor_matrix(names), train.target_column().values,
        test.predictor_matrix(names), test.target_column().values,
    )


def run_model_cell(
    prep: PreparedCell,
    sampling: str,
    model_name: str,
    grid: GridConfig,
    out_dir: Path | None = None,
) -> CellResult:
    result = CellResult(prep.imputation, prep.binning, sampling, model_name)
    t0 = time.perf_counter()
    stage = "resample"
    try:
        plan = ResamplePlan(sampling, seed=grid.seed, k_neighbors=grid.smote_k)
        X, y, _ = resample(prep.X_train, prep.y_train, plan)
        stage = "train"
        if model_name == "logreg":
            model = train_logreg(X, y, grid.logreg)
        else:
            model = train_gbt(X, y, grid.gbt)
        stage = "evaluate"
        scores = predict_proba(model, prep.X_test)
        result.report = evaluate_scores(scores, prep.y_test)
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            save_model(model, out_dir / f"{model_name}.txt")
            (out_dir / "eval.csv").write_text(result.report.to_csv())
            cell = result.cell_key()
            (out_dir / f"{model_name}_{cell}.roc.svg").write_text(
                render_chart(result.report.roc_points, "roc")
            )
            gain_points = [(0.0, 0.0)] + [
                (frac, capture) for frac, capture, _ in result.report.gain_lift
            ]
            (out_dir / f"{model_name}_{cell}.gain.svg").write_text(
                render_chart(gain_points, "gain")
            )
    except RiskpipeError as err:
        result.error_stage = stage
        result.error = str(err)
    result.wall_time = time.perf_counter() - t0
    return result


def _run_prep_block(args):
    recoded, coded_arm, codes, train_mask, grid, imputation, binning, out_root = args
    prep_dir = Path(out_root) / "cells" / f"{imputation}_{binning}" if out_root else None
    results = []
    try:
        if prep_dir is not None:
            prep_dir.mkdir(parents=True, exist_ok=True)
            base = recoded if imputation == impute_mod.MEDIAN else coded_arm
            train = base.take_rows(np.flatnonzero(train_mask), "split part=train")
            save_table(train, prep_dir / "train_table")
            code_lines = [
                f"{name}\t{','.join(str(c) for c in sorted(cs))}"
                for name, cs in sorted(codes.items())
            ]
            (prep_dir / "codes.txt").write_text("\n".join(code_lines) + "\n")
        prep = prepare_cell_inputs(
            recoded, coded_arm, codes, train_mask, grid, imputation, binning, prep_dir
        )
    except RiskpipeError as err:
        stage = "prepare"
        for sampling in grid.samplings:
            for model_name in grid.models:
                results.append(
                    CellResult(
                        imputation, binning, sampling, model_name,
                        error_stage=stage, error=str(err),
                    )
                )
        return results
    for sampling in grid.samplings:
        for model_name in grid.models:
            cell_dir = (
                prep_dir / f"{sampling}_{model_name}" if prep_dir is not None else None
            )
            results.append(run_model_cell(prep, sampling, model_name, grid, cell_dir))
    return results


def mark_best(results, grid: GridConfig) -> None:
    """Flag the best cell per sampling row: highest AUC, ties broken by
    F1 then accuracy, then column order."""
    for r in results:
        r.best = False
    order = {}
    pos = 0
    for imp in grid.imputations:
        for b in grid.binnings:
            for m in grid.models:
                order[(imp, b, m)] = pos
                pos += 1
    for sampling in grid.samplings:
        row = [r for r in results if r.sampling == sampling and not r.failed]
        if not row:
            continue
        row.sort(
            key=lambda r: (
                -r.report.auc,
                -r.report.f1,
                -r.report.accuracy,
                order[(r.imputation, r.binning, r.model)],
            )
        )
        row[0].best = True


def run_grid(grid: GridConfig, data: Table, out_dir=None, jobs: int = 1):
    """Execute the full cross product; failures abort only their own cells.

    Returns (results, droplog). Reports and charts are written under
    out_dir when given; rerunning with the same config and seed emits
    byte-identical documents.
    """
    grid.validate()
    out_root = Path(out_dir) if out_dir is not None else None
    if out_root is not None:
        out_root.mkdir(parents=True, exist_ok=True)
    recoded, coded_arm, codes, droplog = cleanse_for_grid(data, grid)
    y = recoded.target_column().values
    train_mask = stratified_split(y, grid.train_frac, grid.seed, grid.stratified)

    blocks = [
        (recoded, coded_arm, codes, train_mask, grid, imp, b, str(out_root) if out_root else None)
        for imp in grid.imputations
        for b in grid.binnings
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            block_results = list(pool.map(_run_prep_block, blocks))
    else:
        block_results = [_run_prep_block(b) for b in blocks]

    by_key = {}
    for block in block_results:
        for r in block:
            by_key[(r.imputation, r.binning, r.sampling, r.model)] = r
    results = [
        by_key[(imp, b, s, m)]
        for imp in grid.imputations
        for b in grid.binnings
        for s in grid.samplings
        for m in grid.models
    ]
    mark_best(results, grid)
    if out_root is not None:
        (out_root / "config.txt").write_text(config_echo(grid))
        (out_root / "droplog.csv").write_text(droplog.to_csv())
        (out_root / "report.csv").write_text(emit_report(results, grid, "csv", droplog))
        (out_root / "report.md").write_text(emit_report(results, grid, "markdown", droplog))
    return results, droplog


# -- reports -------------------------------------------------------------------
_METRICS = ("accuracy", "precision", "recall", "f1", "auc")


def _lineage_lines(grid: GridConfig, droplog: DropLog | None):
    lines = [
        f"target={grid.target_kind.value} goodbad_col={grid.goodbad_col} "
        f"seed={grid.seed} train_frac={grid.train_frac} "
        f"stratified={str(grid.stratified).lower()} threshold=0.5",
        f"thresholds missing={grid.thresholds.missing} iv={grid.thresholds.iv} "
        f"vif={grid.thresholds.vif} pov={grid.thresholds.pov} "
        f"varclus_split={grid.thresholds.varclus_split}",
        f"logreg l2={grid.logreg.l2} max_iter={grid.logreg.max_iter} tol={grid.logreg.tol}",
        f"gbt n_trees={grid.gbt.n_trees} max_depth={grid.gbt.max_depth} "
        f"learning_rate={grid.gbt.learning_rate} reg_lambda={grid.gbt.reg_lambda} "
        f"gamma={grid.gbt.gamma} min_child_weight={grid.gbt.min_child_weight}",
        f"binning max_prebins={grid.max_prebins} min_bin_frac={grid.min_bin_frac} "
        f"max_bins={grid.max_bins} monotonic={grid.monotonic} smoothing={grid.smoothing}",
        f"smote k={grid.smote_k} coded_rule={grid.coded_rule}",
    ]
    if droplog is not None and droplog.entries:
        drops = " ".join(f"{e.column}:{e.reason}" for e in droplog.entries)
        lines.append(f"drops {drops}")
    return lines


def emit_report(results, grid: GridConfig, fmt: str = "csv", droplog=None) -> str:
    """Comparison matrix: sampling rows x (imputation x binning x model)
    columns, five metrics per cell, best cell per row flagged."""
    if not results:
        raise DataError("emit_report needs at least one result")
    by_key = {(r.imputation, r.binning, r.sampling, r.model): r for r in results}
    columns = [
        (imp, b, m)
        for imp in grid.imputations
        for b in grid.binnings
        for m in grid.models
    ]
    if fmt == "csv":
        lines = [f"# {REPORT_VERSION}"]
        lines += [f"# {ln}" for ln in _lineage_lines(grid, droplog)]
        header = ["sampling", "metric"] + ["|".join(col) for col in columns]
        lines.append(",".join(header))
        for sampling in grid.samplings:
            for metric in _METRICS:
                row = [sampling, metric]
                for col in columns:
                    r = by_key.get((*col[:2], sampling, col[2]))
                    if r is None:
                        row.append("")
                    elif r.failed:
                        row.append(f"FAILED({r.error_stage})")
                    else:
                        row.append(f"{r.report.metric_row()[metric]:.2f}")
                lines.append(",".join(row))
            row = [sampling, "best"]
            for col in columns:
                r = by_key.get((*col[:2], sampling, col[2]))
                row.append("1" if r is not None and r.best else "0")
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        lines = [f"# Experiment results: {grid.target_kind.value} model", ""]
        header = "| sampling | " + " | ".join("/".join(col) for col in columns) + " |"
        sep = "| --- |" + " --- |" * len(columns)
        lines += [header, sep]
        for sampling in grid.samplings:
            cells = []
            for col in columns:
                r = by_key.get((*col[:2], sampling, col[2]))
                if r is None:
                    cells.append("")
                    continue
                if r.failed:
                    cells.append(f"FAILED({r.error_stage})")
                    continue
                m = r.report.metric_row()
                text = "<br>".join(f"{k} {m[k]:.2f}" for k in _METRICS)
                cells.append(f"**{text}**" if r.best else text)
            lines.append(f"| {sampling} | " + " | ".join(cells) + " |")
        lines += ["", "## Lineage", ""]
        lines += [f"- {ln}" for ln in _lineage_lines(grid, droplog)]
        return "\n".join(lines) + "\n"
    raise ConfigError(f"unknown report format {fmt!r}")
