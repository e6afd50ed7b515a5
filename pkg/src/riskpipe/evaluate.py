"""Classification metrics and figure-shaped outputs: confusion metrics at
a fixed threshold, ROC/AUC with tie grouping, decile gain/lift tables,
and deterministic SVG charts.

Metric values are percentages (two decimals in reports) to match the
comparison-table convention. AUC integrates the tie-grouped ROC with
trapezoids over exact integer counts, so it equals pairwise concordance
(half credit for score ties) to the last bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass
class EvalReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float
    threshold: float
    confusion: tuple  # (tp, fp, tn, fn)
    roc_points: list = field(default_factory=list)
    gain_lift: list = field(default_factory=list)  # (cum_pop_frac, cum_capture, lift)

    def metric_row(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
        }

    def to_csv(self) -> str:
        lines = ["metric,value"]
        for k, v in self.metric_row().items():
            lines.append(f"{k},{v:.2f}")
        tp, fp, tn, fn = self.confusion
        lines.append(f"threshold,{self.threshold!r}")
        lines.append(f"tp,{tp}")
        lines.append(f"fp,{fp}")
        lines.append(f"tn,{tn}")
        lines.append(f"fn,{fn}")
        for frac, capture, lift in self.gain_lift:
            lines.append(f"gain,{frac!r},{capture!r}")
            lines.append(f"lift,{frac!r},{lift!r}")
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        tp, fp, tn, fn = self.confusion
        rows = [
            "| metric | value |",
            "| --- | --- |",
        ]
        for k, v in self.metric_row().items():
            rows.append(f"| {k} | {v:.2f} |")
        rows.append(f"| threshold | {self.threshold} |")
        rows.append(f"| confusion tp/fp/tn/fn | {tp}/{fp}/{tn}/{fn} |")
        return "\n".join(rows) + "\n"


def _check_scores(scores, y):
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if scores.shape != y.shape or scores.ndim != 1:
        raise DataError("scores and labels must be 1-d and the same length")
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataError("labels must be binary 0/1")
    return scores, y


def confusion_metrics(scores, y, threshold: float = 0.5):
    """Confusion counts and percentage metrics at a fixed threshold.

    Predict positive when score >= threshold. Precision defaults to 0
    when nothing is predicted positive.
    """
    scores, y = _check_scores(scores, y)
    pred = scores >= threshold
    pos = y == 1.0
    tp = int((pred & pos).sum())
    fp = int((pred & ~pos).sum())
    fn = int((~pred & pos).sum())
    tn = int((~pred & ~pos).sum())
    n = y.size
    accuracy = 100.0 * (tp + tn) / n
    precision = 100.0 * tp / (tp + fp) if (tp + fp) > 0 else 0.0
    recall = 100.0 * tp / (tp + fn) if (tp + fn) > 0 else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if (precision + recall) > 0
        else 0.0
    )
    return (tp, fp, tn, fn), accuracy, precision, recall, f1


def roc_auc(scores, y):
    """ROC points and AUC (percent) by descending threshold sweep.

    Equal scores collapse into one sweep step, which equals giving half
    credit to tied positive/negative pairs.
    """
    scores, y = _check_scores(scores, y)
    P = int((y == 1.0).sum())
    N = int((y == 0.0).sum())
    if P == 0 or N == 0:
        raise DataError("roc_auc needs both classes present")
    order = np.argsort(-scores, kind="stable")
    ys = y[order]
    ss = scores[order]
    # group boundaries where the score changes
    step_end = np.flatnonzero(np.diff(ss) != 0.0)
    ends = np.concatenate([step_end + 1, [ss.size]])
    tp_cum = np.cumsum(ys)[ends - 1]
    fp_cum = ends - tp_cum
    roc_points = [(0.0, 0.0)]
    area2 = 0.0
    prev_tp = 0.0
    prev_fp = 0.0
    for k in range(ends.size):
        tp = float(tp_cum[k])
        fp = float(fp_cum[k])
        area2 += (fp - prev_fp) * (prev_tp + tp)
        roc_points.append((fp / N, tp / P))
        prev_tp, prev_fp = tp, fp
    auc = 100.0 * (area2 / (2.0 * P * N))
    return roc_points, auc


def gain_lift(scores, y, n_buckets: int = 10):
    """Decile table: (cumulative population fraction, cumulative capture
    of positives, lift), after a stable sort by descending score."""
    scores, y = _check_scores(scores, y)
    n = y.size
    if n_buckets > n:
        raise DataError(f"n_buckets={n_buckets} exceeds {n} rows")
    total_pos = float((y == 1.0).sum())
    if total_pos == 0 or total_pos == n:
        raise DataError("gain_lift needs both classes present")
    order = np.argsort(-scores, kind="stable")
    ys = y[order]
    base = n // n_buckets
    extra = n % n_buckets
    sizes = [base + 1 if k < extra else base for k in range(n_buckets)]
    out = []
    taken = 0
    captured = 0.0
    for size in sizes:
        captured += float(ys[taken : taken + size].sum())
        taken += size
        pop_frac = taken / n
        capture = captured / total_pos
        out.append((pop_frac, capture, capture / pop_frac))
    return out


# -- charts -------------------------------------------------------------------
_CHART_META = {
    "roc": ("ROC curve", "false positive rate", "true positive rate", True),
    "gain": ("Cumulative gain", "population fraction", "capture of positives", True),
    "pov": ("Proportion of variance", "variables", "cumulative variance", False),
}

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 40, 50


def _sx(x):
    return _ML + x * (_W - _ML - _MR)


def _sy(y):
    return _H - _MB - y * (_H - _MT - _MB)


def render_chart(curve, kind: str) -> str:
    """Standalone deterministic SVG: axes, tick marks, one series
    polyline, plus a diagonal baseline for roc/gain."""
    if kind not in _CHART_META:
        raise DataError(f"unknown chart kind {kind!r}")
    points = [(float(x), float(y)) for x, y in curve]
    if not points:
        raise DataError("render_chart needs a non-empty curve")
    title, xlabel, ylabel, baseline = _CHART_META[kind]
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    xmax = max(max(xs), 1.0)
    ymax = max(max(ys), 1.0)
    norm = [(x / xmax, y / ymax) for x, y in points]

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{_sx(0):.1f}" y1="{_sy(0):.1f}" x2="{_sx(1):.1f}" y2="{_sy(0):.1f}" stroke="black"/>',
        f'<line x1="{_sx(0):.1f}" y1="{_sy(0):.1f}" x2="{_sx(0):.1f}" y2="{_sy(1):.1f}" stroke="black"/>',
    ]
    for k in range(5):
        t = k / 4.0
        parts.append(
            f'<line x1="{_sx(t):.1f}" y1="{_sy(0):.1f}" x2="{_sx(t):.1f}" '
            f'y2="{_sy(0) + 5:.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_sx(t):.1f}" y="{_sy(0) + 20:.1f}" text-anchor="middle" '
            f'font-size="11">{t * xmax:.2f}</text>'
        )
        parts.append(
            f'<line x1="{_sx(0):.1f}" y1="{_sy(t):.1f}" x2="{_sx(0) - 5:.1f}" '
            f'y2="{_sy(t):.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_sx(0) - 9:.1f}" y="{_sy(t) + 4:.1f}" text-anchor="end" '
            f'font-size="11">{t * ymax:.2f}</text>'
        )
    parts.append(
        f'<text x="{(_sx(0) + _sx(1)) / 2:.1f}" y="{_H - 12}" text-anchor="middle" '
        f'font-size="13">{xlabel}</text>'
    )
    parts.append(
        f'<text x="18" y="{(_sy(0) + _sy(1)) / 2:.1f}" text-anchor="middle" '
        f'font-size="13" transform="rotate(-90 18 {(_sy(0) + _sy(1)) / 2:.1f})">{ylabel}</text>'
    )
    if baseline:
        parts.append(
            f'<polyline fill="none" stroke="#999999" stroke-dasharray="4 3" '
            f'points="{_sx(0):.1f},{_sy(0):.1f} {_sx(1):.1f},{_sy(1):.1f}"/>'
        )
    series = " ".join(f"{_sx(x):.4f},{_sy(y):.4f}" for x, y in norm)
    parts.append(f'<polyline fill="none" stroke="#1f5fa8" stroke-width="2" points="{series}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def evaluate_scores(scores, y, threshold: float = 0.5, n_buckets: int = 10) -> EvalReport:
    confusion, accuracy, precision, recall, f1 = confusion_metrics(scores, y, threshold)
    roc_points, auc = roc_auc(scores, y)
    table = gain_lift(scores, y, min(n_buckets, len(y)))
    return EvalReport(
        accuracy, precision, recall, f1, auc, threshold, confusion, roc_points, table
    )
