"""Accuracy metrics for predicted wrenches and their text/CSV reports.

Rows follow the usual F/T accuracy table: force x, y, z and magnitude, then
torque x, y, z and magnitude.  Magnitude error is
``| ||pred|| - ||truth|| |`` per frame.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import DegenerateTruthError, InvalidRangeError

__all__ = [
    "MetricRow",
    "CurveRow",
    "MetricsReport",
    "ROW_NAMES",
    "DEFAULT_FORCE_BINS",
    "DEFAULT_TORQUE_BINS",
    "axis_metrics",
    "compute_metrics",
    "binned_error_curve",
    "format_value",
    "render_report",
    "parse_report",
    "trace_csv",
]

ROW_NAMES = (
    ("Force x", "N"),
    ("Force y", "N"),
    ("Force z", "N"),
    ("Force magnitude", "N"),
    ("Torque x", "Nmm"),
    ("Torque y", "Nmm"),
    ("Torque z", "Nmm"),
    ("Torque magnitude", "Nmm"),
)
DEFAULT_FORCE_BINS = np.linspace(0.0, 2.5, 11)  # 0.25 N
DEFAULT_TORQUE_BINS = np.linspace(0.0, 250.0, 21)  # 12.5 N*mm
# truth variance at or below this is treated as constant (R^2 undefined)
DEGENERATE_VAR = 1e-20


@dataclass(frozen=True)
class MetricRow:
    name: str
    unit: str
    mae: float
    std: float
    r2: Optional[float]  # None when the truth is constant


@dataclass(frozen=True)
class CurveRow:
    bin_center: float
    mae: float  # nan for an empty bin
    rel_err_pct: float
    count: int

    @property
    def empty(self) -> bool:
        return self.count == 0


@dataclass(eq=False)
class MetricsReport:
    rows: List[MetricRow]
    force_curve: List[CurveRow] = field(default_factory=list)
    torque_curve: List[CurveRow] = field(default_factory=list)

    def row(self, name: str) -> MetricRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)


def axis_metrics(pred: np.ndarray, truth: np.ndarray):
    """(MAE, std of absolute error, R^2 or None) for one scalar series."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    err = pred - truth
    abs_err = np.abs(err)
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    r2 = None
    if ss_tot / truth.size > DEGENERATE_VAR:
        r2 = 1.0 - float(np.sum(err**2)) / ss_tot
    return float(abs_err.mean()), float(abs_err.std()), r2


def compute_metrics(
    pred,
    truth,
    force_bins: Optional[Sequence[float]] = None,
    torque_bins: Optional[Sequence[float]] = None,
    strict: bool = False,
) -> MetricsReport:
    """Pooled per-axis and magnitude metrics for (N, 6) wrench arrays.

    An axis whose truth is constant gets ``r2=None``, or raises
    :class:`DegenerateTruthError` when ``strict`` is set.
    """
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.ndim != 2 or pred.shape[1] != 6:
        raise ValueError(f"expected matching (N, 6) arrays, got {pred.shape} and {truth.shape}")
    if pred.shape[0] < 2:
        raise ValueError("need at least two samples")
    series = []
    for block in (slice(0, 3), slice(3, 6)):
        p, t = pred[:, block], truth[:, block]
        series += [(p[:, i], t[:, i]) for i in range(3)]
        series.append((np.linalg.norm(p, axis=1), np.linalg.norm(t, axis=1)))
    rows = [MetricRow(name, unit, *axis_metrics(p, t)) for (name, unit), (p, t) in zip(ROW_NAMES, series)]
    if strict:
        flat = [r.name for r in rows if r.r2 is None]
        if flat:
            raise DegenerateTruthError(f"truth has no variance for: {', '.join(flat)}")
    fb = DEFAULT_FORCE_BINS if force_bins is None else force_bins
    tb = DEFAULT_TORQUE_BINS if torque_bins is None else torque_bins
    return MetricsReport(
        rows=rows,
        force_curve=binned_error_curve(pred[:, :3], truth[:, :3], fb),
        torque_curve=binned_error_curve(pred[:, 3:], truth[:, 3:], tb),
    )


def binned_error_curve(pred, truth, bin_edges) -> List[CurveRow]:
    """Magnitude error binned by true magnitude.

    ``pred``/``truth`` are (N, 3) vectors or (N,) magnitudes.  Bins are
    half-open ``[lo, hi)`` except the last, which includes its upper edge;
    frames outside the edges are ignored.  Empty bins are kept with
    ``count == 0`` and NaN errors.
    """
    edges = np.asarray(bin_edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise InvalidRangeError("bin edges must be strictly increasing with at least two entries")
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    pm = np.linalg.norm(pred, axis=1) if pred.ndim == 2 else pred
    tm = np.linalg.norm(truth, axis=1) if truth.ndim == 2 else truth
    err = np.abs(pm - tm)
    idx = np.searchsorted(edges, tm, side="right") - 1
    idx[tm == edges[-1]] = edges.size - 2
    rows = []
    for b in range(edges.size - 1):
        sel = idx == b
        count = int(sel.sum())
        center = 0.5 * (edges[b] + edges[b + 1])
        mae = float(err[sel].mean()) if count else math.nan
        rel = 100.0 * mae / center if count and center > 0 else math.nan
        rows.append(CurveRow(float(center), mae, float(rel), count))
    return rows


def format_value(v: Optional[float]) -> str:
    """Three significant figures without a leading zero (``.0560``, ``2.62``)."""
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "n/a"
    if abs(v) >= 1000:
        return f"{v:.0f}"
    s = f"{v:#.3g}"
    if "e" in s:
        s = f"{v:.3e}"
    s = s.rstrip(".")
    if s.startswith("0."):
        s = s[1:]
    elif s.startswith("-0."):
        s = "-" + s[2:]
    return s


def _text_table(m: MetricsReport) -> str:
    header = f"{'Variable':<24}{'Mean Abs. Error':>17}{'Std. Dev.':>12}{'R^2':>8}"
    lines = [
        "Magnitude error is | ||pred|| - ||truth|| | per frame; std is of absolute errors; R^2 pooled.",
        header,
        "-" * len(header),
    ]
    for r in m.rows:
        label = f"{r.name} ({r.unit})"
        lines.append(f"{label:<24}{format_value(r.mae):>17}{format_value(r.std):>12}{format_value(r.r2):>8}")
    return "\n".join(lines) + "\n"


def _curve_csv(rows: List[CurveRow], unit: str) -> str:
    buf = io.StringIO()
    buf.write(f"bin_center_{unit},mae_{unit},rel_err_pct,count\n")
    for r in rows:
        buf.write(f"{float(r.bin_center)!r},{float(r.mae)!r},{float(r.rel_err_pct)!r},{r.count}\n")
    return buf.getvalue()


def render_report(m: MetricsReport) -> Dict[str, str]:
    """File name -> contents for ``report.txt``, ``report.csv`` and the curve CSVs."""
    buf = io.StringIO()
    buf.write("variable,unit,mae,std,r2\n")
    for r in m.rows:
        r2 = "n/a" if r.r2 is None else repr(float(r.r2))
        buf.write(f"{r.name},{r.unit},{float(r.mae)!r},{float(r.std)!r},{r2}\n")
    return {
        "report.txt": _text_table(m),
        "report.csv": buf.getvalue(),
        "curve_force.csv": _curve_csv(m.force_curve, "N"),
        "curve_torque.csv": _curve_csv(m.torque_curve, "Nmm"),
    }


def _parse_curve(text: str) -> List[CurveRow]:
    reader = csv.reader(io.StringIO(text))
    next(reader)
    return [CurveRow(float(c), float(a), float(r), int(n)) for c, a, r, n in reader]


def parse_report(files: Dict[str, str]) -> MetricsReport:
    """Inverse of :func:`render_report` (reads the CSV members only)."""
    reader = csv.reader(io.StringIO(files["report.csv"]))
    next(reader)
    rows = [
        MetricRow(name, unit, float(mae), float(std), None if r2 == "n/a" else float(r2))
        for name, unit, mae, std, r2 in reader
    ]
    return MetricsReport(
        rows=rows,
        force_curve=_parse_curve(files.get("curve_force.csv", "h\n")),
        torque_curve=_parse_curve(files.get("curve_torque.csv", "h\n")),
    )


def trace_csv(t: np.ndarray, truth: np.ndarray, pred: np.ndarray) -> str:
    buf = io.StringIO()
    buf.write("t,truth,prediction\n")
    for row in zip(t.tolist(), truth.tolist(), pred.tolist()):
        buf.write(",".join(map(repr, row)) + "\n")
    return buf.getvalue()
