"""Descriptive statistics for liking data: box summaries and histograms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, MethodNeeds, validate_for_method
from .errors import ValidationError


@dataclass
class BoxSummary:
    series_label: str
    min: float
    q25: float
    median: float
    q75: float
    max: float

    def as_row(self) -> list[float]:
        return [self.min, self.q25, self.median, self.q75, self.max]


@dataclass
class HistogramTable:
    series_labels: list[str]
    bin_values: list[int]  # ordered rating levels
    counts: np.ndarray  # (series, bins) int
    percents: np.ndarray  # (series, bins) float, rows sum to 100


def _series(d: Dataset, axis: str) -> tuple[list[str], np.ndarray]:
    if axis == "row_wise":
        return list(d.row_labels), d.values
    if axis == "column_wise":
        return list(d.col_labels), d.values.T
    raise ValidationError(f"unknown axis {axis!r}; use row_wise or column_wise")


def box_stats(d: Dataset, axis: str = "row_wise") -> list[BoxSummary]:
    """Five-number summary per series.

    Quartiles use linear interpolation between order statistics; whiskers
    are the full observed range.
    """
    violations = validate_for_method(d, MethodNeeds(no_missing=True))
    if violations:
        raise ValidationError("; ".join(violations))
    labels, rows = _series(d, axis)
    out = []
    for lab, row in zip(labels, rows):
        q25, med, q75 = np.quantile(row, [0.25, 0.5, 0.75])
        out.append(BoxSummary(lab, float(row.min()), float(q25), float(med), float(q75), float(row.max())))
    return out


def _histogram(labels: list[str], rows: np.ndarray, scale: tuple[int, int] | None) -> HistogramTable:
    finite = rows[~np.isnan(rows)]
    if finite.size == 0:
        raise ValidationError("no observations to bin")
    if not np.allclose(finite, np.round(finite)):
        bad = finite[~np.isclose(finite, np.round(finite))][0]
        raise ValidationError(f"ratings must be integers on the hedonic scale, found {bad}")
    if scale is None:
        lo, hi = int(round(finite.min())), int(round(finite.max()))
    else:
        lo, hi = scale
        if lo > hi:
            raise ValidationError("scale lower bound exceeds upper bound")
    bins = list(range(lo, hi + 1))
    counts = np.zeros((len(labels), len(bins)), dtype=int)
    for i, row in enumerate(rows):
        vals = row[~np.isnan(row)]
        for v in vals:
            k = int(round(v))
            if k < lo or k > hi:
                raise ValidationError(f"rating {k} outside declared scale [{lo}, {hi}]")
            counts[i, k - lo] += 1
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        percents = np.where(totals > 0, 100.0 * counts / totals, 0.0)
    return HistogramTable(labels, bins, counts, percents)


def stacked_histogram(
    d: Dataset, axis: str = "row_wise", scale: tuple[int, int] | None = None
) -> HistogramTable:
    """Rating counts per series; bins default to the observed value range."""
    labels, rows = _series(d, axis)
    return _histogram(labels, rows, scale)


def product_histogram(
    d: Dataset, series_label: str, axis: str = "row_wise", scale: tuple[int, int] | None = None
) -> HistogramTable:
    """Histogram of a single series, selected by label."""
    labels, rows = _series(d, axis)
    if series_label not in labels:
        raise ValidationError(f"no such series {series_label!r}")
    i = labels.index(series_label)
    return _histogram([series_label], rows[i : i + 1], scale)
