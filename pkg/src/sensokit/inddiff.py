"""Individual differences: liking vs consumer attributes, segments, PLS-DA."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bilinear import LatentModel, PreprocessSpec, fit_pca, fit_plsr
from .dataset import Dataset, new_id
from .errors import ValidationError

UNASSIGNED = None


@dataclass
class SegmentSet:
    """A labeled partition of consumers; not every consumer needs a segment."""

    name: str
    consumer_labels: list[str]
    assignment: list[int | None]  # segment index per consumer, None = unassigned
    n_segments: int

    def __post_init__(self) -> None:
        if len(self.assignment) != len(self.consumer_labels):
            raise ValidationError("assignment length does not match consumer labels")
        used = {a for a in self.assignment if a is not None}
        if any(a < 0 or a >= self.n_segments for a in used):
            raise ValidationError("segment index out of range")
        missing = set(range(self.n_segments)) - used
        if missing:
            raise ValidationError(f"segments {sorted(missing)} have no members")

    @classmethod
    def from_member_lists(
        cls, name: str, consumer_labels: list[str], members: list[list[str]]
    ) -> "SegmentSet":
        index = {lab: i for i, lab in enumerate(consumer_labels)}
        unknown = [m for seg in members for m in seg if m not in index]
        if unknown:
            raise ValidationError(f"unknown consumer labels: {', '.join(sorted(set(unknown)))}")
        assignment: list[int | None] = [None] * len(consumer_labels)
        for k, seg in enumerate(members):
            for m in seg:
                if assignment[index[m]] is None:  # first selection wins
                    assignment[index[m]] = k
        return cls(name, list(consumer_labels), assignment, len(members))

    def segment_sizes(self) -> list[int]:
        sizes = [0] * self.n_segments
        for a in self.assignment:
            if a is not None:
                sizes[a] += 1
        return sizes

    def to_doc(self) -> dict:
        return {
            "name": self.name,
            "labels": list(self.consumer_labels),
            "assignment": list(self.assignment),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SegmentSet":
        assignment = [None if a is None else int(a) for a in doc["assignment"]]
        used = [a for a in assignment if a is not None]
        return cls(doc["name"], list(doc["labels"]), assignment, max(used) + 1 if used else 0)


@dataclass
class DummyExpansion:
    source_label: str
    levels: list[float]
    matrix: np.ndarray  # (n, n_levels) 0/1 indicators
    collinear_warning: bool = False

    def column_labels(self) -> list[str]:
        def lab(v: float) -> str:
            return str(int(v)) if v == int(v) else repr(v)

        return [f"{self.source_label}[{lab(v)}]" for v in self.levels]


def dummify(values: np.ndarray | list[float], source_label: str = "var") -> DummyExpansion:
    """Expand a categorical column into one 0/1 indicator per level.

    No reference level is dropped; the bilinear models tolerate the
    resulting collinearity. A constant column yields a single all-ones
    indicator and a warning flag.
    """
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 1:
        raise ValidationError("dummify expects a single column")
    if np.isnan(vals).any():
        raise ValidationError("missing values present in the categorical column")
    levels = sorted(set(vals.tolist()))
    matrix = np.zeros((len(vals), len(levels)))
    for j, lv in enumerate(levels):
        matrix[:, j] = vals == lv
    return DummyExpansion(source_label, levels, matrix, collinear_warning=len(levels) == 1)


def _expand_characteristics(
    characteristics: Dataset, categorical: set[str] | None
) -> tuple[np.ndarray, list[str]]:
    categorical = categorical or set()
    cols = []
    labels: list[str] = []
    for k, name in enumerate(characteristics.col_labels):
        col = characteristics.values[:, k]
        if name in categorical:
            exp = dummify(col, name)
            cols.append(exp.matrix)
            labels.extend(exp.column_labels())
        else:
            cols.append(col[:, None])
            labels.append(name)
    return np.hstack(cols), labels


def pls_individual(
    liking: Dataset,
    characteristics: Dataset,
    mode: str = "raw_liking",
    selected_pcs: list[int] | None = None,
    categorical: set[str] | None = None,
    standardise_x: bool = True,
    standardise_liking_pca: bool = False,
    n_components: int | None = None,
    loo: bool = True,
) -> LatentModel:
    """PLS of consumer attributes (X) against liking patterns (Y).

    mode "raw_liking" regresses the transposed liking matrix; mode
    "pca_loadings" regresses the selected loading columns of a liking PCA.
    """
    if liking.shape[1] != characteristics.shape[0]:
        raise ValidationError(
            f"consumer axes differ: liking has {liking.shape[1]} consumers, "
            f"characteristics has {characteristics.shape[0]} rows"
        )
    X, x_labels = _expand_characteristics(characteristics, categorical)
    if mode == "raw_liking":
        Y = liking.values.T.copy()
        y_labels = list(liking.row_labels)
    elif mode == "pca_loadings":
        if not selected_pcs:
            raise ValidationError("select at least one principal component")
        pca = fit_pca(
            liking.values,
            PreprocessSpec(standardise_liking_pca),
            n_components=max(selected_pcs),
            row_labels=liking.row_labels,
            var_labels=liking.col_labels,
        )
        bad = [pc for pc in selected_pcs if pc < 1 or pc > pca.n_components]
        if bad:
            raise ValidationError(f"principal components out of range: {bad}")
        Y = pca.x_loadings[:, [pc - 1 for pc in selected_pcs]]
        y_labels = [f"PC{pc}" for pc in selected_pcs]
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    return fit_plsr(
        X,
        Y,
        spec_x=PreprocessSpec(standardise_x),
        spec_y=PreprocessSpec(False),
        n_components=n_components,
        row_labels=list(characteristics.row_labels),
        x_labels=x_labels,
        y_labels=y_labels,
        loo=loo,
    )


def segment_discriminant(
    segments: SegmentSet,
    characteristics: Dataset,
    categorical: set[str] | None = None,
    standardise_x: bool = True,
    n_components: int | None = None,
    loo: bool = True,
) -> LatentModel:
    """PLS-DA: dummified segment membership regressed on attributes."""
    used = sorted({a for a in segments.assignment if a is not None})
    if len(used) < 2:
        raise ValidationError("need at least 2 segments for discriminant analysis")
    index = {lab: i for i, lab in enumerate(characteristics.row_labels)}
    missing = [lab for lab in segments.consumer_labels if lab not in index]
    if missing:
        raise ValidationError(f"consumers not in characteristics data: {', '.join(missing[:5])}")
    rows = [
        (index[lab], a)
        for lab, a in zip(segments.consumer_labels, segments.assignment)
        if a is not None
    ]
    if len(rows) < 3:
        raise ValidationError("need at least 3 assigned consumers")
    row_idx = [r for r, _ in rows]
    X, x_labels = _expand_characteristics(characteristics, categorical)
    X = X[row_idx]
    Y = np.zeros((len(rows), len(used)))
    for i, (_, a) in enumerate(rows):
        Y[i, used.index(a)] = 1.0
    return fit_plsr(
        X,
        Y,
        spec_x=PreprocessSpec(standardise_x),
        spec_y=PreprocessSpec(False),
        n_components=n_components,
        row_labels=[segments.consumer_labels[i] for i, a in
                    enumerate(segments.assignment) if a is not None],
        x_labels=x_labels,
        y_labels=[f"segment{k}" for k in used],
        loo=loo,
    )


def segments_to_dataset(s: SegmentSet, dataset_id: str | None = None) -> Dataset:
    """Consumers x 1 matrix of segment indices; unassigned become missing."""
    values = np.array(
        [[np.nan if a is None else float(a)] for a in s.assignment]
    )
    return Dataset(
        id=dataset_id or new_id(),
        name=f"segments-{s.name}",
        role="characteristics",
        values=values,
        row_labels=list(s.consumer_labels),
        col_labels=[s.name],
    )


def apriori_color_payload(
    points: np.ndarray | list[tuple[float, float]],
    point_labels: list[str],
    column_values: np.ndarray | list[float],
    column_label: str = "group",
) -> dict:
    """Group points by a discrete column for colored plotting.

    Palette order follows the sorted level values so colors are stable
    across renders.
    """
    pts = np.asarray(points, dtype=float)
    vals = np.asarray(column_values, dtype=float)
    if len(vals) != len(pts):
        raise ValidationError("column length does not match point count")
    if np.isnan(vals).any():
        raise ValidationError("grouping column has missing values")
    levels = sorted(set(vals.tolist()))
    group_index = [levels.index(v) for v in vals]
    return {
        "kind": "colored_points",
        "column": column_label,
        "labels": list(point_labels),
        "points": pts.tolist(),
        "group_index": group_index,
        "groups": [str(int(v)) if v == int(v) else repr(v) for v in levels],
    }
