"""Long-format assembly of liking responses with design and consumer factors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import Dataset
from ..errors import ValidationError

CONSUMER = "Consumer"


def _level_label(v: float) -> str:
    return str(int(v)) if float(v) == int(v) else repr(float(v))


@dataclass
class Factor:
    name: str
    levels: list[float]  # sorted distinct numeric levels

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def labels(self) -> list[str]:
        return [_level_label(v) for v in self.levels]


@dataclass
class LongTable:
    consumer_ids: list[str]  # per long row
    response: np.ndarray  # per long row
    factor_values: dict[str, np.ndarray]  # factor -> per-row value
    factors: dict[str, Factor]
    consumers: list[str]  # distinct consumers, input order
    n_skipped_missing: int = 0

    @property
    def n_rows(self) -> int:
        return len(self.response)


def melt(liking: Dataset, design: Dataset, characteristics: Dataset | None = None) -> LongTable:
    """One long row per (product, consumer) cell of the liking matrix.

    Design factors attach by product row, characteristics by consumer
    column. Missing liking cells are skipped so the row count is
    products x consumers minus the missing cells.
    """
    J, N = liking.shape
    if design.shape[0] != J:
        raise ValidationError(
            f"design rows ({design.shape[0]}) do not match liking products ({J})"
        )
    if characteristics is not None and characteristics.shape[0] != N:
        raise ValidationError(
            f"characteristics rows ({characteristics.shape[0]}) do not match "
            f"liking consumers ({N})"
        )
    if np.isnan(design.values).any():
        raise ValidationError("design data must not contain missing values")
    if characteristics is not None and np.isnan(characteristics.values).any():
        raise ValidationError("characteristics data must not contain missing values")

    factor_cols: list[tuple[str, np.ndarray, str]] = []
    for k, name in enumerate(design.col_labels):
        factor_cols.append((name, design.values[:, k], "design"))
    if characteristics is not None:
        for k, name in enumerate(characteristics.col_labels):
            if name in design.col_labels:
                raise ValidationError(f"factor name {name!r} appears in both design and characteristics")
            factor_cols.append((name, characteristics.values[:, k], "characteristics"))
    if any(name == CONSUMER for name, _, _ in factor_cols):
        raise ValidationError(f"factor name {CONSUMER!r} is reserved")

    consumers = list(liking.col_labels)
    rows_c: list[str] = []
    resp: list[float] = []
    values: dict[str, list[float]] = {name: [] for name, _, _ in factor_cols}
    skipped = 0
    for j in range(J):
        for n in range(N):
            v = liking.values[j, n]
            if np.isnan(v):
                skipped += 1
                continue
            rows_c.append(consumers[n])
            resp.append(float(v))
            for name, col, kind in factor_cols:
                values[name].append(float(col[j] if kind == "design" else col[n]))
    if not resp:
        raise ValidationError("liking data has no non-missing cells")

    factors = {
        name: Factor(name, sorted(set(vals))) for name, vals in values.items()
    }
    return LongTable(
        consumer_ids=rows_c,
        response=np.array(resp),
        factor_values={k: np.array(v) for k, v in values.items()},
        factors=factors,
        consumers=consumers,
        n_skipped_missing=skipped,
    )
