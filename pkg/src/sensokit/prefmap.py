"""Preference mapping: liking vs descriptive data plus angular segmentation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bilinear import LatentModel, PreprocessSpec, fit_pcr, fit_plsr
from .dataset import Dataset
from .errors import ValidationError


@dataclass
class PrefmapSpec:
    direction: str = "internal"  # internal: X=liking, Y=descriptive; external: swapped
    engine: str = "plsr"  # "plsr" | "pcr"
    standardise_x: bool = False
    standardise_y: bool = False
    n_components: int | None = None

    def validate(self) -> None:
        if self.direction not in ("internal", "external"):
            raise ValidationError(f"unknown direction {self.direction!r}")
        if self.engine not in ("plsr", "pcr"):
            raise ValidationError(f"unknown engine {self.engine!r}")


@dataclass
class SectorAssignment:
    n_sectors: int
    boundaries: list[float]  # radians, counterclockwise from +x axis
    point_sector: list[int]
    sector_counts: list[int]
    origin_points: list[int] = field(default_factory=list)  # indices pinned to sector 0

    def to_doc(self) -> dict:
        return {
            "n_sectors": self.n_sectors,
            "sector_boundaries": self.boundaries,
            "point_sector": self.point_sector,
            "sector_counts": self.sector_counts,
            "origin_points": self.origin_points,
        }


@dataclass
class PrefmapModel:
    direction: str
    engine: str
    model: LatentModel
    consumer_side: str  # "x" or "y": which block holds the consumers
    sectors: SectorAssignment | None = None

    def consumer_corr_points(self, pcs: tuple[int, int] = (1, 2)) -> np.ndarray:
        m = self.model
        corr = m.x_corr_loadings if self.consumer_side == "x" else m.y_corr_loadings
        return corr[:, [pcs[0] - 1, pcs[1] - 1]]

    def consumer_labels(self) -> list[str]:
        m = self.model
        return m.all_x_labels if self.consumer_side == "x" else m.all_y_labels


def build_prefmap(liking: Dataset, descriptive: Dataset, spec: PrefmapSpec, loo: bool = True) -> PrefmapModel:
    """Fit the preference-mapping regression with role-correct X and Y."""
    spec.validate()
    if liking.shape[0] != descriptive.shape[0]:
        raise ValidationError(
            f"row counts differ ({liking.shape[0]} vs {descriptive.shape[0]})"
        )
    if spec.direction == "internal":
        xd, yd = liking, descriptive
        consumer_side = "x"
    else:
        xd, yd = descriptive, liking
        consumer_side = "y"
    fit = fit_plsr if spec.engine == "plsr" else fit_pcr
    model = fit(
        xd.values,
        yd.values,
        spec_x=PreprocessSpec(spec.standardise_x),
        spec_y=PreprocessSpec(spec.standardise_y),
        n_components=spec.n_components,
        row_labels=xd.row_labels,
        x_labels=xd.col_labels,
        y_labels=yd.col_labels,
        loo=loo,
    )
    return PrefmapModel(spec.direction, spec.engine, model, consumer_side)


def assign_sectors(points: np.ndarray | list[tuple[float, float]], n: int) -> SectorAssignment:
    """Split the plane into n equal wedges anchored at the positive first axis.

    Sector k covers angles [k*2pi/n, (k+1)*2pi/n), counterclockwise. A point
    at the exact origin goes to sector 0 and is flagged.
    """
    if n < 2:
        raise ValidationError("sector count must be at least 2")
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError("points must be (n, 2)")
    if not np.isfinite(pts).all():
        raise ValidationError("points must be finite")
    width = 2.0 * math.pi / n
    sector = []
    origin = []
    for i, (x, y) in enumerate(pts):
        if x == 0.0 and y == 0.0:
            sector.append(0)
            origin.append(i)
            continue
        ang = math.atan2(y, x) % (2.0 * math.pi)
        k = int(ang // width)
        sector.append(min(k, n - 1))
    counts = [0] * n
    for k in sector:
        counts[k] += 1
    boundaries = [k * width for k in range(n)]
    return SectorAssignment(n, boundaries, sector, counts, origin)


def prefmap_payloads(pm: PrefmapModel, n_sectors: int | None = None) -> dict[str, dict]:
    """Plot payloads for the joint map; sectors added on request (2-12)."""
    out = pm.model.payloads()
    if n_sectors is not None:
        if not 2 <= n_sectors <= 12:
            raise ValidationError("sector count must be between 2 and 12")
        pcs = (1, 2) if pm.model.n_components >= 2 else (1, 1)
        sectors = assign_sectors(pm.consumer_corr_points(pcs), n_sectors)
        pm.sectors = sectors
        out["corr_loadings"] = {**out["corr_loadings"], **sectors.to_doc()}
    out["meta"] = {
        "direction": pm.direction,
        "engine": pm.engine,
        "consumer_side": pm.consumer_side,
        "sector_range": [2, 12],
    }
    return out
