"""Method dispatch shared by the HTTP service and the CLI.

Validates datasets against each method's requirements, runs the fit, and
packages every table and plot payload the method defines into one
deterministic result bundle.
"""

from __future__ import annotations

import numpy as np

from .basicstats import box_stats, product_histogram, stacked_histogram
from .bilinear import LatentModel, PreprocessSpec, fit_pca, fit_pcr, fit_plsr
from .conjoint import run_conjoint
from .conjoint.driver import tables_as_csv
from .dataset import Dataset, MethodNeeds, validate_for_method
from .errors import ValidationError
from .inddiff import SegmentSet, pls_individual, segment_discriminant
from .prefmap import PrefmapSpec, build_prefmap, prefmap_payloads

METHODS = ("pca", "plsr", "pcr", "prefmap", "conjoint", "inddiff")


def _require(d: Dataset, needs: MethodNeeds) -> None:
    violations = validate_for_method(d, needs)
    if violations:
        raise ValidationError("; ".join(violations))


def _latent_bundle(model: LatentModel) -> dict:
    return {"model": model.to_doc(), "plots": model.payloads()}


def run_method(method: str, session, options: dict) -> dict:
    """Run one analysis described by an options mapping of dataset refs."""
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; expected one of {METHODS}")
    return _DISPATCH[method](session, options)


def _get(session, options: dict, key: str) -> Dataset:
    ref = options.get(key)
    if not ref:
        raise ValidationError(f"missing dataset reference {key!r}")
    return session.get_dataset(ref)


def _run_pca(session, options: dict) -> dict:
    d = _get(session, options, "dataset")
    min_cols = 3 if d.role == "characteristics" else 2
    _require(d, MethodNeeds(no_missing=True, min_rows=3, min_cols=min_cols))
    model = fit_pca(
        d.values,
        PreprocessSpec(bool(options.get("standardise", False))),
        n_components=options.get("components"),
        row_labels=d.row_labels,
        var_labels=d.col_labels,
        loo=True,
    )
    bundle = _latent_bundle(model)
    if d.role == "liking":
        bundle["consumer_labels"] = list(d.col_labels)
    return bundle


def _run_regression(kind: str):
    def run(session, options: dict) -> dict:
        dx = _get(session, options, "x")
        dy = _get(session, options, "y")
        _require(dx, MethodNeeds(no_missing=True, min_rows=3))
        _require(dy, MethodNeeds(no_missing=True, min_rows=3))
        fit = fit_plsr if kind == "plsr" else fit_pcr
        model = fit(
            dx.values,
            dy.values,
            spec_x=PreprocessSpec(bool(options.get("standardise_x", False))),
            spec_y=PreprocessSpec(bool(options.get("standardise_y", False))),
            n_components=options.get("components"),
            row_labels=dx.row_labels,
            x_labels=dx.col_labels,
            y_labels=dy.col_labels,
            loo=True,
        )
        return _latent_bundle(model)

    return run


def _run_prefmap(session, options: dict) -> dict:
    liking = _get(session, options, "liking")
    descriptive = _get(session, options, "descriptive")
    _require(liking, MethodNeeds(no_missing=True, min_rows=3, roles=("liking",)))
    _require(descriptive, MethodNeeds(no_missing=True, min_rows=3, roles=("descriptive",)))
    spec = PrefmapSpec(
        direction=options.get("direction", "internal"),
        engine=options.get("engine", "plsr"),
        standardise_x=bool(options.get("standardise_x", False)),
        standardise_y=bool(options.get("standardise_y", False)),
        n_components=options.get("components"),
    )
    pm = build_prefmap(liking, descriptive, spec)
    n_sectors = options.get("sectors", 4)
    plots = prefmap_payloads(pm, n_sectors=n_sectors)
    return {
        "model": pm.model.to_doc(),
        "plots": plots,
        "consumer_labels": list(pm.consumer_labels()),
    }


def _run_conjoint(session, options: dict) -> dict:
    liking_refs = options.get("liking")
    if isinstance(liking_refs, str):
        liking_refs = [liking_refs]
    if not liking_refs:
        raise ValidationError("missing dataset reference 'liking'")
    design = _get(session, options, "design")
    chars = None
    if options.get("characteristics"):
        chars = session.get_dataset(options["characteristics"])
        _require(chars, MethodNeeds(no_missing=True))
    _require(design, MethodNeeds(no_missing=True))
    design_factors = options.get("design_factors") or list(design.col_labels)
    char_factors = options.get("characteristic_factors") or []
    structure = options.get("structure", "struct2")
    if structure in ("1", "2", "3", 1, 2, 3):
        structure = f"struct{structure}"
    sub_results = []
    for ref in liking_refs:
        liking = session.get_dataset(ref)
        _require(liking, MethodNeeds(no_missing=True, roles=("liking",)))
        res = run_conjoint(
            liking, design, chars, design_factors, char_factors, structure
        )
        sub_results.append({**res.to_doc(), "tables_csv": tables_as_csv(res)})
    return {"conjoint_results": sub_results}


def _run_inddiff(session, options: dict) -> dict:
    mode = options.get("mode", "raw_liking")
    chars = _get(session, options, "characteristics")
    _require(chars, MethodNeeds(no_missing=True, roles=("characteristics",)))
    categorical = set(options.get("categorical", []))
    if mode in ("raw_liking", "pca_loadings"):
        liking = _get(session, options, "liking")
        _require(liking, MethodNeeds(no_missing=True, roles=("liking",)))
        model = pls_individual(
            liking,
            chars,
            mode=mode,
            selected_pcs=options.get("pcs"),
            categorical=categorical,
            standardise_x=bool(options.get("standardise_x", True)),
            n_components=options.get("components"),
        )
    elif mode == "plsda":
        seg_doc = options.get("segments")
        if not seg_doc:
            raise ValidationError("mode plsda needs a 'segments' object or id")
        if isinstance(seg_doc, str):
            if seg_doc not in session.segments:
                raise KeyError(seg_doc)
            seg_doc = session.segments[seg_doc]
        segments = SegmentSet.from_doc(seg_doc)
        model = segment_discriminant(
            segments,
            chars,
            categorical=categorical,
            standardise_x=bool(options.get("standardise_x", True)),
            n_components=options.get("components"),
        )
    else:
        raise ValidationError(f"unknown individual-differences mode {mode!r}")
    bundle = _latent_bundle(model)
    bundle["consumer_labels"] = list(chars.row_labels)
    return bundle


_DISPATCH = {
    "pca": _run_pca,
    "plsr": _run_regression("plsr"),
    "pcr": _run_regression("pcr"),
    "prefmap": _run_prefmap,
    "conjoint": _run_conjoint,
    "inddiff": _run_inddiff,
}


def basic_stats_tables(d: Dataset, kind: str, axis: str = "row_wise",
                       series: str | None = None,
                       scale: tuple[int, int] | None = None) -> dict:
    """Basic liking statistics as plain payload dicts."""
    if kind == "box":
        rows = box_stats(d, axis)
        return {
            "kind": "box",
            "series": [
                {"series_label": b.series_label, "min": b.min, "q25": b.q25,
                 "median": b.median, "q75": b.q75, "max": b.max}
                for b in rows
            ],
        }
    if kind == "stacked":
        t = stacked_histogram(d, axis, scale)
    elif kind == "histogram":
        if series is None:
            raise ValidationError("histogram needs a series label")
        t = product_histogram(d, series, axis, scale)
    else:
        raise ValidationError(f"unknown basic-stat kind {kind!r}")
    return {
        "kind": kind,
        "series_labels": t.series_labels,
        "bin_values": t.bin_values,
        "counts": np.asarray(t.counts).tolist(),
        "percents": np.asarray(t.percents).tolist(),
    }
