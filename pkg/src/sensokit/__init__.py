"""sensokit: statistical toolkit for sensory and consumer data."""

from .basicstats import BoxSummary, HistogramTable, box_stats, product_histogram, stacked_histogram
from .bilinear import (
    LatentModel,
    PreprocessSpec,
    correlation_loadings,
    fit_pca,
    fit_pcr,
    fit_plsr,
    loo_validate,
    preprocess,
)
from .dataset import (
    Dataset,
    DatasetSummary,
    ImportOptions,
    MethodNeeds,
    export_delimited,
    import_dataset,
    summarize,
    transpose_copy,
    validate_for_method,
)
from .errors import ConvergenceError, FoldError, ImportError_, SensokitError, ValidationError
from .inddiff import (
    DummyExpansion,
    SegmentSet,
    apriori_color_payload,
    dummify,
    pls_individual,
    segment_discriminant,
    segments_to_dataset,
)
from .prefmap import PrefmapModel, PrefmapSpec, SectorAssignment, assign_sectors, build_prefmap

__version__ = "0.1.0"

__all__ = [
    "BoxSummary",
    "HistogramTable",
    "box_stats",
    "stacked_histogram",
    "product_histogram",
    "LatentModel",
    "PreprocessSpec",
    "preprocess",
    "fit_pca",
    "fit_plsr",
    "fit_pcr",
    "loo_validate",
    "correlation_loadings",
    "Dataset",
    "DatasetSummary",
    "ImportOptions",
    "MethodNeeds",
    "import_dataset",
    "export_delimited",
    "transpose_copy",
    "summarize",
    "validate_for_method",
    "SensokitError",
    "ImportError_",
    "ValidationError",
    "ConvergenceError",
    "FoldError",
    "PrefmapModel",
    "PrefmapSpec",
    "SectorAssignment",
    "assign_sectors",
    "build_prefmap",
    "SegmentSet",
    "DummyExpansion",
    "dummify",
    "pls_individual",
    "segment_discriminant",
    "segments_to_dataset",
    "apriori_color_payload",
]
