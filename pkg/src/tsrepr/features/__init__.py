"""Time-series feature catalog, extraction and decomposition."""
from .adf import adf_statistic
from .catalog import (
    MISSING,
    FeatureId,
    compute_feature,
    compute_features,
    feature_from_key,
    get_catalog,
    make_feature,
    table_a_catalog,
    validation_catalog,
)
from .decompose import Decomposition, decompose, remainder_acf1, seasonality_strength, trend_strength, trough
from .functions import FeatureUnavailable, dft_attribute, dft_coefficient
from .matrix import FeatureMatrix, extract_matrix, stack_rows

__all__ = [
    "MISSING", "FeatureId", "FeatureMatrix", "FeatureUnavailable", "Decomposition",
    "adf_statistic", "compute_feature", "compute_features", "decompose", "dft_attribute",
    "dft_coefficient", "extract_matrix", "feature_from_key", "get_catalog", "make_feature",
    "remainder_acf1", "seasonality_strength", "stack_rows", "table_a_catalog", "trend_strength",
    "trough", "validation_catalog",
]
