"""Milling surface-roughness prediction with explainable regression forests.

Pipeline: featurize force signals and machine configuration into fixed-length
vectors, train bootstrap-aggregated CART regression forests, explain them
with Gini and permutation feature importances, and run importance-driven
sensor-ablation studies. A seeded synthetic generator with known structure
stands in for the original (non-public) experiment data.
"""

from .ablation import AblationReport, run_ablation, suggest_drops
from .data import (
    CuttingMode,
    Dataset,
    ExperimentRecord,
    ForceSignals,
    ProcessParams,
    load_dataset,
    save_dataset,
    split_train_test,
)
from .explain import (
    ImportanceReport,
    compare_rankings,
    gini_report,
    permutation_importance,
    subset_importance,
)
from .features import (
    FEATURE_NAMES,
    BoxStats,
    FeatureVector,
    box_stats,
    featurize,
    featurize_dataset,
    magnitude_spectrum,
)
from .forest import (
    Forest,
    HyperParams,
    best_split,
    fit,
    gini_importance,
    load_forest,
    predict,
    predict_matrix,
    predict_per_tree,
    save_forest,
)
from .metrics import mae, mape, mse
from .roughness import Profile, RoughnessParams, compute_roughness
from .synthgen import SensorMode, SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "AblationReport",
    "BoxStats",
    "CuttingMode",
    "Dataset",
    "ExperimentRecord",
    "FEATURE_NAMES",
    "FeatureVector",
    "ForceSignals",
    "Forest",
    "HyperParams",
    "ImportanceReport",
    "ProcessParams",
    "Profile",
    "RoughnessParams",
    "SensorMode",
    "SynthConfig",
    "best_split",
    "box_stats",
    "compare_rankings",
    "compute_roughness",
    "featurize",
    "featurize_dataset",
    "fit",
    "generate",
    "gini_importance",
    "gini_report",
    "load_dataset",
    "load_forest",
    "mae",
    "mape",
    "magnitude_spectrum",
    "mse",
    "permutation_importance",
    "predict",
    "predict_matrix",
    "predict_per_tree",
    "run_ablation",
    "save_dataset",
    "save_forest",
    "split_train_test",
    "subset_importance",
    "suggest_drops",
]
