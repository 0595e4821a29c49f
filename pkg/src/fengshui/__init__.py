"""Room-environment sensing and well-being classification toolkit.

Pipeline: raw sensor CSV + session metadata -> 25-feature vector; survey
responses -> well-being score; correlation screening + exhaustive subset
search -> feature set; from-scratch KNN / decision-tree / random-forest
classifiers -> better-than-average prediction. A capture service and CLI
wrap the same library calls.
"""

from .analysis import (
    CorrelationReport,
    SubsetSearchResult,
    correlate_dataset,
    exhaustive_subset_search,
    filter_candidates,
    pearson,
)
from .evaluation import (
    CvSpec,
    EvalReport,
    LabeledDataset,
    ScoredRow,
    baseline_accuracy,
    cross_validate,
    label_by_mean,
    loocv,
    metrics,
    train_full,
)
from .features import (
    DEFAULT_BEST_RATIO,
    FEATURE_NAMES,
    FeatureVector,
    RatioConfig,
    aggregate_channels,
    build_feature_vector,
    wh_ratio_score,
)
from .ingest import (
    CHANNELS,
    SensorLog,
    SensorSample,
    SessionMeta,
    despike,
    parse_sensor_log,
    parse_session_meta,
)
from .models import (
    DecisionTreeClassifier,
    KnnClassifier,
    ModelSpec,
    RandomForestClassifier,
    TrainedModel,
    fit,
    model_from_json,
    model_to_json,
)
from .store import DatasetRow, append_row, export_csv, load_dataset
from .survey import (
    SurveyDefinition,
    SurveyRecord,
    WellbeingScore,
    default_definition,
    validate_record,
    wellbeing_score,
)
from .synth import SynthSpec, generate, generate_dataset

__version__ = "0.1.0"

__all__ = [
    "CHANNELS",
    "CorrelationReport",
    "CvSpec",
    "DatasetRow",
    "DecisionTreeClassifier",
    "DEFAULT_BEST_RATIO",
    "EvalReport",
    "FEATURE_NAMES",
    "FeatureVector",
    "KnnClassifier",
    "LabeledDataset",
    "ModelSpec",
    "RandomForestClassifier",
    "RatioConfig",
    "ScoredRow",
    "SensorLog",
    "SensorSample",
    "SessionMeta",
    "SubsetSearchResult",
    "SurveyDefinition",
    "SurveyRecord",
    "SynthSpec",
    "TrainedModel",
    "WellbeingScore",
    "aggregate_channels",
    "append_row",
    "baseline_accuracy",
    "build_feature_vector",
    "correlate_dataset",
    "cross_validate",
    "default_definition",
    "despike",
    "exhaustive_subset_search",
    "export_csv",
    "filter_candidates",
    "fit",
    "generate",
    "generate_dataset",
    "label_by_mean",
    "load_dataset",
    "loocv",
    "metrics",
    "model_from_json",
    "model_to_json",
    "parse_sensor_log",
    "parse_session_meta",
    "pearson",
    "train_full",
    "validate_record",
    "wellbeing_score",
    "wh_ratio_score",
]
