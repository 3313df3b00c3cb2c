"""Feature engineering and tree-ensemble models for file-transfer rate prediction."""

from .events import (
    CleaningReport,
    CsvRowError,
    CsvSchemaError,
    Stage,
    TransferEvent,
    clean_events,
    dump_events,
    load_events,
    parse_event_csv,
    sort_by_start,
    write_event_csv,
)
from .features import (
    CategoricalEncoder,
    ColumnMeta,
    FeatureMatrix,
    FeatureSpec,
    assemble_features,
    compute_time_features,
    encode_categoricals,
    read_feature_csv,
    write_feature_csv,
)
from .filenames import FileNameParts, FilenameParseError, format_filename, parse_filename
from .lags import (
    ConcurrencyCounts,
    LagInfo,
    LagKeyKind,
    compute_chunk_time_offset,
    compute_concurrency,
    compute_keyed_lags,
    lag_key,
)
from .models import (
    GbtModel,
    HyperParams,
    RfModel,
    feature_importance,
    fit_gbt,
    fit_rf,
    load_model,
    predict,
    predict_raw,
    save_model,
)
from .synth import SynthConfig, generate_workload
from .tree import RegressionTree, grow_tree
from .validation import (
    CvConfig,
    CvResult,
    FoldSpec,
    HoldoutResult,
    HyperParamSpace,
    chronological_split,
    fit_family,
    holdout_eval,
    make_folds,
    nested_cv,
    rmse,
    sample_hyperparams,
)

__version__ = "0.1.0"

__all__ = [
    "CategoricalEncoder",
    "CleaningReport",
    "ColumnMeta",
    "ConcurrencyCounts",
    "CsvRowError",
    "CsvSchemaError",
    "CvConfig",
    "CvResult",
    "FeatureMatrix",
    "FeatureSpec",
    "FileNameParts",
    "FilenameParseError",
    "FoldSpec",
    "GbtModel",
    "HoldoutResult",
    "HyperParams",
    "HyperParamSpace",
    "LagInfo",
    "LagKeyKind",
    "RegressionTree",
    "RfModel",
    "Stage",
    "SynthConfig",
    "TransferEvent",
    "assemble_features",
    "chronological_split",
    "clean_events",
    "compute_chunk_time_offset",
    "compute_concurrency",
    "compute_keyed_lags",
    "compute_time_features",
    "dump_events",
    "encode_categoricals",
    "feature_importance",
    "fit_family",
    "fit_gbt",
    "fit_rf",
    "format_filename",
    "generate_workload",
    "grow_tree",
    "holdout_eval",
    "lag_key",
    "load_events",
    "load_model",
    "make_folds",
    "nested_cv",
    "parse_event_csv",
    "parse_filename",
    "predict",
    "predict_raw",
    "rmse",
    "sample_hyperparams",
    "save_model",
    "sort_by_start",
    "write_event_csv",
    "write_feature_csv",
    "read_feature_csv",
]
