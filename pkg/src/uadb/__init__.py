"""Model-agnostic booster for unsupervised anomaly detectors on tabular data.

Typical use: fit any detector, normalize its scores, and hand them to
run_booster as the teacher. The booster trains a small network on the
evolving pseudo labels and corrects them with per-instance prediction
variance, which concentrates on the teacher's mistakes.
"""

from .booster import (
    BoosterConfig,
    BoosterResult,
    CaseScores,
    InputConditioner,
    PseudoLabelMatrix,
    Strategy,
    VarianceVector,
    classify_cases,
    correction_trace,
    per_instance_variance,
    run_booster,
    score_points,
    update_pseudo_labels,
)
from .data import (
    DataError,
    Dataset,
    SyntheticKind,
    generate_synthetic,
    load_csv,
    save_csv,
    scale_features,
)
from .detectors import (
    DegenerateDataWarning,
    DetectorKind,
    DetectorParams,
    ScoreVector,
    fit_score,
    fit_score_hbos,
    fit_score_iforest,
    fit_score_knn,
    fit_score_lof,
    fit_score_pca,
    import_scores,
    minmax_scale,
    minmax_values,
    save_scores,
)
from .metrics import (
    EvalReport,
    VacuousCorrectionWarning,
    aucroc,
    average_precision,
    correction_rate,
    evaluate,
    threshold_predictions,
    variance_gap,
)
from .nn import (
    Loss,
    MlpModel,
    TrainSpec,
    forward,
    gradient_check,
    init_mlp,
    load_checkpoint,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BoosterConfig",
    "BoosterResult",
    "CaseScores",
    "DataError",
    "Dataset",
    "DegenerateDataWarning",
    "DetectorKind",
    "DetectorParams",
    "EvalReport",
    "InputConditioner",
    "Loss",
    "MlpModel",
    "PseudoLabelMatrix",
    "ScoreVector",
    "Strategy",
    "SyntheticKind",
    "TrainSpec",
    "VacuousCorrectionWarning",
    "VarianceVector",
    "aucroc",
    "average_precision",
    "classify_cases",
    "correction_rate",
    "correction_trace",
    "evaluate",
    "fit_score",
    "fit_score_hbos",
    "fit_score_iforest",
    "fit_score_knn",
    "fit_score_lof",
    "fit_score_pca",
    "forward",
    "generate_synthetic",
    "gradient_check",
    "import_scores",
    "init_mlp",
    "load_checkpoint",
    "load_csv",
    "minmax_scale",
    "minmax_values",
    "per_instance_variance",
    "run_booster",
    "save_checkpoint",
    "save_csv",
    "save_scores",
    "scale_features",
    "score_points",
    "threshold_predictions",
    "train",
    "update_pseudo_labels",
    "variance_gap",
]
