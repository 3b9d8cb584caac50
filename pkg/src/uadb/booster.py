"""Iterative pseudo-supervised booster for unsupervised anomaly detectors.

A teacher detector's normalized scores seed a pseudo-label vector. Each
iteration trains the network on the current pseudo labels, estimates a
per-instance variance over the whole prediction history, adds that variance
to the labels, and renormalizes. Anomalies accumulate higher prediction
variance than inliers, so the additive correction pushes likely false
negatives up and (after renormalization) pulls likely false positives down,
narrowing the teacher's error gap without any ground-truth labels.

Training uses out-of-fold cross-fitting: with fold_count = 3, three models
each train on two thirds of the rows, and the prediction fed into the
variance estimate for a row comes from the one model that never saw it.

Before any training the features are conditioned: rotated to the covariance
eigenbasis and divided per direction by a robust spread estimate
(1.4826 * median absolute deviation). Strongly correlated features otherwise
leave the loss surface so ill-conditioned that the few optimizer steps per
iteration cannot make progress; a robust spread keeps directions whose
variance is dominated by the anomalies themselves from being compressed the
way plain standard-deviation whitening would compress them. The fitted
transform travels with the result so out-of-sample scoring sees the same
inputs.

Besides the full method (strategy "uadb"), four reduced strategies support
ablation: a single static-label pass ("naive"), the same pass scored by
teacher/booster disagreement ("discrepancy"), self-training on the booster's
own normalized output ("self"), and self-training scored by disagreement
("discrepancy-star").
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import rankdata

from .data import Dataset
from .detectors import ScoreVector, minmax_scale
from .metrics import aucroc, average_precision, threshold_predictions
from .nn import MlpModel, TrainSpec, forward, init_mlp, train
from .rng import Stream, derive

# seed-derivation tags; keep distinct so streams never overlap
_TAG_FOLD_SHUFFLE = 101
_TAG_MODEL_INIT = 211
_TAG_TRAIN_SHUFFLE = 301


class Strategy(enum.Enum):
    UADB = "uadb"
    NAIVE = "naive"
    DISCREPANCY = "discrepancy"
    SELF = "self"
    DISCREPANCY_STAR = "discrepancy-star"


@dataclass(frozen=True)
class PseudoLabelMatrix:
    """Ordered pseudo-label columns; column 0 is the normalized teacher."""

    columns: tuple[ScoreVector, ...]

    def __post_init__(self):
        if not self.columns:
            raise ValueError("need at least one pseudo-label column")
        n = len(self.columns[0])
        for c in self.columns:
            if not c.normalized:
                raise ValueError("pseudo-label columns must be normalized")
            if len(c) != n:
                raise ValueError("pseudo-label columns must share one length")
        object.__setattr__(self, "columns", tuple(self.columns))

    @property
    def n(self) -> int:
        return len(self.columns[0])

    @property
    def t(self) -> int:
        return len(self.columns)

    def as_array(self) -> np.ndarray:
        return np.column_stack([c.values for c in self.columns])

    def appended(self, column: ScoreVector) -> "PseudoLabelMatrix":
        return PseudoLabelMatrix(self.columns + (column,))


@dataclass(frozen=True)
class VarianceVector:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError(f"variance vector must be 1-d, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or v.size and v.min() < 0.0:
            raise ValueError("variances must be finite and non-negative")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class BoosterConfig:
    """Loop length T, cross-fitting folds, strategy, and training settings.

    fold_count = 1 disables cross-fitting (one model, in-sample predictions).
    holdout_final scores each row with the model that held it out instead of
    averaging all fold models at the end. reinit_per_iteration discards the
    warm-started weights and draws a fresh init before each iteration.
    """

    T: int = 10
    fold_count: int = 3
    strategy: Strategy = Strategy.UADB
    train: TrainSpec = field(default_factory=TrainSpec)
    reinit_per_iteration: bool = False
    holdout_final: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.T < 1:
            raise ValueError(f"need T >= 1, got {self.T}")
        if self.fold_count < 1:
            raise ValueError(f"need fold_count >= 1, got {self.fold_count}")


@dataclass(frozen=True)
class InputConditioner:
    """Affine feature transform fitted on the training matrix.

    center is the column mean; rotation the orthonormal eigenvectors of the
    covariance; scale a per-direction robust spread (1.4826 * MAD, floored
    at 1e-12 so constant directions map to zero rather than dividing by 0).
    """

    center: np.ndarray
    rotation: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "InputConditioner":
        mu = X.mean(axis=0)
        cov = np.atleast_2d(np.cov(X - mu, rowvar=False, bias=True))
        _, vecs = np.linalg.eigh(cov)
        Z = (X - mu) @ vecs
        mad = np.median(np.abs(Z - np.median(Z, axis=0)), axis=0) * 1.4826
        return cls(mu, vecs, np.maximum(mad, 1e-12))

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return (X - self.center) @ self.rotation / self.scale @ self.rotation.T


@dataclass(frozen=True)
class BoosterResult:
    """Final normalized scores plus the full label/variance trajectory.

    diagnostics holds one row per training iteration (AUCROC of that
    iteration's out-of-fold predictions); only computed when the dataset
    carries ground-truth labels.
    """

    final_scores: ScoreVector
    label_history: PseudoLabelMatrix
    variance_history: tuple[VarianceVector, ...]
    diagnostics: tuple[dict, ...] = ()
    models: tuple[MlpModel, ...] = ()
    conditioner: InputConditioner | None = None


@dataclass(frozen=True)
class CaseScores:
    """Updated scores of the four teacher-outcome archetypes (test fixture)."""

    s_tp: float
    s_fp: float
    s_fn: float
    s_tn: float

    @property
    def gap(self) -> float:
        return self.s_fp - self.s_fn

    @classmethod
    def from_vector(cls, y) -> "CaseScores":
        v = np.asarray(y, dtype=np.float64)
        if v.shape != (4,):
            raise ValueError(f"expected a 4-vector ordered TP, FP, FN, TN, got shape {v.shape}")
        return cls(float(v[0]), float(v[1]), float(v[2]), float(v[3]))


def per_instance_variance(history: PseudoLabelMatrix, current: ScoreVector) -> VarianceVector:
    """Population variance per row over history columns plus the current prediction."""
    if len(current) != history.n:
        raise ValueError(f"current length {len(current)} != history length {history.n}")
    stacked = np.column_stack([history.as_array(), current.values])
    return VarianceVector(np.var(stacked, axis=1))


def update_pseudo_labels(y: ScoreVector, v: VarianceVector) -> ScoreVector:
    """Add the variance correction, then renormalize to [0, 1]."""
    if not y.normalized:
        raise ValueError("pseudo labels must be normalized")
    if len(y) != len(v):
        raise ValueError(f"length mismatch: labels {len(y)}, variances {len(v)}")
    return minmax_scale(ScoreVector(y.values + v.values))


def _assign_folds(n: int, fold_count: int, seed: int) -> np.ndarray:
    """Round-robin fold labels over a seeded shuffle of the row indices."""
    perm = Stream(derive(seed, _TAG_FOLD_SHUFFLE)).permutation(n)
    folds = np.empty(n, dtype=np.int64)
    folds[perm] = np.arange(n) % fold_count
    return folds


@dataclass
class _FoldEnsemble:
    """Fold bookkeeping: per-fold models, training rows, held-out rows."""

    models: list[MlpModel]
    folds: np.ndarray
    X: np.ndarray
    cfg: BoosterConfig

    @classmethod
    def build(cls, X: np.ndarray, cfg: BoosterConfig) -> "_FoldEnsemble":
        n, d = X.shape
        if cfg.fold_count > n:
            raise ValueError(f"fold_count {cfg.fold_count} exceeds row count {n}")
        folds = _assign_folds(n, cfg.fold_count, cfg.seed)
        models = [init_mlp(d, derive(cfg.seed, _TAG_MODEL_INIT, f)) for f in range(cfg.fold_count)]
        return cls(models, folds, X, cfg)

    def train_round(self, labels: ScoreVector, iteration: int) -> None:
        cfg = self.cfg
        for f in range(cfg.fold_count):
            if cfg.reinit_per_iteration:
                self.models[f] = init_mlp(
                    self.X.shape[1], derive(cfg.seed, _TAG_MODEL_INIT, f, iteration)
                )
            rows = np.flatnonzero(self.folds != f) if cfg.fold_count > 1 else np.arange(len(self.folds))
            spec = replace(cfg.train, seed=derive(cfg.train.seed, _TAG_TRAIN_SHUFFLE, iteration, f))
            targets = ScoreVector(labels.values[rows], normalized=True)
            self.models[f] = train(self.models[f], self.X[rows], targets, spec)

    def out_of_fold(self) -> np.ndarray:
        """Each row scored by the one model whose training folds exclude it."""
        if self.cfg.fold_count == 1:
            return forward(self.models[0], self.X).values
        p = np.empty(self.X.shape[0])
        for f in range(self.cfg.fold_count):
            rows = np.flatnonzero(self.folds == f)
            p[rows] = forward(self.models[f], self.X[rows]).values
        return p

    def inference(self) -> np.ndarray:
        if self.cfg.holdout_final:
            return self.out_of_fold()
        stacked = np.stack([forward(m, self.X).values for m in self.models])
        return stacked.mean(axis=0)


def _discrepancy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # population std of the 2-element multiset {a_i, b_i} = |a_i - b_i| / 2
    return np.abs(a - b) / 2.0


def run_booster(ds: Dataset, teacher: ScoreVector, cfg: BoosterConfig) -> BoosterResult:
    """Run the selected boosting strategy end to end.

    Pseudo labels start at minmax_scale(teacher). A constant teacher
    degenerates to all 0.5 and the loop proceeds on variance alone.
    """
    if len(teacher) != ds.n:
        raise ValueError(f"teacher length {len(teacher)} != dataset rows {ds.n}")
    labeled = ds.labels is not None
    y1 = minmax_scale(teacher)
    history = PseudoLabelMatrix((y1,))
    variances: list[VarianceVector] = []
    diagnostics: list[dict] = []
    conditioner = InputConditioner.fit(ds.features)
    ensemble = _FoldEnsemble.build(conditioner.apply(ds.features), cfg)

    single_pass = cfg.strategy in (Strategy.NAIVE, Strategy.DISCREPANCY)
    rounds = 1 if single_pass else cfg.T
    current = y1
    for t in range(1, rounds + 1):
        ensemble.train_round(current, t)
        p = ScoreVector(ensemble.out_of_fold())
        if labeled:
            diagnostics.append(
                {
                    "iteration": t,
                    "aucroc": aucroc(p.values, ds.labels),
                    "ap": average_precision(p.values, ds.labels),
                }
            )
        if cfg.strategy is Strategy.UADB:
            v = per_instance_variance(history, p)
            variances.append(v)
            current = update_pseudo_labels(current, v)
            history = history.appended(current)
        elif cfg.strategy in (Strategy.SELF, Strategy.DISCREPANCY_STAR):
            current = minmax_scale(p)
            history = history.appended(current)
        # naive/discrepancy keep the static labels; history stays one column

    booster_out = ensemble.inference()
    if cfg.strategy in (Strategy.DISCREPANCY, Strategy.DISCREPANCY_STAR):
        final = _discrepancy(booster_out, y1.values)
    else:
        final = booster_out
    return BoosterResult(
        final_scores=minmax_scale(ScoreVector(final)),
        label_history=history,
        variance_history=tuple(variances),
        diagnostics=tuple(diagnostics),
        models=tuple(ensemble.models),
        conditioner=conditioner,
    )


def score_points(result: BoosterResult, X: np.ndarray) -> np.ndarray:
    """Mean booster-model output at arbitrary points (e.g. a plotting grid)."""
    if not result.models:
        raise ValueError("result carries no fitted models")
    X = np.asarray(X, dtype=np.float64)
    if result.conditioner is not None:
        X = result.conditioner.apply(X)
    return np.stack([forward(m, X).values for m in result.models]).mean(axis=0)


def classify_cases(
    teacher: ScoreVector, labels: np.ndarray, threshold: float | None = None
) -> dict[str, np.ndarray]:
    """Split rows into TP/FP/FN/TN by thresholding the teacher's scores.

    With threshold None, the top-q rule predicts exactly as many anomalies
    as the labels contain (score ties broken by lowest row index); a float
    threshold predicts rows with score strictly above it. Empty cases are
    dropped.
    """
    labels = np.asarray(labels)
    n = len(teacher)
    if labels.shape != (n,):
        raise ValueError(f"labels must have shape ({n},), got {labels.shape}")
    predicted = threshold_predictions(teacher.values, int(labels.sum()), threshold)
    actual = labels == 1
    cases = {
        "TP": predicted & actual,
        "FP": predicted & ~actual,
        "FN": ~predicted & actual,
        "TN": ~predicted & ~actual,
    }
    return {name: np.flatnonzero(mask) for name, mask in cases.items() if mask.any()}


def correction_trace(
    result: BoosterResult, ds: Dataset, threshold: float | None = None
) -> dict[str, np.ndarray]:
    """Mean pseudo-label rank of each teacher-outcome case across iterations.

    Ranks are ascending average ranks (1 = lowest score, ties share their
    mean rank), so rising false-negative curves and falling false-positive
    curves indicate error correction. Returns case name -> vector with one
    entry per label-history column.
    """
    if ds.labels is None:
        raise ValueError("correction_trace requires ground-truth labels")
    cases = classify_cases(result.label_history.columns[0], ds.labels, threshold)
    trace = {name: np.empty(result.label_history.t) for name in cases}
    for col, scores in enumerate(result.label_history.columns):
        ranks = rankdata(scores.values, method="average")
        for name, rows in cases.items():
            trace[name][col] = ranks[rows].mean()
    return trace
