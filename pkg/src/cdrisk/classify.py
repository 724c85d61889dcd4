"""Migration classifier: L2 logistic regression plus a multinomial naive
Bayes baseline, with stratified splitting and rank-based evaluation.

Logistic regression minimizes mean log-loss + (lam/2)*||w||^2 (intercept
unpenalized) by full-batch gradient descent with Armijo backtracking, on
features z-scored with training-set statistics only.  The baseline runs
on the raw count-valued feature subset.  AUC uses the midrank
Mann-Whitney statistic, equivalent to trapezoidal ROC integration.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_L2_PENALTY = 0.01
DEFAULT_TOLERANCE = 1e-6
DEFAULT_MAX_ITERS = 10_000
DEFAULT_TRAIN_FRACTION = 0.7
DEFAULT_THRESHOLD = 0.5
PROB_CLAMP = 1e-12
DEFAULT_L2_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0)
TUNE_VAL_FRACTION = 0.05

# Count-valued columns for the baseline: everything except these.
NON_COUNT_COLUMNS = ("mobility_diameter_all_km", "mobility_diameter_weeknight_km")


@dataclass
class Dataset:
    """Feature matrix with 0/1 labels and column names."""

    X: np.ndarray
    y: np.ndarray
    columns: list[str]
    user_ids: list[str] | None = None

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise ValueError("X must be 2-dimensional")
        if len(self.y) != self.X.shape[0]:
            raise ValueError("row count != label count")
        if self.X.shape[1] != len(self.columns):
            raise ValueError("column count != column-name count")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    def take(self, idx: np.ndarray) -> "Dataset":
        users = [self.user_ids[i] for i in idx] if self.user_ids else None
        return Dataset(self.X[idx], self.y[idx], list(self.columns), users)

    def select_columns(self, names: list[str]) -> np.ndarray:
        pos = {name: i for i, name in enumerate(self.columns)}
        missing = [n for n in names if n not in pos]
        if missing:
            raise ValueError(f"dataset lacks columns: {missing}")
        return self.X[:, [pos[n] for n in names]]

    @classmethod
    def from_csv(cls, path: str | Path) -> "Dataset":
        """Load ``user_id,<features...>,label`` rows as written by the
        feature stage."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[0] != "user_id" or header[-1] != "label":
                raise ValueError(f"bad dataset header in {path}")
            columns = header[1:-1]
            users, rows, labels = [], [], []
            for row in reader:
                if len(row) != len(header):
                    raise ValueError(f"{path}: row width {len(row)} != header width {len(header)}")
                users.append(row[0])
                rows.append([float(v) for v in row[1:-1]])
                labels.append(int(row[-1]))
        X = np.asarray(rows, dtype=np.float64) if rows else np.empty((0, len(columns)))
        return cls(X, np.asarray(labels, dtype=np.int64), columns, users)


def split_dataset(
    dataset: Dataset,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
    seed: int = 0,
) -> tuple[Dataset, Dataset]:
    """Stratified train/test split, deterministic for a given seed.

    The overall train size is ``round(train_fraction * n)``; per-class
    quotas follow largest remainders, so the split is within one row of
    the requested fraction and each class is represented proportionally.
    """
    if dataset.n_rows < 2:
        raise ValueError("need at least 2 rows to split")
    classes = np.unique(dataset.y)
    if len(classes) < 2:
        raise ValueError("both classes must be present to split")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")

    n_train = int(round(train_fraction * dataset.n_rows))
    n_train = min(max(n_train, 1), dataset.n_rows - 1)

    quotas = {}
    remainders = []
    for c in classes:
        exact = train_fraction * int((dataset.y == c).sum())
        quotas[int(c)] = int(np.floor(exact))
        remainders.append((-(exact - np.floor(exact)), int(c)))
    short = n_train - sum(quotas.values())
    for _, c in sorted(remainders):
        if short <= 0:
            break
        quotas[c] += 1
        short -= 1

    rng = np.random.Generator(np.random.PCG64(seed))
    train_idx: list[int] = []
    test_idx: list[int] = []
    for c in classes:
        members = np.flatnonzero(dataset.y == c)
        members = members[rng.permutation(len(members))]
        q = quotas[int(c)]
        train_idx.extend(members[:q])
        test_idx.extend(members[q:])
    train_order = np.sort(np.asarray(train_idx, dtype=np.int64))
    test_order = np.sort(np.asarray(test_idx, dtype=np.int64))
    return dataset.take(train_order), dataset.take(test_order)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logreg_loss(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, lam: float
) -> float:
    """Mean log-loss (probabilities clamped away from 0/1) plus the ridge term."""
    p = np.clip(_sigmoid(X @ w + b), PROB_CLAMP, 1.0 - PROB_CLAMP)
    data = -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    return float(data + 0.5 * lam * (w @ w))


def logreg_gradient(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, lam: float
) -> tuple[np.ndarray, float]:
    r = _sigmoid(X @ w + b) - y
    gw = X.T @ r / len(y) + lam * w
    gb = float(np.mean(r))
    return gw, gb


@dataclass
class ConvergenceReport:
    converged: bool
    iterations: int
    final_loss: float
    gradient_max: float
    reason: str
    loss_history: list[float] | None = None  # diagnostic, kept out of JSON

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "final_loss": self.final_loss,
            "gradient_max": self.gradient_max,
            "reason": self.reason,
        }


@dataclass
class LogRegModel:
    weights: np.ndarray
    intercept: float
    l2_penalty: float
    mean: np.ndarray
    std: np.ndarray
    columns: list[str]
    convergence: ConvergenceReport

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.weights):
            raise ValueError(f"expected {len(self.weights)} features, got {X.shape[1]}")
        return (X - self.mean) / self.std

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        z = self._standardize(X) @ self.weights + self.intercept
        return np.clip(_sigmoid(z), PROB_CLAMP, 1.0 - PROB_CLAMP)

    def score(self, dataset: Dataset) -> np.ndarray:
        if dataset.columns != self.columns:
            raise ValueError("dataset columns do not match the trained model")
        return self.predict_proba(dataset.X)

    def to_dict(self) -> dict:
        return {
            "schema_version": "1",
            "model_type": "logreg",
            "columns": list(self.columns),
            "standardization": {
                "mean": [float(v) for v in self.mean],
                "std": [float(v) for v in self.std],
            },
            "weights": [float(v) for v in self.weights],
            "intercept": float(self.intercept),
            "l2_penalty": float(self.l2_penalty),
            "convergence": self.convergence.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LogRegModel":
        conv = doc["convergence"]
        return cls(
            weights=np.asarray(doc["weights"], dtype=np.float64),
            intercept=float(doc["intercept"]),
            l2_penalty=float(doc["l2_penalty"]),
            mean=np.asarray(doc["standardization"]["mean"], dtype=np.float64),
            std=np.asarray(doc["standardization"]["std"], dtype=np.float64),
            columns=list(doc["columns"]),
            convergence=ConvergenceReport(
                converged=bool(conv["converged"]),
                iterations=int(conv["iterations"]),
                final_loss=float(conv["final_loss"]),
                gradient_max=float(conv["gradient_max"]),
                reason=str(conv["reason"]),
            ),
        )


def train_logreg(
    train: Dataset,
    l2_penalty: float = DEFAULT_L2_PENALTY,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iters: int = DEFAULT_MAX_ITERS,
    track_loss: bool = False,
) -> LogRegModel:
    """Fit by full-batch gradient descent with backtracking line search.

    Stops when the gradient max-norm drops to ``tolerance``; otherwise
    returns after ``max_iters`` with ``convergence.converged`` False.
    """
    if l2_penalty <= 0:
        raise ValueError("l2_penalty must be > 0")
    X_raw, y = train.X, train.y.astype(np.float64)
    if not np.isfinite(X_raw).all():
        raise ValueError("non-finite feature values")
    if len(y) == 0:
        raise ValueError("empty training set")

    mean = X_raw.mean(axis=0)
    std = X_raw.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    X = (X_raw - mean) / std

    w = np.zeros(X.shape[1])
    b = 0.0
    loss = logreg_loss(X, y, w, b, l2_penalty)
    history = [loss] if track_loss else None
    step = 1.0
    iterations = 0
    reason = "max_iters"
    converged = False
    gmax = float("inf")

    for iterations in range(1, max_iters + 1):
        gw, gb = logreg_gradient(X, y, w, b, l2_penalty)
        gmax = max(float(np.max(np.abs(gw))) if gw.size else 0.0, abs(gb))
        if gmax <= tolerance:
            converged = True
            reason = "gradient_tolerance"
            iterations -= 1
            break
        g_sq = float(gw @ gw + gb * gb)
        step = min(step * 2.0, 1e6)
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            loss_new = logreg_loss(X, y, w_new, b_new, l2_penalty)
            if loss_new <= loss - 1e-4 * step * g_sq:
                break
            step *= 0.5
            if step < 1e-14:
                break
        if step < 1e-14:
            reason = "line_search_stalled"
            break
        w, b, loss = w_new, b_new, loss_new
        if history is not None:
            history.append(loss)

    return LogRegModel(
        weights=w,
        intercept=b,
        l2_penalty=l2_penalty,
        mean=mean,
        std=std,
        columns=list(train.columns),
        convergence=ConvergenceReport(
            converged=converged,
            iterations=iterations,
            final_loss=loss,
            gradient_max=gmax,
            reason=reason,
            loss_history=history,
        ),
    )


def tune_l2(
    train: Dataset,
    grid: tuple[float, ...] = DEFAULT_L2_GRID,
    val_fraction: float = TUNE_VAL_FRACTION,
    seed: int = 0,
    max_iters: int = 2000,
) -> tuple[float, dict[float, float]]:
    """Pick the penalty with the lowest log-loss on a small held-out slice
    of the training rows (ties favor the smaller penalty)."""
    fit, val = split_dataset(train, train_fraction=1.0 - val_fraction, seed=seed)
    losses: dict[float, float] = {}
    for lam in grid:
        model = train_logreg(fit, l2_penalty=lam, max_iters=max_iters)
        p = model.score(val)
        yv = val.y.astype(np.float64)
        losses[lam] = float(-np.mean(yv * np.log(p) + (1.0 - yv) * np.log(1.0 - p)))
    best = min(sorted(losses), key=lambda lam: (losses[lam], lam))
    return best, losses


def count_feature_columns(columns: list[str]) -> list[str]:
    """The baseline's feature subset: every count-valued column."""
    return [c for c in columns if c not in NON_COUNT_COLUMNS]


@dataclass
class MNBModel:
    """Multinomial naive Bayes over non-negative count features."""

    class_log_prior: np.ndarray  # shape (2,)
    feature_log_prob: np.ndarray  # shape (2, n_features)
    columns: list[str]
    alpha: float

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.feature_log_prob.shape[1]:
            raise ValueError(
                f"expected {self.feature_log_prob.shape[1]} features, got {X.shape[1]}"
            )
        joint = X @ self.feature_log_prob.T + self.class_log_prior
        joint -= joint.max(axis=1, keepdims=True)
        probs = np.exp(joint)
        probs /= probs.sum(axis=1, keepdims=True)
        return probs[:, 1]

    def score(self, dataset: Dataset) -> np.ndarray:
        return self.predict_proba(dataset.select_columns(self.columns))


def train_mnb(train: Dataset, alpha: float = 1.0, columns: list[str] | None = None) -> MNBModel:
    """Fit the baseline on the count-valued columns with Laplace smoothing."""
    if alpha <= 0:
        raise ValueError("smoothing alpha must be > 0")
    names = columns if columns is not None else count_feature_columns(train.columns)
    X = train.select_columns(names)
    y = train.y
    if np.any(X < 0):
        raise ValueError("multinomial features must be non-negative")
    classes = (0, 1)
    if set(np.unique(y)) - {0, 1}:
        raise ValueError("labels must be 0/1")
    n = len(y)
    if n == 0:
        raise ValueError("empty training set")
    log_prior = np.empty(2)
    log_prob = np.empty((2, X.shape[1]))
    for c in classes:
        members = X[y == c]
        count = len(members)
        if count == 0:
            raise ValueError(f"class {c} absent from training rows")
        log_prior[c] = np.log(count / n)
        totals = members.sum(axis=0) + alpha
        log_prob[c] = np.log(totals) - np.log(totals.sum())
    return MNBModel(
        class_log_prior=log_prior,
        feature_log_prob=log_prob,
        columns=list(names),
        alpha=alpha,
    )


@dataclass
class Metrics:
    """Threshold metrics plus ranking AUC; None marks undefined values."""

    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None
    auc: float | None
    tp: int
    fp: int
    fn: int
    tn: int
    threshold: float = DEFAULT_THRESHOLD

    def to_dict(self) -> dict:
        return {
            "f1": self.f1,
            "accuracy": self.accuracy,
            "auc": self.auc,
            "precision": self.precision,
            "recall": self.recall,
            "threshold": self.threshold,
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def midrank_auc(y_true: np.ndarray, scores: np.ndarray) -> float | None:
    """Mann-Whitney AUC with midranks for tied scores; None when only one
    class is present."""
    y = np.asarray(y_true, dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.sort(s)
    lo = np.searchsorted(order, s, side="left")
    hi = np.searchsorted(order, s, side="right")
    ranks = (lo + hi + 1) / 2.0
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def evaluate_scores(
    y_true: np.ndarray, scores: np.ndarray, threshold: float = DEFAULT_THRESHOLD
) -> Metrics:
    """Confusion-matrix metrics at the threshold plus midrank AUC.

    Degenerate cases yield None rather than a silent zero: precision when
    nothing is predicted positive, recall/F1/AUC when a class is absent.
    """
    y = np.asarray(y_true, dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    if len(y) == 0:
        raise ValueError("empty evaluation set")
    pred = (s >= threshold).astype(np.int64)
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    tn = int(np.sum((pred == 0) & (y == 0)))

    accuracy = (tp + tn) / len(y)
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    recall = tp / (tp + fn) if (tp + fn) > 0 else None
    if precision is None or recall is None:
        f1 = None
    elif precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return Metrics(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        auc=midrank_auc(y, s),
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        threshold=threshold,
    )


def evaluate(model, test: Dataset, threshold: float = DEFAULT_THRESHOLD) -> Metrics:
    return evaluate_scores(test.y, model.score(test), threshold)


def roc_points(y_true: np.ndarray, scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """ROC curve vertices (fpr, tpr) stepping through unique thresholds."""
    y = np.asarray(y_true, dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes")
    order = np.argsort(-s, kind="mergesort")
    y_sorted = y[order]
    s_sorted = s[order]
    boundary = np.flatnonzero(np.diff(s_sorted) != 0)
    idx = np.concatenate([boundary, [len(y_sorted) - 1]])
    tps = np.cumsum(y_sorted)[idx]
    fps = idx + 1 - tps
    fpr = np.concatenate([[0.0], fps / n_neg])
    tpr = np.concatenate([[0.0], tps / n_pos])
    return fpr, tpr


def save_model_json(model: LogRegModel, path: str | Path, extra: dict | None = None) -> None:
    doc = model.to_dict()
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_model_json(path: str | Path) -> tuple[LogRegModel, dict]:
    doc = json.loads(Path(path).read_text())
    return LogRegModel.from_dict(doc), doc
