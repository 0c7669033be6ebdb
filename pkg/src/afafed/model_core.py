"""Loss models, empirical risks, gradients, and fairness-weight utilities.

Model vectors are plain 1-D float64 numpy arrays.  Two loss models are
provided: scalar quadratic regression, 0.5 * (y - w.x)^2, whose smoothness
constant and global minimum are analytically available, and binary logistic
classification with labels in {0, 1}.  All averages are uniform over the
examples they range over.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class LossKind(enum.Enum):
    QUADRATIC = "quadratic"
    LOGISTIC = "logistic"


@dataclass(frozen=True)
class LossModel:
    """Per-example loss family plus the model dimension it expects."""

    kind: LossKind
    dim: int


@dataclass(frozen=True)
class TrainingExample:
    """One labelled example: feature vector x and scalar target y."""

    x: np.ndarray
    y: float


def stack_examples(data: Sequence[TrainingExample]) -> tuple[np.ndarray, np.ndarray]:
    """Stack a non-empty example sequence into an (m, d) matrix and an (m,) target vector."""
    if len(data) == 0:
        raise ValueError("empty data set")
    X = np.array([ex.x for ex in data], dtype=np.float64)
    y = np.array([ex.y for ex in data], dtype=np.float64)
    return X, y


def _check_dims(model: LossModel, w: np.ndarray, X: np.ndarray) -> None:
    if w.shape != (model.dim,):
        raise ValueError(f"model vector has shape {w.shape}, expected ({model.dim},)")
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ValueError(f"feature matrix has shape {X.shape}, expected (m, {model.dim})")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # tanh form is stable for large |z|
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def risk_arrays(model: LossModel, w: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Mean per-example loss over stacked data."""
    _check_dims(model, w, X)
    z = X @ w
    if model.kind is LossKind.QUADRATIC:
        r = z - y
        return float(0.5 * np.mean(r * r))
    # -[y log p + (1-y) log(1-p)] written stably as softplus(z) - y z
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def gradient_arrays(model: LossModel, w: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of ``risk_arrays`` with respect to w."""
    _check_dims(model, w, X)
    z = X @ w
    if model.kind is LossKind.QUADRATIC:
        resid = z - y
    else:
        resid = _sigmoid(z) - y
    return (X.T @ resid) / X.shape[0]


def local_risk(model: LossModel, w: np.ndarray, data: Sequence[TrainingExample]) -> float:
    """Empirical risk of w over one coworker's data set (uniform average)."""
    X, y = stack_examples(data)
    return risk_arrays(model, w, X, y)


def local_gradient(model: LossModel, w: np.ndarray, data: Sequence[TrainingExample]) -> np.ndarray:
    """Exact gradient of the local empirical risk."""
    X, y = stack_examples(data)
    return gradient_arrays(model, w, X, y)


def minibatch_gradient(
    model: LossModel, w: np.ndarray, batch: Sequence[TrainingExample]
) -> np.ndarray:
    """Stochastic gradient over a sampled batch.

    Identical computation to :func:`local_gradient` restricted to the batch,
    so a batch equal to the full data set reproduces the exact gradient.
    """
    return local_gradient(model, w, batch)


def global_risk(
    model: LossModel,
    w: np.ndarray,
    shards: Sequence[Sequence[TrainingExample]],
    weights: np.ndarray,
) -> float:
    """Weighted global risk: sum_k weights[k] * local_risk(k)."""
    if len(shards) != len(weights):
        raise ValueError(f"{len(shards)} shards but {len(weights)} weights")
    return float(sum(lam * local_risk(model, w, shard) for lam, shard in zip(weights, shards)))


def global_risk_arrays(
    model: LossModel,
    w: np.ndarray,
    shard_arrays: Sequence[tuple[np.ndarray, np.ndarray]],
    weights: np.ndarray,
) -> float:
    """Same as :func:`global_risk` on pre-stacked (X, y) shards; used on hot paths."""
    if len(shard_arrays) != len(weights):
        raise ValueError(f"{len(shard_arrays)} shards but {len(weights)} weights")
    return float(
        sum(lam * risk_arrays(model, w, X, y) for lam, (X, y) in zip(weights, shard_arrays))
    )


def global_gradient_arrays(
    model: LossModel,
    w: np.ndarray,
    shard_arrays: Sequence[tuple[np.ndarray, np.ndarray]],
    weights: np.ndarray,
) -> np.ndarray:
    """Gradient of the weighted global risk on pre-stacked shards."""
    if len(shard_arrays) != len(weights):
        raise ValueError(f"{len(shard_arrays)} shards but {len(weights)} weights")
    g = np.zeros(model.dim)
    for lam, (X, y) in zip(weights, shard_arrays):
        g += lam * gradient_arrays(model, w, X, y)
    return g


# ---------------- fairness weights ---------------- #


def uniform_weights(k: int) -> np.ndarray:
    if k < 1:
        raise ValueError("need at least one coworker")
    return np.full(k, 1.0 / k)


def normalized_weights(raw: np.ndarray) -> np.ndarray:
    """Project raw non-negative weights onto the unit simplex by rescaling."""
    raw = np.asarray(raw, dtype=np.float64)
    if np.any(raw < 0.0):
        raise ValueError("fairness weights must be non-negative")
    total = raw.sum()
    if total <= 0.0:
        raise ValueError("fairness weights sum to zero")
    return raw / total


def check_weights(weights: np.ndarray, tol: float = 1e-12) -> None:
    """Assert the simplex invariant: non-negative entries summing to 1 within tol."""
    if np.any(weights < 0.0):
        raise ValueError("fairness weights must be non-negative")
    if abs(float(weights.sum()) - 1.0) > tol:
        raise ValueError(f"fairness weights sum to {weights.sum()!r}, expected 1")


def jain_fairness_index(weights: np.ndarray) -> float:
    """Jain's index (sum w)^2 / (K * sum w^2); 1/K for one-hot, 1 for uniform."""
    w = np.asarray(weights, dtype=np.float64)
    sq = float(np.sum(w * w))
    if sq == 0.0:
        raise ValueError("fairness index undefined for an all-zero vector")
    s = float(np.sum(w))
    return s * s / (len(w) * sq)


# ---------------- analytic helpers (quadratic model) ---------------- #


def shard_smoothness(model: LossModel, X: np.ndarray) -> float:
    """Largest eigenvalue of the shard's mean Gram matrix (scaled by 1/4 for logistic)."""
    gram = (X.T @ X) / X.shape[0]
    top = float(np.linalg.eigvalsh(gram)[-1])
    if model.kind is LossKind.LOGISTIC:
        return 0.25 * top
    return top


def smoothness_constant(
    model: LossModel, shard_arrays: Sequence[tuple[np.ndarray, np.ndarray]]
) -> float:
    """Smoothness constant valid for every local risk: the max over shards."""
    return max(shard_smoothness(model, X) for X, _ in shard_arrays)


def quadratic_global_minimum(
    shard_arrays: Sequence[tuple[np.ndarray, np.ndarray]], weights: np.ndarray
) -> tuple[np.ndarray, float]:
    """Minimizer and minimum value of the weighted quadratic global risk.

    Solves the weighted normal equations; only meaningful for the quadratic
    loss, where the global risk is an exact quadratic form.
    """
    dim = shard_arrays[0][0].shape[1]
    H = np.zeros((dim, dim))
    b = np.zeros(dim)
    for lam, (X, y) in zip(weights, shard_arrays):
        H += lam * (X.T @ X) / X.shape[0]
        b += lam * (X.T @ y) / X.shape[0]
    w_star = np.linalg.solve(H, b)
    model = LossModel(LossKind.QUADRATIC, dim)
    return w_star, global_risk_arrays(model, w_star, shard_arrays, weights)
