"""Coworker-side optimisation: adaptive primal/dual iterations run in clusters.

Each coworker repeatedly runs a cluster of ``iter_k`` local iterations, then
ships its model, its averaged multiplier and its last-seen global timestamp
to the server and waits for either a fresh global model or a timeout.  All
hyper-parameters of the loop (iterations per cluster, both step sizes, and
the proximity tolerance) are driven by the running average of the local
Lagrange multiplier, so no per-coworker tuning is required.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import NumericDivergenceError, ProtocolError
from .model_core import LossModel, minibatch_gradient
from .stream_manager import StreamBuffer, evict_oldest_if_surplus, sample_minibatch


@dataclass(frozen=True)
class AdaptiveConfig:
    """Knobs of the multiplier-driven adaptation rules."""

    iter_max: int = 30          # hard cap on iterations per cluster
    omega_a: float = 2.0        # base of the cluster-shrinking map (> 1)
    omega_c: float = 1.0        # sensitivity of the cluster-shrinking map (> 0)
    b0: float = 1.0             # proximity tolerance scale
    gamma: float = 0.1          # proximity tolerance exponent (>= 0)
    eta_min: float = 0.01       # step-size floor
    eta_max: float = 0.5        # step-size ceiling

    def __post_init__(self) -> None:
        if self.iter_max < 1:
            raise ValueError("iter_max must be at least 1")
        if self.omega_a <= 1.0:
            raise ValueError("omega_a must exceed 1")
        if self.omega_c <= 0.0:
            raise ValueError("omega_c must be positive")
        if self.b0 < 0.0 or self.gamma < 0.0:
            raise ValueError("b0 and gamma must be non-negative")
        if not 0.0 < self.eta_min <= self.eta_max:
            raise ValueError("need 0 < eta_min <= eta_max")


@dataclass
class UplinkPayload:
    """What one coworker ships per cluster: model, averaged multiplier, timestamp."""

    sender: int
    w: np.ndarray
    mu_bar: float
    timestamp: int
    iters_in_cluster: int
    last_grad: Optional[np.ndarray] = None


@dataclass
class CoworkerState:
    """Full local state of one coworker."""

    id: int
    w: np.ndarray
    buffer: StreamBuffer
    mu: float = 0.0
    mu_sum: float = 0.0           # running sum of multiplier samples, mu(0) included
    mu_count: int = 1
    mu_bar: float = 0.0
    tolerance: float = 0.0        # current proximity tolerance B_k
    lambda_last: float = 1.0      # own fairness coefficient, last broadcast value
    w_global_last: np.ndarray = None  # type: ignore[assignment]
    timestamp: int = 0
    t_local: int = 0
    iter_k: int = 1
    timer_deadline: Optional[float] = None
    eta0: float = 0.0
    eta1: float = 0.0
    last_grad: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.w_global_last is None:
            self.w_global_last = self.w.copy()


def make_coworker(
    cid: int, w0: np.ndarray, buffer: StreamBuffer, lambda0: float, cfg: AdaptiveConfig
) -> CoworkerState:
    """Fresh coworker: model at w0, zero multiplier, full-length first cluster."""
    return CoworkerState(
        id=cid,
        w=w0.copy(),
        buffer=buffer,
        lambda_last=lambda0,
        w_global_last=w0.copy(),
        iter_k=update_iter_count(0.0, cfg),
        tolerance=update_tolerance(0.0, cfg),
    )


# ---------------- adaptation rules ---------------- #


def omega(mu_bar: float, cfg: AdaptiveConfig) -> float:
    """Cluster-shrinking map: a**(c * mu_bar) clipped into [1, iter_max]."""
    if mu_bar < 0.0:
        raise ValueError("mu_bar must be non-negative")
    exponent = cfg.omega_c * mu_bar * math.log(cfg.omega_a)
    # compare in log space so huge multipliers cannot overflow the power
    if exponent >= math.log(cfg.iter_max):
        return float(cfg.iter_max)
    return max(1.0, math.exp(exponent))


def update_iter_count(mu_bar: float, cfg: AdaptiveConfig) -> int:
    """Iterations for the next cluster: iter_max shrunk by omega, at least 1."""
    return max(1, math.ceil(cfg.iter_max / omega(mu_bar, cfg)))


def update_tolerance(mu_bar: float, cfg: AdaptiveConfig) -> float:
    """Proximity tolerance b0 * mu_bar**gamma; vanishes at the origin."""
    if mu_bar < 0.0:
        raise ValueError("mu_bar must be non-negative")
    if mu_bar == 0.0:
        return 0.0
    return cfg.b0 * mu_bar**cfg.gamma


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def update_step_sizes(
    state: CoworkerState, cfg: AdaptiveConfig, grad: np.ndarray, dev_sq: float
) -> tuple[float, float]:
    """Primal/dual step sizes scaled by omega and clipped into [eta_min, eta_max].

    The primal step tracks the stochastic gradient magnitude, the dual step
    the current constraint violation |dev_sq - tolerance|.
    """
    om = omega(state.mu_bar, cfg)
    eta0 = _clamp(om * float(np.linalg.norm(grad)), cfg.eta_min, cfg.eta_max)
    eta1 = _clamp(om * abs(dev_sq - state.tolerance), cfg.eta_min, cfg.eta_max)
    state.eta0, state.eta1 = eta0, eta1
    return eta0, eta1


# ---------------- primal/dual iteration ---------------- #


def primal_step(state: CoworkerState, grad: np.ndarray) -> None:
    """Gradient step on the local model, pulled toward the last global model.

    w <- w - eta0 * (lambda_last * grad + mu * (w - w_global_last)); the
    proximity pull uses the pre-update w, matching a simultaneous update of
    the primal and dual variables.
    """
    state.w = state.w - state.eta0 * (
        state.lambda_last * grad + state.mu * (state.w - state.w_global_last)
    )


def dual_step(state: CoworkerState, dev_sq: float) -> float:
    """Projected ascent on the multiplier: mu <- max(0, mu + eta1*(dev_sq - B))."""
    state.mu = max(0.0, state.mu + state.eta1 * (dev_sq - state.tolerance))
    return state.mu


def update_mu_average(state: CoworkerState) -> float:
    """Fold the newest multiplier sample into the all-time running average."""
    state.mu_sum += state.mu
    state.mu_count += 1
    state.mu_bar = state.mu_sum / state.mu_count
    return state.mu_bar


def run_single_iteration(
    state: CoworkerState,
    cfg: AdaptiveConfig,
    model: LossModel,
    rng: np.random.Generator,
    now: float = float("nan"),
) -> bool:
    """One local iteration: sample, step sizes, primal, dual, average, eviction.

    Returns False (leaving all state untouched) when the buffer cannot serve
    a minibatch yet; the caller decides how to wait.
    """
    batch = sample_minibatch(state.buffer, rng)
    if batch is None:
        return False
    grad = minibatch_gradient(model, state.w, batch)
    diff = state.w - state.w_global_last
    dev_sq = float(diff @ diff)
    update_step_sizes(state, cfg, grad, dev_sq)
    primal_step(state, grad)
    dual_step(state, dev_sq)
    state.t_local += 1
    update_mu_average(state)
    evict_oldest_if_surplus(state.buffer)
    state.last_grad = grad
    if not (np.isfinite(state.w).all() and math.isfinite(state.mu)):
        raise NumericDivergenceError(state.id, now)
    return True


def finalize_cluster(state: CoworkerState, cfg: AdaptiveConfig) -> UplinkPayload:
    """Close a cluster: refresh the tolerance, build the payload, size the next cluster."""
    iters = state.iter_k
    state.tolerance = update_tolerance(state.mu_bar, cfg)
    payload = UplinkPayload(
        sender=state.id,
        w=state.w.copy(),
        mu_bar=state.mu_bar,
        timestamp=state.timestamp,
        iters_in_cluster=iters,
        last_grad=None if state.last_grad is None else state.last_grad.copy(),
    )
    state.iter_k = update_iter_count(state.mu_bar, cfg)
    return payload


def run_iteration_cluster(
    state: CoworkerState,
    cfg: AdaptiveConfig,
    model: LossModel,
    rng: np.random.Generator,
    now: float = float("nan"),
) -> Optional[UplinkPayload]:
    """Run a full cluster of iter_k iterations back to back and emit the payload.

    Returns None without touching state when the buffer is not warm enough to
    serve the first minibatch.  Used directly by tests and by callers that do
    not need per-iteration timing; the event-driven engine reproduces exactly
    this sequence one iteration at a time.
    """
    if not state.buffer.ready:
        return None
    for _ in range(state.iter_k):
        if not run_single_iteration(state, cfg, model, rng, now):
            raise RuntimeError("buffer went below one minibatch mid-cluster")
    return finalize_cluster(state, cfg)


# ---------------- feedback handlers ---------------- #


def handle_downlink(state: CoworkerState, w_global: np.ndarray, stamp: int) -> None:
    """Adopt a fresh global model: restart from it and disarm the timer."""
    state.timestamp = stamp
    state.w_global_last = w_global.copy()
    state.w = w_global.copy()
    state.timer_deadline = None


def handle_timer_expiry(state: CoworkerState) -> None:
    """Give up on the pending uplink; the next cluster continues from local state."""
    state.timer_deadline = None


def handle_fairness_broadcast(state: CoworkerState, lambda_k: float) -> None:
    """Adopt the coworker's own entry of a freshly broadcast coefficient set."""
    if not 0.0 <= lambda_k <= 1.0:
        raise ProtocolError(f"fairness coefficient {lambda_k!r} outside [0, 1]")
    state.lambda_last = lambda_k
