"""Estimators for the hidden pre-training label prior q.

Three routes are provided:

* a constrained primal-dual optimizer that minimizes the risk of the
  adjusted zero-shot scorer over the simplex ("method 1"),
* the stationary distribution of the class-averaged prediction matrix,
  solved by power iteration ("method 2"),
* the naive average of predicted probabilities, kept as a provably
  biased baseline.

Also computes the Hoeffding-style theoretical error bound for method 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, MissingClassError, OptimizationError
from .numerics import (
    DEFAULT_LOG_FLOOR,
    LabelledLogits,
    LogitTable,
    ProbabilitySimplex,
    project_to_simplex,
    softmax_matrix,
)


@dataclass(frozen=True)
class TransitionMatrix:
    """K x K column-stochastic matrix of class-averaged predicted probabilities.

    Column j is the mean softmax vector over examples labelled j.
    """

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidInput("entries must be a square matrix")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise InvalidInput("entries must lie in [0, 1]")
        col_sums = arr.sum(axis=0)
        if np.any(np.abs(col_sums - 1.0) > 1e-9):
            raise InvalidInput("columns must each sum to 1")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def k(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class PowerIterConfig:
    tol: float = 1e-4
    max_iters: int = 500

    def __post_init__(self):
        if not self.tol > 0.0:
            raise InvalidInput("tol must be positive")
        if self.max_iters < 1:
            raise InvalidInput("max_iters must be >= 1")


@dataclass(frozen=True)
class Method1Config:
    steps: int = 2000
    primal_lr: float = 0.1
    dual_lr: float = 0.01
    floor: float = DEFAULT_LOG_FLOOR
    surrogate: str = "cross_entropy"

    def __post_init__(self):
        if self.steps < 1:
            raise InvalidInput("steps must be >= 1")
        if not (self.primal_lr > 0.0 and self.dual_lr > 0.0):
            raise InvalidInput("learning rates must be positive")
        if not self.floor > 0.0:
            raise InvalidInput("floor must be positive")
        if self.surrogate != "cross_entropy":
            raise InvalidInput(f"unknown surrogate {self.surrogate!r}")


@dataclass(frozen=True)
class BoundQuery:
    k: int
    n_per_class: int
    delta: float

    def __post_init__(self):
        if self.k < 2:
            raise InvalidInput("k must be >= 2")
        if self.n_per_class < 1:
            raise InvalidInput("n_per_class must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise InvalidInput("delta must lie in (0, 1)")


def build_transition_matrix(data: LabelledLogits) -> TransitionMatrix:
    """Average the softmax predictions per labelled class into matrix columns."""
    k = data.n_classes
    probs = softmax_matrix(data.logits.scores)
    cols = np.empty((k, k))
    for j in range(k):
        mask = data.labels == j
        if not mask.any():
            raise MissingClassError(j)
        cols[:, j] = probs[mask].mean(axis=0)
    return TransitionMatrix(cols)


def power_iterate(
    p: TransitionMatrix, cfg: PowerIterConfig = PowerIterConfig()
) -> tuple[ProbabilitySimplex, int, float]:
    """Iterate q <- P q from uniform until the l1 step falls below tol.

    Returns the final simplex, the number of multiplications performed, and
    the fixed-point residual ||P q - q||_1.  Non-convergence shows up as a
    residual above tol, never as an exception.
    """
    mat = p.entries
    q = np.full(p.k, 1.0 / p.k)
    iters = 0
    for _ in range(cfg.max_iters):
        nxt = mat @ q
        nxt = nxt / nxt.sum()
        iters += 1
        step = float(np.abs(nxt - q).sum())
        q = nxt
        if step < cfg.tol:
            break
    residual = float(np.abs(mat @ q - q).sum())
    return ProbabilitySimplex(np.maximum(q, 0.0) / np.maximum(q, 0.0).sum()), iters, residual


def estimate_prior_m2(
    data: LabelledLogits, cfg: PowerIterConfig = PowerIterConfig()
) -> ProbabilitySimplex:
    """Stationary-distribution estimate of the pre-training prior."""
    q, _, _ = power_iterate(build_transition_matrix(data), cfg)
    return q


def estimate_prior_m1(
    validation: LabelledLogits, cfg: Method1Config = Method1Config()
) -> ProbabilitySimplex:
    """Constrained-optimization estimate of the pre-training prior.

    Runs primal-dual gradient steps on the Lagrangian of the simplex-
    constrained surrogate-risk problem: the primal variable is q itself,
    the duals are one multiplier per nonnegativity constraint plus one for
    the sum constraint.  The final iterate is projected to the simplex so
    the output invariants hold exactly.
    """
    k = validation.n_classes
    for j in range(k):
        if not np.any(validation.labels == j):
            raise MissingClassError(j)

    scores = validation.logits.scores
    labels = validation.labels
    n = scores.shape[0]
    onehot_mean = np.bincount(labels, minlength=k) / n

    # max-subtraction against the raw scores keeps every exp bounded
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp_scores = np.exp(shifted)
    rows = np.arange(n)

    q = np.full(k, 1.0 / k)
    lam = np.zeros(k)
    ups = 0.0
    for _ in range(cfg.steps):
        q_safe = np.maximum(q, cfg.floor)
        # softmax(scores - log q) = (exp_scores / q) renormalized per row
        weighted = exp_scores / q_safe
        norms = weighted.sum(axis=1)
        probs = weighted / norms[:, None]
        # mean cross-entropy of the adjusted scorer against the labels
        loss = float(-np.mean(np.log(np.maximum(probs[rows, labels], 1e-300))))
        if not math.isfinite(loss):
            raise OptimizationError(f"non-finite loss {loss!r} during optimization")
        risk_grad = (onehot_mean - probs.mean(axis=0)) / q_safe
        q = q - cfg.primal_lr * (risk_grad - lam - ups)
        lam = np.maximum(0.0, lam - cfg.dual_lr * q)
        ups = ups + cfg.dual_lr * (1.0 - float(q.sum()))
    return project_to_simplex(q)


def estimate_prior_naive(logits: LogitTable) -> ProbabilitySimplex:
    """Mean predicted probability over all rows (biased baseline)."""
    mean = softmax_matrix(logits.scores).mean(axis=0)
    return ProbabilitySimplex(mean / mean.sum())


def m2_error_bound(query: BoundQuery) -> float:
    """Concentration bound on the l1 error of the stationary-distribution
    estimate from N-shot-per-class data, at confidence 1 - delta.

    The unobservable population constant factor is reported as 1.
    """
    k, n, delta = query.k, query.n_per_class, query.delta
    return math.sqrt(k * k / (2.0 * n) * math.log(2.0 * k * k / delta))
