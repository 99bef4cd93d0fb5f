"""Sample covariance, split-sample bias estimators, studentized pivots, and
confidence intervals for a multiplicity-1 spectral projector target.

The estimators operate on three independent samples (hat / tilde / bar).
With matched unit eigenvectors ``theta_hat, theta_tilde, theta_bar`` and
signs aligned so the relevant inner products are nonnegative:

* ``b_hat  = <theta_hat, theta_tilde> - 1`` estimates the alignment bias
  ``b = E <theta_hat, theta>^2 - 1`` of the empirical eigenvector;
* ``b_tilde = <theta_tilde, theta_bar> - 1`` replays the construction on the
  other split pair;
* ``denom = |(1 + b_hat)^2 - (1 + b_tilde)^2|`` is the data-driven
  normalizer that studentizes both pivots;
* the corrected vector ``theta_hat / sqrt(1 + b_hat)`` undoes the
  norm-shrinkage part of the bias.

Confidence intervals invert the pivots against their Cauchy-mixture limit
laws (:data:`~spectral_pivot.limits.BIAS_PIVOT_LIMIT`,
:data:`~spectral_pivot.limits.PROJ_PIVOT_LIMIT`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .limits import BIAS_PIVOT_LIMIT, PROJ_PIVOT_LIMIT
from .operators import SymOperator

__all__ = [
    "TripleSample",
    "PivotSet",
    "ConfidenceInterval",
    "sample_covariance",
    "bias_estimate",
    "second_bias_estimate",
    "corrected_vector",
    "pivots",
    "variance_estimate",
    "ci_bias",
    "ci_proj_error",
]


@dataclass(frozen=True, eq=False)
class TripleSample:
    """Three independent n x d sample blocks from the same distribution."""

    x: np.ndarray
    x_tilde: np.ndarray
    x_bar: np.ndarray

    def __post_init__(self) -> None:
        blocks = {}
        for name in ("x", "x_tilde", "x_bar"):
            b = np.asarray(getattr(self, name), dtype=float)
            if b.ndim != 2:
                raise ValueError(f"{name} must be a 2-d array")
            object.__setattr__(self, name, b)
            blocks[name] = b.shape
        if len(set(blocks.values())) != 1:
            raise ValueError(f"sample blocks differ in shape: {blocks}")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class PivotSet:
    """Per-trial split-sample statistics and studentized pivots.

    ``pivot_bias`` and ``pivot_proj`` are None when their ingredients (the
    oracle bias, the true eigenvector) were not supplied or when the
    denominator is exactly zero (``degenerate``).
    """

    b_hat: float
    b_tilde: float
    denom: float
    proj_error_sq: Optional[float] = None
    pivot_bias: Optional[float] = None
    pivot_proj: Optional[float] = None
    degenerate: bool = False

    def __post_init__(self) -> None:
        if not -2.0 <= self.b_hat <= 0.0:
            raise ValueError(f"b_hat {self.b_hat} outside [-2, 0]")
        if not -2.0 <= self.b_tilde <= 0.0:
            raise ValueError(f"b_tilde {self.b_tilde} outside [-2, 0]")
        if not self.denom >= 0.0:
            raise ValueError("denom must be >= 0")
        if self.proj_error_sq is not None and not 0.0 <= self.proj_error_sq <= 2.0:
            raise ValueError("proj_error_sq outside [0, 2]")


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    level: float
    degenerate: bool = False


def sample_covariance(samples: np.ndarray) -> SymOperator:
    """Uncentered second-moment operator ``n^{-1} sum_j X_j (x) X_j``.

    No mean subtraction: the sampling model is mean-zero, and centering is
    deliberately left to the caller when that assumption fails.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("samples must be a nonempty n x d array")
    return SymOperator.from_product(x.T @ x / x.shape[0])


def _unit(v: np.ndarray, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if abs(float(np.linalg.norm(v)) - 1.0) > 1e-10:
        raise ValueError(f"{name} is not a unit vector")
    return v


def _aligned_inner(a: np.ndarray, b: np.ndarray) -> float:
    # Alignment makes the inner product nonnegative; clip float excursions
    # above 1 so downstream bias estimates stay in [-1, 0].
    return min(abs(float(a @ b)), 1.0)


def bias_estimate(theta_hat: np.ndarray, theta_tilde: np.ndarray) -> float:
    """Cross-split alignment bias estimate ``<theta_hat, theta_tilde> - 1``.

    Signs are aligned first, so the result lies in ``[-1, 0]``.
    """
    a = _unit(theta_hat, "theta_hat")
    b = _unit(theta_tilde, "theta_tilde")
    return _aligned_inner(a, b) - 1.0


def second_bias_estimate(theta_tilde: np.ndarray, theta_bar: np.ndarray) -> float:
    """Same construction on the second split pair, aligning bar to tilde."""
    a = _unit(theta_tilde, "theta_tilde")
    b = _unit(theta_bar, "theta_bar")
    return _aligned_inner(a, b) - 1.0


def corrected_vector(
    theta_hat: np.ndarray, b_hat: float, floor: float = 0.1
) -> np.ndarray:
    """Bias-corrected vector ``theta_hat / sqrt(1 + b_hat)``.

    Rejects ``1 + b_hat < floor``: past that point the correction blows up
    and the estimate is outside the regime where it means anything.
    """
    v = _unit(theta_hat, "theta_hat")
    if 1.0 + b_hat < floor:
        raise ValueError(
            f"1 + b_hat = {1.0 + b_hat:.6g} below floor {floor}: bias-corrected "
            "regime breakdown"
        )
    return v / math.sqrt(1.0 + b_hat)


def pivots(
    theta_hat: np.ndarray,
    theta_tilde: np.ndarray,
    theta_bar: np.ndarray,
    true_theta: Optional[np.ndarray] = None,
    oracle_bias: Optional[float] = None,
) -> PivotSet:
    """Bias estimates, denominator, and studentized pivots for one trial.

    ``true_theta`` (simulation only) enables ``proj_error_sq`` and the
    projector pivot; ``oracle_bias`` enables the bias pivot.  Requires a
    multiplicity-1 target: all inputs are single eigenvectors.
    """
    th = _unit(theta_hat, "theta_hat")
    tt = _unit(theta_tilde, "theta_tilde")
    tb = _unit(theta_bar, "theta_bar")
    b_hat = _aligned_inner(th, tt) - 1.0
    b_tilde = _aligned_inner(tt, tb) - 1.0
    denom = abs((1.0 + b_hat) ** 2 - (1.0 + b_tilde) ** 2)

    proj_error_sq = None
    if true_theta is not None:
        theta = _unit(true_theta, "true_theta")
        cos2 = min(float(th @ theta) ** 2, 1.0)
        proj_error_sq = 2.0 - 2.0 * cos2

    degenerate = denom == 0.0
    pivot_bias = None
    pivot_proj = None
    if not degenerate:
        if oracle_bias is not None:
            pivot_bias = 2.0 * (b_hat - oracle_bias) / denom
        if proj_error_sq is not None:
            pivot_proj = (proj_error_sq + 2.0 * b_hat) / denom
    return PivotSet(
        b_hat=b_hat,
        b_tilde=b_tilde,
        denom=denom,
        proj_error_sq=proj_error_sq,
        pivot_bias=pivot_bias,
        pivot_proj=pivot_proj,
        degenerate=degenerate,
    )


def variance_estimate(b_hat: float, b_tilde: float) -> float:
    """Variance estimator ``(pi/3) ((1+b_hat)^2 - (1+b_tilde)^2)^2`` for the
    squared projector error."""
    diff = (1.0 + b_hat) ** 2 - (1.0 + b_tilde) ** 2
    return (math.pi / 3.0) * diff * diff


def _check_level(level: float) -> None:
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")


def ci_bias(b_hat: float, b_tilde: float, level: float) -> ConfidenceInterval:
    """Confidence interval for the bias parameter, inverting the bias pivot
    against its Cauchy-mixture limit.  Symmetric about ``b_hat``."""
    _check_level(level)
    denom = abs((1.0 + b_hat) ** 2 - (1.0 + b_tilde) ** 2)
    if denom == 0.0:
        return ConfidenceInterval(b_hat, b_hat, level, degenerate=True)
    q = BIAS_PIVOT_LIMIT.quantile(1.0 - (1.0 - level) / 2.0)
    half = q * denom / 2.0
    return ConfidenceInterval(b_hat - half, b_hat + half, level)


def ci_proj_error(b_hat: float, b_tilde: float, level: float) -> ConfidenceInterval:
    """Confidence interval for the squared projector error, centered at the
    plug-in ``-2 b_hat`` and clamped to the attainable range [0, 2]."""
    _check_level(level)
    denom = abs((1.0 + b_hat) ** 2 - (1.0 + b_tilde) ** 2)
    center = -2.0 * b_hat
    if denom == 0.0:
        point = min(max(center, 0.0), 2.0)
        return ConfidenceInterval(point, point, level, degenerate=True)
    q = PROJ_PIVOT_LIMIT.quantile(1.0 - (1.0 - level) / 2.0)
    half = q * denom
    return ConfidenceInterval(
        max(center - half, 0.0), min(center + half, 2.0), level
    )
