"""Symmetric two-component Cauchy mixture: the limit law of the studentized
pivots, plus the standard normal CDF used by the normality checks.

``CauchyMixture(alpha, beta)`` is the equal-weight mixture of Cauchy laws at
locations ``+alpha`` and ``-alpha`` with common scale ``beta``; it is
symmetric about 0 and heavy-tailed (no finite mean, so sample means of draws
never stabilize).  It also arises as the law of ``xi / |eta|`` for centered
jointly normal ``(xi, eta)``; :meth:`CauchyMixture.sample_ratio` draws from
that construction, :meth:`CauchyMixture.sample_direct` from the mixture
definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CauchyMixture",
    "BIAS_PIVOT_LIMIT",
    "PROJ_PIVOT_LIMIT",
    "std_normal_cdf",
]


@dataclass(frozen=True)
class CauchyMixture:
    """Equal-weight mixture of Cauchy(+alpha, beta) and Cauchy(-alpha, beta)."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not self.alpha >= 0.0:
            raise ValueError("alpha must be >= 0")
        if not self.beta > 0.0:
            raise ValueError("beta must be > 0")

    # Parameters of the ratio-of-normals construction: xi/|eta| has this law
    # when sd(xi)/sd(eta) = sigma_ratio and corr(xi, eta) = rho.
    @property
    def sigma_ratio(self) -> float:
        return math.hypot(self.alpha, self.beta)

    @property
    def rho(self) -> float:
        return self.alpha / self.sigma_ratio

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.alpha, self.beta
        up = 1.0 / (np.pi * b * (1.0 + ((x - a) / b) ** 2))
        dn = 1.0 / (np.pi * b * (1.0 + ((x + a) / b) ** 2))
        out = 0.5 * (up + dn)
        return float(out) if out.ndim == 0 else out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.alpha, self.beta
        up = 0.5 + np.arctan((x - a) / b) / np.pi
        dn = 0.5 + np.arctan((x + a) / b) / np.pi
        out = 0.5 * (up + dn)
        return float(out) if out.ndim == 0 else out

    def quantile(self, p: float) -> float:
        """Invert the CDF by bisection on a geometrically grown bracket."""
        if not 0.0 < p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if p == 0.5:
            return 0.0
        lo = -(self.alpha + self.beta)
        hi = self.alpha + self.beta
        while self.cdf(lo) > p:
            lo *= 2.0
        while self.cdf(hi) < p:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            f = self.cdf(mid)
            if abs(f - p) <= 1e-14:
                return mid
            if f < p:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-13 * max(1.0, abs(mid)):
                break
        return 0.5 * (lo + hi)

    def sample_direct(self, rng: np.random.Generator, size=None):
        """Fair sign times alpha, plus beta * tan(pi (U - 1/2))."""
        n = 1 if size is None else size
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        u = rng.random(n)
        out = sign * self.alpha + self.beta * np.tan(np.pi * (u - 0.5))
        return float(out[0]) if size is None else out

    def sample_ratio(self, rng: np.random.Generator, size=None):
        """Draw correlated normals (xi, eta) and return xi / |eta|."""
        n = 1 if size is None else size
        eta = rng.standard_normal(n)
        eta_perp = rng.standard_normal(n)
        rho = self.rho
        xi = self.sigma_ratio * (rho * eta + math.sqrt(1.0 - rho * rho) * eta_perp)
        out = xi / np.abs(eta)
        return float(out[0]) if size is None else out


# Limit laws of the studentized pivots for a multiplicity-1 target:
# bias pivot  2(b_hat - b)/|(1+b_hat)^2 - (1+b_tilde)^2|,
# projector-error pivot (|P_hat - P|_2^2 + 2 b_hat) over the same denominator.
BIAS_PIVOT_LIMIT = CauchyMixture(0.5, math.sqrt(5.0 / 12.0))
PROJ_PIVOT_LIMIT = CauchyMixture(5.0 / 6.0, math.sqrt(47.0) / 6.0)


def std_normal_cdf(x: float) -> float:
    """Standard normal distribution function via the error function."""
    return 0.5 * (1.0 + math.erf(float(x) / math.sqrt(2.0)))


def _std_normal_cdf_vec(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.array([std_normal_cdf(v) for v in x.ravel()]).reshape(x.shape)
