"""Perturbation expansion of empirical spectral projectors.

For a symmetric perturbation ``E`` of an operator with spectral data
``spec``, the projector onto the perturbed eigenspace matched to the r-th
distinct eigenvalue splits as ``P_hat_r - P_r = L_r(E) + S_r(E)``:

* :func:`linear_term` -- the first-order term ``C_r E P_r + P_r E C_r``;
* :func:`remainder_series` -- the second-and-higher-order remainder, summed
  from its operator power series (products of ``P_r``, powers of ``C_r``
  and ``E`` with combinatorial signs), valid for ``|E|_op < gap_r / 4``;
* :func:`empirical_projector` -- the perturbed projector itself, extracted
  from an eigendecomposition at the matched eigenvalue positions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .operators import SpectralData, SymOperator, c_operator, op_norm

__all__ = [
    "SeriesConfig",
    "PerturbationSplit",
    "ConvergenceError",
    "c_operator",
    "linear_term",
    "remainder_series",
    "EmpiricalProjector",
    "empirical_projector",
    "empirical_eigenvector",
    "align_sign",
]


class ConvergenceError(ValueError):
    """Raised when ``|E|_op / gap_r`` is too large for the series to converge."""

    def __init__(self, ratio: float, limit: float):
        self.ratio = ratio
        self.limit = limit
        super().__init__(
            f"perturbation ratio |E|/gap = {ratio:.6g} exceeds the series "
            f"convergence limit {limit:.6g}"
        )


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation policy for the remainder series.

    ``k_max`` caps the expansion order; ``term_tol`` stops the sum once a
    whole order contributes less than this in operator norm;
    ``convergence_ratio_limit`` rejects inputs with ``|E|/gap`` at or above
    it (must stay at or below 1/4, the series convergence threshold).
    """

    k_max: int = 30
    term_tol: float = 1e-14
    convergence_ratio_limit: float = 0.25

    def __post_init__(self) -> None:
        if self.k_max < 2:
            raise ValueError("k_max must be >= 2")
        if not self.term_tol > 0.0:
            raise ValueError("term_tol must be positive")
        if not 0.0 < self.convergence_ratio_limit <= 0.25:
            raise ValueError("convergence_ratio_limit must lie in (0, 0.25]")


@dataclass(frozen=True)
class PerturbationSplit:
    """Linear term and truncated remainder of a projector perturbation.

    ``truncation_residual`` is a certified operator-norm bound on the
    discarded series tail, ``sum_{k > orders_used} (2 |E|/gap)^k``; it
    shrinks as ``orders_used`` grows.
    """

    linear: SymOperator
    remainder: SymOperator
    orders_used: int
    truncation_residual: float


def linear_term(spec: SpectralData, r: int, e: SymOperator) -> SymOperator:
    """First-order projector perturbation ``C_r E P_r + P_r E C_r``."""
    target = spec.check_index(r)
    if e.dim != spec.dim:
        raise ValueError(f"dimension mismatch: {e.dim} vs {spec.dim}")
    p = target.projector.mat
    c = c_operator(spec, r).mat
    cep = c @ e.mat @ p
    return SymOperator.from_product(cep + cep.T)


def remainder_series(
    spec: SpectralData, r: int, e: SymOperator, cfg: SeriesConfig = SeriesConfig()
) -> PerturbationSplit:
    """Sum the remainder ``S_r(E)`` order by order.

    Order ``k`` collects every word ``B_1 E B_2 E ... E B_{k+1}`` in which
    each slot is either ``P_r`` or a positive power of ``C_r``, at least one
    slot of each kind appears, the ``C_r`` powers add up to ``k``, and the
    word is signed by ``(-1)**(#P slots - 1)``.  The sum over words with a
    shared prefix is factored through a dynamic program over
    (slots used, total ``C_r`` power, has-P, has-C), which reproduces the
    plain enumeration exactly while staying polynomial in ``k``.
    """
    target = spec.check_index(r)
    if e.dim != spec.dim:
        raise ValueError(f"dimension mismatch: {e.dim} vs {spec.dim}")
    linear = linear_term(spec, r, e)

    e_norm = op_norm(e)
    if not np.isfinite(target.gap):  # single distinct eigenvalue: C_r = 0, S_r = 0
        ratio = 0.0
    else:
        ratio = e_norm / target.gap
    if ratio >= cfg.convergence_ratio_limit:
        raise ConvergenceError(ratio, cfg.convergence_ratio_limit)

    d = spec.dim
    if e_norm == 0.0:
        return PerturbationSplit(linear, SymOperator.zero(d), 2, 0.0)

    p = target.projector.mat
    c = c_operator(spec, r).mat
    e_mat = e.mat
    k_max = cfg.k_max

    c_pow = [None, c]
    for _ in range(2, k_max + 1):
        c_pow.append(c_pow[-1] @ c)

    # state[e, has_p, has_c] = sum over prefixes of (-1)^{#P slots} * product,
    # where e counts the C powers used so far.
    state = np.zeros((k_max + 1, 2, 2, d, d))
    state[0, 1, 0] = -p
    for j in range(1, k_max + 1):
        state[j, 0, 1] = c_pow[j]

    remainder = np.zeros((d, d))
    orders_used = 2
    for level in range(2, k_max + 2):
        t = state @ e_mat  # prefix @ E, batched over all states
        new = np.zeros_like(state)
        # Append P: parity flips, has_p set, budget unchanged.
        new[:, 1, :] -= np.matmul(t.sum(axis=1), p)
        # Append C^j: budget grows by j, has_c set.
        tc = t.sum(axis=2)
        for j in range(1, k_max + 1):
            new[j:, :, 1] += np.matmul(tc[: k_max + 1 - j], c_pow[j])
        state = new

        order = level - 1
        if order < 2:
            continue
        contribution = -state[order, 1, 1]
        remainder += contribution
        orders_used = order
        contrib_norm = op_norm(SymOperator.from_product(contribution))
        if contrib_norm < cfg.term_tol:
            break

    tail = (2.0 * ratio) ** (orders_used + 1) / (1.0 - 2.0 * ratio)
    return PerturbationSplit(
        linear, SymOperator.from_product(remainder), orders_used, float(tail)
    )


class EmpiricalProjector(NamedTuple):
    """Matched-cluster projector extracted from a perturbed operator.

    ``separated`` is False when some matched eigenvalue escapes the interval
    ``(mu_r - gap_r/2, mu_r + gap_r/2)``; the projector stays defined.
    """

    projector: SymOperator
    matched_eigenvalues: np.ndarray
    separated: bool


def _matched_eigh(
    true_spec: SpectralData, r: int, sigma_hat: SymOperator
) -> tuple:
    target = true_spec.check_index(r)
    if sigma_hat.dim != true_spec.dim:
        raise ValueError(f"dimension mismatch: {sigma_hat.dim} vs {true_spec.dim}")
    d = true_spec.dim
    # Descending position j maps to ascending LAPACK index d - 1 - j.
    lo = d - 1 - max(target.indices)
    hi = d - 1 - min(target.indices)
    vals, vecs = scipy.linalg.eigh(
        sigma_hat.mat, subset_by_index=(lo, hi), driver="evr"
    )
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    half_gap = 0.5 * target.gap
    separated = bool(np.all(np.abs(vals - target.value) < half_gap))
    return vals, vecs, separated


def empirical_projector(
    true_spec: SpectralData, r: int, sigma_hat: SymOperator
) -> EmpiricalProjector:
    """Orthogonal projector onto the span of eigenvectors of ``sigma_hat``
    at the eigenvalue positions matched to the r-th true distinct eigenvalue.
    """
    vals, vecs, separated = _matched_eigh(true_spec, r, sigma_hat)
    proj = SymOperator.from_product(vecs @ vecs.T)
    return EmpiricalProjector(proj, vals, separated)


def empirical_eigenvector(
    true_spec: SpectralData, r: int, sigma_hat: SymOperator
) -> tuple:
    """Unit eigenvector of ``sigma_hat`` matched to a multiplicity-1 target.

    Returns ``(vector, matched_eigenvalue, separated)``.  The sign of the
    vector is whatever the eigensolver produced; align it explicitly with
    :func:`align_sign` where a sign convention matters.
    """
    target = true_spec.check_index(r)
    if target.multiplicity != 1:
        raise ValueError(
            f"target eigenvalue has multiplicity {target.multiplicity}; expected 1"
        )
    vals, vecs, separated = _matched_eigh(true_spec, r, sigma_hat)
    return vecs[:, 0], float(vals[0]), separated


def align_sign(v: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Flip ``v`` if needed so that ``<v, reference> >= 0``.

    Both inputs must be unit vectors (within 1e-10).  An exactly orthogonal
    pair keeps the input sign.
    """
    v = np.asarray(v, dtype=float)
    reference = np.asarray(reference, dtype=float)
    for name, u in (("v", v), ("reference", reference)):
        if abs(float(np.linalg.norm(u)) - 1.0) > 1e-10:
            raise ValueError(f"{name} is not a unit vector")
    if float(v @ reference) < 0.0:
        return -v
    return v
