"""Dense symmetric operators, norms, and clustered spectral decompositions.

Everything downstream (perturbation expansions, covariance estimators, the
Monte Carlo harness) works with two value types defined here:

* :class:`SymOperator` -- an immutable dense symmetric ``d x d`` operator.
* :class:`SpectralData` -- a spectral decomposition grouped into distinct
  eigenvalues with multiplicities, eigenprojectors, and spectral gaps.

All functions are pure; values are safe to share across threads/processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "SymOperator",
    "DistinctEigenvalue",
    "SpectralData",
    "op_norm",
    "hs_norm",
    "nuclear_norm",
    "trace",
    "hs_inner",
    "effective_rank",
    "spectral_decompose",
    "c_operator",
    "a_r",
    "b_r_normalizer",
]

# Construction-time tolerances (absolute, scaled by the operator magnitude).
_SYM_RTOL = 1e-10
_PROJ_TOL = 1e-10


def _as_readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True, order="C")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SymOperator:
    """Immutable dense symmetric operator on R^d.

    Symmetry is enforced at construction: ``|A - A.T|`` must not exceed
    ``1e-10 * max(1, |A|)`` entrywise.  Use :meth:`from_product` for matrices
    assembled from products, which symmetrizes instead of rejecting.
    """

    mat: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.mat, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if m.shape[0] < 1:
            raise ValueError("dimension must be >= 1")
        if not np.all(np.isfinite(m)):
            raise ValueError("entries must be finite")
        scale = max(1.0, float(np.abs(m).max()))
        if float(np.abs(m - m.T).max()) > _SYM_RTOL * scale:
            raise ValueError("matrix is not symmetric within tolerance")
        object.__setattr__(self, "mat", _as_readonly(0.5 * (m + m.T)))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "SymOperator":
        return cls(np.eye(dim))

    @classmethod
    def zero(cls, dim: int) -> "SymOperator":
        return cls(np.zeros((dim, dim)))

    @classmethod
    def diag(cls, values: Sequence[float]) -> "SymOperator":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def from_product(cls, mat: np.ndarray) -> "SymOperator":
        """Symmetrize ``mat`` (0.5 * (M + M^T)) before wrapping.

        For matrices that are symmetric in exact arithmetic but carry
        floating-point asymmetry from matrix products.
        """
        m = np.asarray(mat, dtype=float)
        return cls(0.5 * (m + m.T))

    def __add__(self, other: "SymOperator") -> "SymOperator":
        _check_same_dim(self, other)
        return SymOperator(self.mat + other.mat)

    def __sub__(self, other: "SymOperator") -> "SymOperator":
        _check_same_dim(self, other)
        return SymOperator(self.mat - other.mat)

    def __mul__(self, scalar: float) -> "SymOperator":
        return SymOperator(self.mat * float(scalar))

    __rmul__ = __mul__


def _check_same_dim(a: SymOperator, b: SymOperator) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def op_norm(a: SymOperator) -> float:
    """Operator norm: the largest absolute eigenvalue."""
    w = np.linalg.eigvalsh(a.mat)
    return float(max(abs(w[0]), abs(w[-1])))


def hs_norm(a: SymOperator) -> float:
    """Hilbert--Schmidt (Frobenius) norm: sqrt of the sum of squared entries."""
    return float(np.linalg.norm(a.mat))


def nuclear_norm(a: SymOperator) -> float:
    """Sum of absolute eigenvalues."""
    return float(np.abs(np.linalg.eigvalsh(a.mat)).sum())


def trace(a: SymOperator) -> float:
    return float(np.trace(a.mat))


def hs_inner(a: SymOperator, b: SymOperator) -> float:
    """Entrywise (trace) inner product of two same-dimension operators."""
    _check_same_dim(a, b)
    return float(np.tensordot(a.mat, b.mat))


def effective_rank(s: SymOperator) -> float:
    """tr(S) / |S|_op for a nonzero positive semi-definite operator.

    Always lies in ``[1, rank(S)]``; invariant under positive rescaling.
    """
    w = np.linalg.eigvalsh(s.mat)
    top = float(max(abs(w[0]), abs(w[-1])))
    if top == 0.0:
        raise ValueError("effective rank of the zero operator is undefined")
    tol = s.dim * np.finfo(float).eps * top
    if w[0] < -tol:
        raise ValueError(f"operator is not positive semi-definite (min eigenvalue {w[0]:.3e})")
    return float(w.sum() / top)


@dataclass(frozen=True, eq=False)
class DistinctEigenvalue:
    """One distinct nonzero eigenvalue with its eigenspace data.

    ``indices`` are the positions of this eigenvalue in the descending,
    multiplicity-repeated eigenvalue list; ``gap`` is the distance to the
    rest of the spectrum (including 0 when 0 is an eigenvalue, ``inf`` when
    no other spectrum point exists).
    """

    value: float
    multiplicity: int
    indices: tuple
    projector: SymOperator
    gap: float


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Spectral decomposition grouped into distinct eigenvalues.

    Structural invariants (multiplicity bookkeeping, index partition,
    descending order) are checked at construction.  The numeric projector
    invariants -- idempotence, trace equal to multiplicity, mutual
    orthogonality -- hold by construction for instances built by this
    library; :meth:`validate_numeric` re-verifies them on demand (the check
    is cubic in the dimension per projector pair, so it is not run on every
    construction).
    """

    eigenvalues_desc: np.ndarray
    distinct: tuple
    zero_is_eigenvalue: bool
    dim: int = field(init=False)

    def __post_init__(self) -> None:
        evals = _as_readonly(np.asarray(self.eigenvalues_desc, dtype=float).ravel())
        object.__setattr__(self, "eigenvalues_desc", evals)
        object.__setattr__(self, "dim", evals.size)
        object.__setattr__(self, "distinct", tuple(self.distinct))
        if np.any(np.diff(evals) > 1e-12 * max(1.0, float(np.abs(evals).max(initial=0.0)))):
            raise ValueError("eigenvalues are not in descending order")
        total_m = sum(de.multiplicity for de in self.distinct)
        if total_m > self.dim:
            raise ValueError("multiplicities exceed the dimension")
        if (total_m < self.dim) != self.zero_is_eigenvalue:
            raise ValueError("kernel dimension inconsistent with zero_is_eigenvalue")
        seen: set = set()
        for de in self.distinct:
            if de.multiplicity != len(de.indices):
                raise ValueError("multiplicity does not match the index set size")
            if de.projector.dim != self.dim:
                raise ValueError("projector dimension differs from eigenvalue count")
            if seen.intersection(de.indices):
                raise ValueError("distinct eigenvalues share eigenvalue indices")
            seen.update(de.indices)

    def validate_numeric(self, tol: float = _PROJ_TOL) -> None:
        """Verify idempotence, trace, and pairwise orthogonality of the
        projectors within ``tol`` (operator norm).  Raises on violation."""
        for de in self.distinct:
            p = de.projector.mat
            if abs(float(np.trace(p)) - de.multiplicity) > tol * self.dim:
                raise ValueError(
                    f"projector trace differs from multiplicity {de.multiplicity}"
                )
            if op_norm(SymOperator.from_product(p @ p - p)) > tol:
                raise ValueError("projector is not idempotent within tolerance")
        for i, de in enumerate(self.distinct):
            for other in self.distinct[i + 1 :]:
                cross = de.projector.mat @ other.projector.mat
                if float(np.linalg.norm(cross, 2)) > tol:
                    raise ValueError(
                        "projectors of distinct eigenvalues are not orthogonal"
                    )

    @property
    def gaps(self) -> tuple:
        return tuple(de.gap for de in self.distinct)

    def kernel_projector(self) -> SymOperator:
        """Projector onto the kernel (zero eigenspace); zero when full rank."""
        acc = np.eye(self.dim)
        for de in self.distinct:
            acc = acc - de.projector.mat
        if not self.zero_is_eigenvalue:
            acc = np.zeros_like(acc)
        return SymOperator.from_product(acc)

    def check_index(self, r: int) -> DistinctEigenvalue:
        if not 0 <= r < len(self.distinct):
            raise IndexError(f"distinct eigenvalue index {r} out of range [0, {len(self.distinct)})")
        return self.distinct[r]


def _gaps_from_values(values: np.ndarray, zero_is_eigenvalue: bool) -> np.ndarray:
    points = list(values)
    if zero_is_eigenvalue:
        points.append(0.0)
    gaps = np.empty(len(values))
    for i, mu in enumerate(values):
        others = [abs(mu - p) for j, p in enumerate(points) if j != i]
        gaps[i] = min(others) if others else np.inf
    return gaps


def spectral_decompose(s: SymOperator, cluster_rel_tol: float = 1e-8) -> SpectralData:
    """Eigendecompose ``s`` and merge near-equal eigenvalues into clusters.

    Eigenvalues whose consecutive spacing is at most
    ``cluster_rel_tol * |s|_op`` are merged into one distinct eigenvalue whose
    value is the mean over the (multiplicity-repeated) cluster members.
    Eigenvalues with magnitude below ``dim * eps * |s|_op`` are reported as
    the zero eigenvalue and excluded from the distinct list.
    """
    if not 0.0 < cluster_rel_tol <= 1e-2:
        raise ValueError("cluster_rel_tol must lie in (0, 1e-2]")
    w, v = np.linalg.eigh(s.mat)
    w = w[::-1]
    v = v[:, ::-1]
    top = float(max(abs(w[0]), abs(w[-1])))
    rank_tol = s.dim * np.finfo(float).eps * top
    nonzero = np.flatnonzero(np.abs(w) > rank_tol)
    zero_is_eigenvalue = nonzero.size < s.dim

    distinct = []
    if nonzero.size:
        merge_tol = cluster_rel_tol * top
        start = 0
        bounds = []
        for i in range(1, nonzero.size):
            if w[nonzero[i - 1]] - w[nonzero[i]] > merge_tol or nonzero[i] != nonzero[i - 1] + 1:
                bounds.append((start, i))
                start = i
        bounds.append((start, nonzero.size))
        cluster_values = np.array([float(np.mean(w[nonzero[a:b]])) for a, b in bounds])
        gaps = _gaps_from_values(cluster_values, zero_is_eigenvalue)
        for (a, b), mu, gap in zip(bounds, cluster_values, gaps):
            idx = tuple(int(j) for j in nonzero[a:b])
            basis = v[:, list(idx)]
            proj = SymOperator.from_product(basis @ basis.T)
            distinct.append(DistinctEigenvalue(mu, b - a, idx, proj, float(gap)))

    evals_out = w.copy()
    if zero_is_eigenvalue:
        mask = np.ones(s.dim, dtype=bool)
        mask[nonzero] = False
        evals_out[mask] = 0.0
    return SpectralData(evals_out, tuple(distinct), zero_is_eigenvalue)


def c_operator(spec: SpectralData, r: int) -> SymOperator:
    """Reduced resolvent at the r-th distinct eigenvalue.

    Sum of ``P_s / (mu_r - mu_s)`` over all other distinct eigenvalues,
    extended with the kernel projector at eigenvalue 0 when 0 belongs to the
    spectrum.  Satisfies ``C_r P_r = P_r C_r = 0`` and ``|C_r|_op = 1/gap_r``.
    """
    target = spec.check_index(r)
    acc = np.zeros((spec.dim, spec.dim))
    for i, de in enumerate(spec.distinct):
        if i == r:
            continue
        acc += de.projector.mat / (target.value - de.value)
    if spec.zero_is_eigenvalue:
        acc += spec.kernel_projector().mat / target.value
    return SymOperator.from_product(acc)


def a_r(spec: SpectralData, s: SymOperator, r: int) -> float:
    """Expectation-scale functional 2 tr(P_r S P_r) tr(C_r S C_r).

    Zero when the spectrum has a single distinct nonzero eigenvalue (the
    complementary sum is empty).
    """
    p = spec.check_index(r).projector.mat
    c = c_operator(spec, r).mat
    return 2.0 * float(np.trace(p @ s.mat @ p)) * float(np.trace(c @ s.mat @ c))


def b_r_normalizer(spec: SpectralData, s: SymOperator, r: int) -> float:
    """Variance-scale functional 2*sqrt(2) |P_r S P_r|_2 |C_r S C_r|_2."""
    p = spec.check_index(r).projector.mat
    c = c_operator(spec, r).mat
    return (
        2.0
        * math.sqrt(2.0)
        * float(np.linalg.norm(p @ s.mat @ p))
        * float(np.linalg.norm(c @ s.mat @ c))
    )
