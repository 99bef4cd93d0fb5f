"""Monte Carlo harness: ground-truth covariance models, reproducible trial
execution, oracle bias estimation, and distributional verification of the
limit laws.

Reproducibility contract
------------------------
Every random stream is derived from ``(master_seed, namespace, index)`` via
``numpy.random.SeedSequence`` spawn keys, and all linear algebra runs on a
single BLAS thread, so

* a report is a pure function of the :class:`TrialConfig` and thresholds;
* per-trial outcomes do not depend on execution order or on the number of
  worker processes;
* the oracle and the trial runner never share a stream.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
from threadpoolctl import threadpool_limits

from .estimators import ci_bias, pivots, sample_covariance
from .limits import BIAS_PIVOT_LIMIT, PROJ_PIVOT_LIMIT, _std_normal_cdf_vec
from .operators import (
    DistinctEigenvalue,
    SpectralData,
    SymOperator,
    b_r_normalizer,
    effective_rank,
    op_norm,
)

__all__ = [
    "CovarianceModel",
    "TrialConfig",
    "Thresholds",
    "TrialOutcome",
    "CheckRecord",
    "OracleBias",
    "MonteCarloReport",
    "build_covariance",
    "spectral_sqrt",
    "sample_gaussian",
    "oracle_bias",
    "run_trials",
    "ks_distance",
    "verify",
]

# Seed-sequence namespaces; distinct first spawn-key component per purpose.
_NS_TRIALS = 0
_NS_ORACLE = 1
_NS_ROTATION = 2

# Verification constants fixed by the acceptance battery.
_CI_LEVEL = 0.9
_COVERAGE_TOL = 0.03
_MEAN_DENOM_REL = 0.15
_MEAN_ABS_NORMAL = math.sqrt(3.0 / math.pi)
_DENOM_STAT_VAR = 1.5
_RISK_BIAS_SIGMAS = 4.0
_PHI_MAX_DENSITY = 1.0 / math.sqrt(2.0 * math.pi)

_ORACLE_CHUNK = 512
_TRIAL_CHUNK = 64


@dataclass(frozen=True)
class CovarianceModel:
    """Declarative ground-truth spectrum for simulation.

    ``kind`` selects the spectrum: ``spiked`` (each spike adds to the noise
    floor ``sigma2``, followed by ``dim - len(spikes)`` noise eigenvalues),
    ``geometric`` (``top * ratio**j``), or ``explicit`` (a full descending
    eigenvalue list).  ``target_index`` picks which distinct eigenvalue is
    under study.  ``rotate`` conjugates the diagonal truth by a seeded Haar
    orthogonal matrix to exercise non-diagonal code paths.
    """

    kind: str
    dim: int
    spikes: tuple = ()
    sigma2: float = 1.0
    top: float = 1.0
    ratio: float = 0.5
    eigenvalues: tuple = ()
    target_index: int = 0
    rotate: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "spikes", tuple(float(s) for s in self.spikes))
        object.__setattr__(
            self, "eigenvalues", tuple(float(v) for v in self.eigenvalues)
        )
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.target_index < 0:
            raise ValueError("target_index must be >= 0")
        if self.kind == "spiked":
            if not self.sigma2 > 0.0:
                raise ValueError("sigma2 must be > 0")
            if len(self.spikes) >= self.dim:
                raise ValueError("need fewer spikes than dimensions")
            if any(s <= 0.0 for s in self.spikes):
                raise ValueError("spikes must be > 0")
            if any(a <= b for a, b in zip(self.spikes, self.spikes[1:])):
                raise ValueError("spikes must be strictly decreasing")
        elif self.kind == "geometric":
            if not self.top > 0.0:
                raise ValueError("top must be > 0")
            if not 0.0 < self.ratio < 1.0:
                raise ValueError("ratio must lie in (0, 1)")
        elif self.kind == "explicit":
            if len(self.eigenvalues) != self.dim:
                raise ValueError("explicit spectrum must list dim eigenvalues")
            if any(v < 0.0 for v in self.eigenvalues):
                raise ValueError("eigenvalues must be >= 0")
            if any(a < b for a, b in zip(self.eigenvalues, self.eigenvalues[1:])):
                raise ValueError("eigenvalues must be non-increasing")
            if all(v == 0.0 for v in self.eigenvalues):
                raise ValueError("spectrum is identically zero")
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")

    def spectrum(self) -> np.ndarray:
        """Full descending eigenvalue list, repeated with multiplicity."""
        if self.kind == "spiked":
            vals = [s + self.sigma2 for s in self.spikes]
            vals += [self.sigma2] * (self.dim - len(self.spikes))
            return np.array(vals)
        if self.kind == "geometric":
            return self.top * self.ratio ** np.arange(self.dim)
        return np.array(self.eigenvalues)


def _haar_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    return q * np.sign(np.diag(r))


def _distinct_groups(vals: np.ndarray):
    """Distinct nonzero values (descending) with their index sets and gaps."""
    groups: dict = {}
    for j, v in enumerate(vals):
        if v != 0.0:
            groups.setdefault(float(v), []).append(j)
    values = sorted(groups, reverse=True)
    zero_is_eigenvalue = sum(len(ix) for ix in groups.values()) < vals.size
    points = values + ([0.0] if zero_is_eigenvalue else [])
    gaps = []
    for mu in values:
        others = [abs(mu - p) for p in points if p != mu]
        gaps.append(min(others) if others else np.inf)
    return values, [tuple(groups[v]) for v in values], gaps, zero_is_eigenvalue


def _model_basis(
    model: CovarianceModel, rotation_rng: Optional[np.random.Generator]
) -> np.ndarray:
    if model.rotate:
        rng = rotation_rng if rotation_rng is not None else np.random.default_rng(0)
        return _haar_orthogonal(model.dim, rng)
    return np.eye(model.dim)


def build_covariance(
    model: CovarianceModel, rotation_rng: Optional[np.random.Generator] = None
) -> tuple:
    """Ground-truth operator and its exact spectral data.

    Multiplicities come from the declared spectrum (exact value grouping),
    never from numerical clustering.  Returns ``(sigma, spectral_data)``.
    """
    vals = model.spectrum()
    basis = _model_basis(model, rotation_rng)
    values, index_sets, gaps, zero_is_eigenvalue = _distinct_groups(vals)
    distinct = []
    for mu, idx, gap in zip(values, index_sets, gaps):
        cols = basis[:, list(idx)]
        proj = SymOperator.from_product(cols @ cols.T)
        distinct.append(DistinctEigenvalue(mu, len(idx), idx, proj, float(gap)))
    sigma = SymOperator.from_product((basis * vals) @ basis.T)
    spec = SpectralData(vals, tuple(distinct), zero_is_eigenvalue)
    if model.target_index >= len(spec.distinct):
        raise ValueError(
            f"target_index {model.target_index} out of range for "
            f"{len(spec.distinct)} distinct eigenvalues"
        )
    return sigma, spec


def spectral_sqrt(spec: SpectralData) -> SymOperator:
    """Positive square root assembled from the spectral data."""
    acc = np.zeros((spec.dim, spec.dim))
    for de in spec.distinct:
        if de.value < 0.0:
            raise ValueError("square root requires a PSD spectrum")
        acc += math.sqrt(de.value) * de.projector.mat
    return SymOperator.from_product(acc)


def sample_gaussian(
    sigma_root: SymOperator, n: int, rng: np.random.Generator
) -> np.ndarray:
    """n independent mean-zero Gaussian rows with covariance ``sigma_root**2``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    z = rng.standard_normal((n, sigma_root.dim))
    return z @ sigma_root.mat


@dataclass(frozen=True)
class TrialConfig:
    """One Monte Carlo experiment: model, sample size, counts, seed."""

    model: CovarianceModel
    n: int
    trials: int
    master_seed: int
    oracle_reps: int = 100_000

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.oracle_reps < 2:
            raise ValueError("oracle_reps must be >= 2")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class Thresholds:
    """Engineering tolerances for the distributional checks."""

    ks_normal: float = 0.08
    ks_cauchy: float = 0.08
    moment_rel: float = 0.2

    def __post_init__(self) -> None:
        for name in ("ks_normal", "ks_cauchy", "moment_rel"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class TrialOutcome:
    """Statistics of a single three-sample trial."""

    trial_index: int
    b_hat: float
    b_tilde: float
    denom: float
    proj_error_sq: float
    op_norm_error: float
    pivot_bias: Optional[float]
    pivot_proj: Optional[float]
    normalized_proj_stat: Optional[float]
    degenerate: bool
    separated: bool


@dataclass(frozen=True)
class OracleBias:
    """Brute-force Monte Carlo estimate of the alignment bias, with its
    standard error."""

    value: float
    se: float
    reps: int


@dataclass(frozen=True)
class CheckRecord:
    name: str
    kind: str  # "ks" | "moment" | "coverage"
    value: float
    lo: float
    hi: float
    passed: bool


@dataclass(frozen=True)
class MonteCarloReport:
    config: TrialConfig
    thresholds: Thresholds
    oracle: OracleBias
    checks: tuple
    diagnostics: dict
    trials: int
    degenerate_count: int
    all_pass: bool

    def to_dict(self) -> dict:
        model = self.config.model
        return {
            "config": {
                "model": {
                    "kind": model.kind,
                    "dim": model.dim,
                    "spikes": list(model.spikes),
                    "sigma2": model.sigma2,
                    "top": model.top,
                    "ratio": model.ratio,
                    "eigenvalues": list(model.eigenvalues),
                    "target_index": model.target_index,
                    "rotate": model.rotate,
                },
                "n": self.config.n,
                "trials": self.config.trials,
                "master_seed": self.config.master_seed,
                "oracle_reps": self.config.oracle_reps,
                "thresholds": {
                    "ks_normal": self.thresholds.ks_normal,
                    "ks_cauchy": self.thresholds.ks_cauchy,
                    "moment_rel": self.thresholds.moment_rel,
                },
            },
            "oracle_b": {
                "value": self.oracle.value,
                "se": self.oracle.se,
                "reps": self.oracle.reps,
            },
            "checks": [
                {
                    "name": c.name,
                    "kind": c.kind,
                    "value": c.value,
                    "lo": c.lo,
                    "hi": c.hi,
                    "pass": c.passed,
                }
                for c in self.checks
            ],
            "diagnostics": self.diagnostics,
            "trial_count": self.trials,
            "degenerate_count": self.degenerate_count,
            "all_pass": self.all_pass,
        }


def _trial_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(_NS_TRIALS, index))
    )


def _oracle_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(_NS_ORACLE, index))
    )


def _rotation_rng(master_seed: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(_NS_ROTATION,))
    )


@dataclass(frozen=True, eq=False)
class _ModelContext:
    """Per-worker precomputed sampling context for one configuration.

    Built directly from the declared spectrum so that worker startup stays
    cheap even for models with many distinct eigenvalues.
    """

    root: SymOperator
    theta: np.ndarray
    sigma_mat: np.ndarray
    mu: float
    gap: float
    asc_lo: int
    asc_hi: int
    dim: int

    @classmethod
    def from_config(cls, cfg: TrialConfig) -> "_ModelContext":
        model = cfg.model
        vals = model.spectrum()
        basis = _model_basis(model, _rotation_rng(cfg.master_seed))
        values, index_sets, gaps, _ = _distinct_groups(vals)
        if model.target_index >= len(values):
            raise ValueError(
                f"target_index {model.target_index} out of range for "
                f"{len(values)} distinct eigenvalues"
            )
        idx = index_sets[model.target_index]
        if len(idx) != 1:
            raise ValueError(
                "pivot experiments require a multiplicity-1 target eigenvalue"
            )
        d = model.dim
        return cls(
            root=SymOperator.from_product((basis * np.sqrt(vals)) @ basis.T),
            theta=basis[:, idx[0]].copy(),
            sigma_mat=np.asarray((basis * vals) @ basis.T),
            mu=values[model.target_index],
            gap=float(gaps[model.target_index]),
            asc_lo=d - 1 - max(idx),
            asc_hi=d - 1 - min(idx),
            dim=d,
        )

    def matched_vector(self, s: SymOperator):
        """Matched eigenvector, its eigenvalue, and the separation flag."""
        vals, vecs = scipy.linalg.eigh(
            s.mat, subset_by_index=(self.asc_lo, self.asc_hi), driver="evr"
        )
        lam = float(vals[0])
        separated = abs(lam - self.mu) < 0.5 * self.gap
        return vecs[:, 0], lam, separated


def _oracle_chunk(args: tuple) -> np.ndarray:
    cfg, start, stop = args
    with threadpool_limits(limits=1):
        ctx = _ModelContext.from_config(cfg)
        out = np.empty(stop - start)
        for i, rep in enumerate(range(start, stop)):
            rng = _oracle_rng(cfg.master_seed, rep)
            x = sample_gaussian(ctx.root, cfg.n, rng)
            vec, _, _ = ctx.matched_vector(sample_covariance(x))
            out[i] = min(float(vec @ ctx.theta) ** 2, 1.0) - 1.0
    return out


def _trial_chunk(args: tuple) -> list:
    cfg, start, stop, oracle_b, b_n, keep_vectors = args
    with threadpool_limits(limits=1):
        ctx = _ModelContext.from_config(cfg)
        sigma_op = SymOperator(ctx.sigma_mat)
        out = []
        for t in range(start, stop):
            rng = _trial_rng(cfg.master_seed, t)
            thetas = []
            first_cov = None
            separated = True
            for block in range(3):
                x = sample_gaussian(ctx.root, cfg.n, rng)
                s = sample_covariance(x)
                vec, _, sep = ctx.matched_vector(s)
                thetas.append(vec)
                if block == 0:
                    first_cov = s
                    separated = sep
            ps = pivots(
                thetas[0],
                thetas[1],
                thetas[2],
                true_theta=ctx.theta,
                oracle_bias=oracle_b,
            )
            op_err = op_norm(first_cov - sigma_op)
            if oracle_b is not None:
                nps = cfg.n * (ps.proj_error_sq + 2.0 * oracle_b) / b_n
            else:
                nps = None
            outcome = TrialOutcome(
                trial_index=t,
                b_hat=ps.b_hat,
                b_tilde=ps.b_tilde,
                denom=ps.denom,
                proj_error_sq=ps.proj_error_sq,
                op_norm_error=op_err,
                pivot_bias=ps.pivot_bias,
                pivot_proj=ps.pivot_proj,
                normalized_proj_stat=nps,
                degenerate=ps.degenerate,
                separated=separated,
            )
            out.append((outcome, thetas[0] if keep_vectors else None))
    return out


def _chunk_ranges(total: int, chunk: int) -> list:
    return [(a, min(a + chunk, total)) for a in range(0, total, chunk)]


def _pmap(fn: Callable, tasks: Sequence, workers: int) -> list:
    """Order-preserving map, optionally across worker processes.

    Results depend only on the task list, never on scheduling: every task
    runs its linear algebra on one BLAS thread (the chunk functions pin it),
    so outputs are bit-identical for any worker count.
    """
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    import multiprocessing

    methods = multiprocessing.get_all_start_methods()
    ctx = multiprocessing.get_context("fork" if "fork" in methods else "spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(fn, tasks))


def oracle_bias(cfg: TrialConfig, workers: int = 1) -> OracleBias:
    """Monte Carlo estimate of ``b = E <theta_hat, theta>^2 - 1``.

    Draws ``cfg.oracle_reps`` independent size-n samples on a dedicated seed
    namespace; the estimand is unobservable in practice and is used here
    only to verify the theory.  Always nonpositive.
    """
    _ModelContext.from_config(cfg)  # validate the target up front
    tasks = [(cfg, a, b) for a, b in _chunk_ranges(cfg.oracle_reps, _ORACLE_CHUNK)]
    values = np.concatenate(_pmap(_oracle_chunk, tasks, workers))
    value = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(values.size))
    return OracleBias(value=value, se=se, reps=cfg.oracle_reps)


def run_trials(
    cfg: TrialConfig,
    oracle_b: Optional[float] = None,
    workers: int = 1,
    keep_vectors: bool = False,
):
    """Execute ``cfg.trials`` independent three-sample trials.

    Each trial draws three fresh blocks, extracts the matched eigenvector of
    each sample covariance, and records the pivot statistics.  Oracle-
    dependent fields are None unless ``oracle_b`` is supplied.  With
    ``keep_vectors=True`` returns ``(outcomes, theta_hats, true_theta)``
    instead of just the outcome list.
    """
    ctx = _ModelContext.from_config(cfg)
    sigma, spec = build_covariance(
        cfg.model, rotation_rng=_rotation_rng(cfg.master_seed)
    )
    b_n = b_r_normalizer(spec, sigma, cfg.model.target_index)
    tasks = [
        (cfg, a, b, oracle_b, b_n, keep_vectors)
        for a, b in _chunk_ranges(cfg.trials, _TRIAL_CHUNK)
    ]
    pairs = [p for chunk in _pmap(_trial_chunk, tasks, workers) for p in chunk]
    outcomes = [p[0] for p in pairs]
    if keep_vectors:
        theta_hats = np.stack([p[1] for p in pairs])
        return outcomes, theta_hats, ctx.theta
    return outcomes


def ks_distance(sorted_sample: np.ndarray, cdf: Callable) -> float:
    """Kolmogorov--Smirnov distance between a sorted sample and a CDF.

    ``max_i max(|F(x_i) - i/N|, |F(x_i) - (i-1)/N|)`` over the ascending
    sample; equals the sup distance between the empirical and reference CDF.
    """
    x = np.asarray(sorted_sample, dtype=float)
    if x.size == 0:
        raise ValueError("sample must be nonempty")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample must be finite")
    if np.any(np.diff(x) < 0.0):
        raise ValueError("sample must be sorted ascending")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, x.size + 1)
    hi = np.abs(f - i / x.size).max()
    lo = np.abs(f - (i - 1) / x.size).max()
    return float(max(hi, lo))


def _moment_check(name: str, value: float, center: float, rel: float) -> CheckRecord:
    lo, hi = center * (1.0 - rel), center * (1.0 + rel)
    return CheckRecord(name, "moment", float(value), lo, hi, bool(lo <= value <= hi))


def verify(
    cfg: TrialConfig,
    thresholds: Thresholds = Thresholds(),
    workers: int = 1,
    return_outcomes: bool = False,
):
    """Full verification battery for one configuration.

    Runs the oracle, then the trials, then checks: normal limits of the
    centered squared projector error and of the bias estimate, the
    Cauchy-mixture limits of both studentized pivots, the variance and
    absolute-moment normalizations of the denominator statistic, confidence
    interval coverage of the oracle bias, and the risk--bias identity.  The
    operator-norm error ratio is recorded in the diagnostics.

    Returns the :class:`MonteCarloReport`, or ``(report, outcomes)`` with
    ``return_outcomes=True``.
    """
    sigma, spec = build_covariance(
        cfg.model, rotation_rng=_rotation_rng(cfg.master_seed)
    )
    r = cfg.model.target_index
    target = spec.check_index(r)
    b_n = b_r_normalizer(spec, sigma, r)
    if b_n == 0.0:
        raise ValueError(
            "normalizer B is zero: the target has no complementary spectrum"
        )
    eff_rank = effective_rank(sigma)

    oracle = oracle_bias(cfg, workers=workers)
    outcomes = run_trials(cfg, oracle_b=oracle.value, workers=workers)

    b_hat = np.array([o.b_hat for o in outcomes])
    b_tilde = np.array([o.b_tilde for o in outcomes])
    proj_sq = np.array([o.proj_error_sq for o in outcomes])
    op_err = np.array([o.op_norm_error for o in outcomes])
    degenerate_count = int(sum(o.degenerate for o in outcomes))
    piv_bias = np.array([o.pivot_bias for o in outcomes if not o.degenerate])
    piv_proj = np.array([o.pivot_proj for o in outcomes if not o.degenerate])
    norm_proj = np.array([o.normalized_proj_stat for o in outcomes])

    n = cfg.n
    checks = []

    # (a) centered squared projector error is asymptotically standard normal.
    ks_a = ks_distance(np.sort(norm_proj), _std_normal_cdf_vec)
    checks.append(
        CheckRecord(
            "proj_stat_normal", "ks", ks_a, 0.0, thresholds.ks_normal,
            ks_a <= thresholds.ks_normal,
        )
    )

    # (b) same for the bias estimate around the oracle value; the oracle's
    # standard error shifts the statistic by 2 n se / B, folded into the
    # tolerance through the peak normal density.
    bias_stat = np.sort(2.0 * n * (b_hat - oracle.value) / b_n)
    ks_b = ks_distance(bias_stat, _std_normal_cdf_vec)
    tol_b = thresholds.ks_normal + _PHI_MAX_DENSITY * (2.0 * n * oracle.se / b_n)
    checks.append(
        CheckRecord("bias_stat_normal", "ks", ks_b, 0.0, tol_b, ks_b <= tol_b)
    )

    # (c, d) studentized pivots against their Cauchy-mixture limits.
    ks_c = ks_distance(np.sort(piv_bias), BIAS_PIVOT_LIMIT.cdf)
    checks.append(
        CheckRecord(
            "bias_pivot_cauchy", "ks", ks_c, 0.0, thresholds.ks_cauchy,
            ks_c <= thresholds.ks_cauchy,
        )
    )
    ks_d = ks_distance(np.sort(piv_proj), PROJ_PIVOT_LIMIT.cdf)
    checks.append(
        CheckRecord(
            "proj_pivot_cauchy", "ks", ks_d, 0.0, thresholds.ks_cauchy,
            ks_d <= thresholds.ks_cauchy,
        )
    )

    # (e) variance of the squared projector error, normalized by (B/n)^2.
    var_proj = float(proj_sq.var(ddof=1)) * n * n / (b_n * b_n)
    checks.append(_moment_check("proj_var_ratio", var_proj, 1.0, thresholds.moment_rel))

    # (f) variance of the signed denominator statistic, limit 3/2.
    signed = (1.0 + b_hat) ** 2 - (1.0 + b_tilde) ** 2
    var_denom = float((n * signed / b_n).var(ddof=1))
    checks.append(
        _moment_check("denom_stat_var", var_denom, _DENOM_STAT_VAR, thresholds.moment_rel)
    )

    # (g) mean absolute denominator, limit sqrt(3/pi).
    denom = np.array([o.denom for o in outcomes])
    mean_denom = float((n * denom / b_n).mean())
    checks.append(
        _moment_check("mean_abs_denom", mean_denom, _MEAN_ABS_NORMAL, _MEAN_DENOM_REL)
    )

    # (i) coverage of the oracle bias by the level-0.9 bias interval.
    covered = 0
    for bh, bt in zip(b_hat, b_tilde):
        ci = ci_bias(float(bh), float(bt), _CI_LEVEL)
        if ci.lo <= oracle.value <= ci.hi:
            covered += 1
    coverage = covered / len(outcomes)
    checks.append(
        CheckRecord(
            "ci_coverage_bias",
            "coverage",
            coverage,
            _CI_LEVEL - _COVERAGE_TOL,
            _CI_LEVEL + _COVERAGE_TOL,
            abs(coverage - _CI_LEVEL) <= _COVERAGE_TOL,
        )
    )

    # Risk--bias identity: mean squared error agrees with -2b within
    # combined Monte Carlo uncertainty.
    mean_proj = float(proj_sq.mean())
    se_proj = float(proj_sq.std(ddof=1) / math.sqrt(proj_sq.size))
    se_comb = math.hypot(se_proj, 2.0 * oracle.se)
    gap_rb = abs(mean_proj + 2.0 * oracle.value)
    checks.append(
        CheckRecord(
            "risk_bias_identity",
            "moment",
            gap_rb,
            0.0,
            _RISK_BIAS_SIGMAS * se_comb,
            gap_rb <= _RISK_BIAS_SIGMAS * se_comb,
        )
    )

    # (h) operator-norm error ratio: recorded, constant-free.
    rate = max(math.sqrt(eff_rank / n), eff_rank / n)
    op_ratio = float(op_err.mean()) / (op_norm(sigma) * rate)

    # Matched-cluster separation whenever the operator error allows it.
    weyl_violations = int(
        sum(
            1
            for o in outcomes
            if o.op_norm_error < 0.5 * target.gap and not o.separated
        )
    )

    diagnostics = {
        "effective_rank": eff_rank,
        "B": b_n,
        "rank_over_B_sqrt_n": eff_rank / (b_n * math.sqrt(n)),
        "op_norm_over_gap": op_norm(sigma) / target.gap,
        "target_multiplicity": target.multiplicity,
        "target_eigenvalue": target.value,
        "target_gap": target.gap,
        "op_norm_error_mean": float(op_err.mean()),
        "op_norm_error_ratio": op_ratio,
        "mean_proj_error_sq": mean_proj,
        "risk_bias_reference": -2.0 * oracle.value,
        "weyl_cluster_violations": weyl_violations,
        "seed_scheme": "SeedSequence(master_seed, spawn_key=(namespace, index))",
    }

    report = MonteCarloReport(
        config=cfg,
        thresholds=thresholds,
        oracle=oracle,
        checks=tuple(checks),
        diagnostics=diagnostics,
        trials=cfg.trials,
        degenerate_count=degenerate_count,
        all_pass=bool(all(c.passed for c in checks)),
    )
    if return_outcomes:
        return report, outcomes
    return report
