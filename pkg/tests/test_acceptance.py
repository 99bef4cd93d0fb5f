"""Acceptance battery.

Thirteen criteria gate the library: exact perturbation identities at small
dimension, the limit-law suite for the mixture distribution, and Monte Carlo
distributional checks on the reference configuration (see ``conftest``).
Each test prints one pass/fail line; tolerances are fixed here and do not
adapt to observed values.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
import scipy.integrate

from spectral_pivot import (
    BIAS_PIVOT_LIMIT,
    PROJ_PIVOT_LIMIT,
    CauchyMixture,
    CovarianceModel,
    SymOperator,
    TrialConfig,
    empirical_projector,
    hs_norm,
    ks_distance,
    op_norm,
    remainder_series,
    run_trials,
    spectral_decompose,
)
from conftest import CONFIG_R, worker_count

MEAN_ABS_NORMAL = math.sqrt(3.0 / math.pi)
PHI_MAX_DENSITY = 1.0 / math.sqrt(2.0 * math.pi)


def report_line(number: int, ok: bool, detail: str) -> None:
    verdict = "PASS" if ok else "FAIL"
    print(f"criterion {number:02d} {verdict}: {detail}")


def random_gapped_instance(rng, d):
    steps = rng.uniform(0.25, 1.0, size=d)
    evals = 0.5 + np.cumsum(steps)[::-1]
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return SymOperator.from_product((q * evals) @ q.T)


def perturbed_instance(rng, ratio_lo, ratio_hi, log_uniform=False):
    d = int(rng.integers(3, 11))
    s = random_gapped_instance(rng, d)
    spec = spectral_decompose(s)
    r = int(rng.integers(len(spec.distinct)))
    gap = spec.distinct[r].gap
    if log_uniform:
        ratio = 10.0 ** rng.uniform(math.log10(ratio_lo), math.log10(ratio_hi))
    else:
        ratio = float(rng.uniform(ratio_lo, ratio_hi))
    g = rng.standard_normal((d, d))
    e = SymOperator.from_product((g + g.T) / 2.0)
    e = (ratio * gap / op_norm(e)) * e
    return s, spec, r, e, ratio


def get_check(report, name):
    for check in report.checks:
        if check.name == name:
            return check
    raise AssertionError(f"check {name} missing from report")


def test_criterion_01_exact_decomposition():
    rng = np.random.default_rng(1001)
    worst = 0.0
    for _ in range(200):
        s, spec, r, e, _ = perturbed_instance(rng, 0.005, 0.05)
        split = remainder_series(spec, r, e)
        p_hat = empirical_projector(spec, r, s + e).projector
        drift = (
            p_hat.mat
            - spec.distinct[r].projector.mat
            - split.linear.mat
            - split.remainder.mat
        )
        worst = max(worst, op_norm(SymOperator.from_product(drift)))
    ok = worst <= 1e-9
    report_line(1, ok, f"projector split drift {worst:.3e} <= 1e-09 on 200 instances")
    assert ok


def test_criterion_02_remainder_certificate():
    rng = np.random.default_rng(1002)
    violations = 0
    worst_margin = 0.0
    for _ in range(1000):
        s, spec, r, e, ratio = perturbed_instance(rng, 1e-3, 0.24, log_uniform=True)
        bound = 14.0 * ratio * ratio
        split = remainder_series(spec, r, e)
        p_hat = empirical_projector(spec, r, s + e).projector
        exact = p_hat.mat - spec.distinct[r].projector.mat - split.linear.mat
        series_norm = op_norm(split.remainder)
        exact_norm = op_norm(SymOperator.from_product(exact))
        if series_norm > bound or exact_norm > bound:
            violations += 1
        worst_margin = max(worst_margin, series_norm / bound, exact_norm / bound)
    ok = violations == 0
    report_line(
        2,
        ok,
        f"remainder bound 14*(|E|/gap)^2: {violations} violations, worst usage "
        f"{worst_margin:.3f} of the bound (1000 instances)",
    )
    assert ok


def test_criterion_03_per_trial_identity(reference_vectors):
    outcomes, theta_hats, theta = reference_vectors
    true_proj = np.outer(theta, theta)
    worst = 0.0
    for outcome, th in zip(outcomes, theta_hats):
        direct = hs_norm(SymOperator.from_product(np.outer(th, th) - true_proj)) ** 2
        worst = max(worst, abs(direct - outcome.proj_error_sq))
    ok = worst <= 1e-12
    report_line(
        3, ok, f"squared-error identity gap {worst:.3e} <= 1e-12 on {len(outcomes)} trials"
    )
    assert ok


def test_criterion_04_mixture_law_suite():
    params = [BIAS_PIVOT_LIMIT, PROJ_PIVOT_LIMIT, CauchyMixture(0.0, 1.0)]

    worst_quad = 0.0
    for dist in params:
        for t in (1.0, 10.0, 100.0):
            mass, _ = scipy.integrate.quad(
                dist.pdf, -t, t, epsabs=1e-12, epsrel=1e-12, limit=500
            )
            worst_quad = max(worst_quad, abs(dist.cdf(t) - dist.cdf(-t) - mass))

    worst_round = 0.0
    for dist in params:
        for p in np.linspace(0.01, 0.99, 49):
            worst_round = max(worst_round, abs(dist.cdf(dist.quantile(p)) - p))
        for x in np.linspace(-20.0, 20.0, 41):
            worst_round = max(worst_round, abs(dist.quantile(dist.cdf(x)) - x))

    rng = np.random.default_rng(1004)
    worst_ks = 0.0
    n = 1_000_000
    for dist in (BIAS_PIVOT_LIMIT, PROJ_PIVOT_LIMIT):
        for draw in (dist.sample_direct, dist.sample_ratio):
            sample = np.sort(draw(rng, size=n))
            worst_ks = max(worst_ks, ks_distance(sample, dist.cdf))

    ok = worst_quad <= 1e-8 and worst_round <= 1e-8 and worst_ks <= 0.005
    report_line(
        4,
        ok,
        f"mixture law: quadrature gap {worst_quad:.2e} <= 1e-08, round-trip "
        f"{worst_round:.2e} <= 1e-08, sampler KS {worst_ks:.4f} <= 0.005",
    )
    assert ok


def test_criterion_05_proj_stat_normal_limit(reference_run):
    report, _ = reference_run
    check = get_check(report, "proj_stat_normal")
    ok = check.value <= 0.08
    report_line(5, ok, f"KS(centered squared error, normal) {check.value:.4f} <= 0.08")
    assert ok


def test_criterion_06_bias_stat_normal_limit(reference_run):
    report, _ = reference_run
    check = get_check(report, "bias_stat_normal")
    b = report.diagnostics["B"]
    fold = PHI_MAX_DENSITY * (2.0 * CONFIG_R.n * report.oracle.se / b)
    bound = 0.08 + fold
    ok = check.value <= bound
    report_line(
        6,
        ok,
        f"KS(bias statistic, normal) {check.value:.4f} <= {bound:.4f} "
        f"(0.08 plus oracle-noise fold {fold:.4f})",
    )
    assert ok
    assert check.hi == pytest.approx(bound, rel=1e-12)


def test_criterion_07_bias_pivot_limit(reference_run):
    report, _ = reference_run
    check = get_check(report, "bias_pivot_cauchy")
    ok = check.value <= 0.08
    report_line(7, ok, f"KS(bias pivot, mixture(1/2, sqrt(5/12))) {check.value:.4f} <= 0.08")
    assert ok


def test_criterion_08_proj_pivot_limit(reference_run):
    report, _ = reference_run
    check = get_check(report, "proj_pivot_cauchy")
    ok = check.value <= 0.08
    report_line(
        8, ok, f"KS(projector pivot, mixture(5/6, sqrt(47)/6)) {check.value:.4f} <= 0.08"
    )
    assert ok


def test_criterion_09_moment_normalizations(reference_run):
    report, _ = reference_run
    var_proj = get_check(report, "proj_var_ratio").value
    var_denom = get_check(report, "denom_stat_var").value
    mean_denom = get_check(report, "mean_abs_denom").value
    ok = (
        0.8 <= var_proj <= 1.2
        and 1.5 * 0.8 <= var_denom <= 1.5 * 1.2
        and MEAN_ABS_NORMAL * 0.85 <= mean_denom <= MEAN_ABS_NORMAL * 1.15
    )
    report_line(
        9,
        ok,
        f"moments: n^2 Var/B^2 = {var_proj:.3f} in [0.8, 1.2]; denominator-statistic "
        f"variance {var_denom:.3f} in [1.2, 1.8]; mean |denominator| {mean_denom:.3f} "
        f"in sqrt(3/pi)*[0.85, 1.15]",
    )
    assert ok


def test_criterion_10_ci_coverage(reference_run):
    report, _ = reference_run
    coverage = get_check(report, "ci_coverage_bias").value
    ok = abs(coverage - 0.9) <= 0.03
    report_line(10, ok, f"level-0.9 interval covers the oracle bias {coverage:.3f} in 0.90 +- 0.03")
    assert ok


def test_criterion_11_operator_norm_stability(reference_run):
    report, _ = reference_run
    ratios = {"reference": report.diagnostics["op_norm_error_ratio"]}

    extra = [
        (
            "geometric",
            TrialConfig(
                model=CovarianceModel(kind="geometric", dim=200, top=1.0, ratio=0.97),
                n=2000,
                trials=200,
                master_seed=CONFIG_R.master_seed + 1,
                oracle_reps=2,
            ),
        ),
        (
            "small_spiked",
            TrialConfig(
                model=CovarianceModel(kind="spiked", dim=50, spikes=(3.0,), sigma2=1.0),
                n=500,
                trials=400,
                master_seed=CONFIG_R.master_seed + 2,
                oracle_reps=2,
            ),
        ),
    ]
    from spectral_pivot import build_covariance, effective_rank

    for name, cfg in extra:
        sigma, _ = build_covariance(cfg.model)
        rank = effective_rank(sigma)
        rate = max(math.sqrt(rank / cfg.n), rank / cfg.n)
        outcomes = run_trials(cfg, workers=worker_count())
        mean_err = float(np.mean([o.op_norm_error for o in outcomes]))
        ratios[name] = mean_err / (op_norm(sigma) * rate)

    values = list(ratios.values())
    spread = max(values) / min(values)
    ok = all(0.25 <= v <= 4.0 for v in values) and spread < 4.0
    detail = ", ".join(f"{k}={v:.3f}" for k, v in ratios.items())
    report_line(
        11, ok, f"operator-norm error ratios in [0.25, 4] with spread {spread:.2f} < 4 ({detail})"
    )
    assert ok


def test_criterion_12_risk_bias_identity(reference_run):
    report, _ = reference_run
    check = get_check(report, "risk_bias_identity")
    ok = check.value <= check.hi
    report_line(
        12,
        ok,
        f"mean squared error vs -2b gap {check.value:.2e} <= 4 combined SEs ({check.hi:.2e})",
    )
    assert ok


def test_criterion_13_byte_identical_reports(reference_run, reference_rerun):
    report_a, _ = reference_run
    blob_a = json.dumps(report_a.to_dict(), indent=2, allow_nan=False).encode()
    blob_b = json.dumps(reference_rerun.to_dict(), indent=2, allow_nan=False).encode()
    ok = blob_a == blob_b
    report_line(13, ok, f"repeated runs byte-identical ({len(blob_a)} bytes each)")
    assert ok
