"""Shared fixtures: the reference acceptance configuration and its (costly)
verification runs, executed once per session."""

from __future__ import annotations

import os

import pytest

from spectral_pivot import CovarianceModel, TrialConfig, run_trials, verify

# Reference configuration: spiked spectrum diag(4, 1, ..., 1) in dimension
# 200 (top eigenvalue 4, noise floor 1, gap 3), three splits of n = 2000,
# 2000 trials, oracle estimated from 1e5 reps.
CONFIG_R = TrialConfig(
    model=CovarianceModel(kind="spiked", dim=200, spikes=(3.0,), sigma2=1.0),
    n=2000,
    trials=2000,
    master_seed=20260810,
    oracle_reps=100_000,
)


def worker_count() -> int:
    env = os.environ.get("SPECTRAL_PIVOT_WORKERS")
    if env:
        return max(1, int(env))
    return min(os.cpu_count() or 1, 4)


@pytest.fixture(scope="session")
def reference_run():
    """First full verification run of the reference configuration."""
    report, outcomes = verify(
        CONFIG_R, workers=worker_count(), return_outcomes=True
    )
    return report, outcomes


@pytest.fixture(scope="session")
def reference_rerun():
    """Independent second run of the same configuration (determinism gate)."""
    return verify(CONFIG_R, workers=worker_count())


@pytest.fixture(scope="session")
def reference_vectors(reference_run):
    """Reference-run trials with the matched eigenvectors retained."""
    report, _ = reference_run
    return run_trials(
        CONFIG_R,
        oracle_b=report.oracle.value,
        workers=worker_count(),
        keep_vectors=True,
    )
