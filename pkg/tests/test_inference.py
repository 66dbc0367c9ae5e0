import numpy as np
import pytest

from trialbench import (
    AnalysisPlan,
    BootstrapResult,
    DegenerateTestError,
    EstimateWithIF,
    FitError,
    bootstrap,
    sandwich_ci,
    sandwich_se,
    wald_test,
)
from trialbench import inference
from trialbench.errors import DegenerateFitError


def alternating_estimate(n: int = 10_000) -> EstimateWithIF:
    if_values = np.tile([1.0, -1.0], n // 2)
    return EstimateWithIF(label="unit", value=0.5, if_values=if_values, n_effective=n)


def test_sandwich_se_known_value():
    e = alternating_estimate()
    # sample variance n/(n-1), so se = 1/sqrt(n-1)
    assert sandwich_se(e) == pytest.approx(1.0 / np.sqrt(9999), abs=1e-12)


def test_sandwich_ci_symmetric_normal_quantiles():
    e = alternating_estimate()
    ci = sandwich_ci(e, level=0.95)
    half = 1.959963984540054 * sandwich_se(e)
    assert ci.lower == pytest.approx(0.5 - half, abs=1e-10)
    assert ci.upper == pytest.approx(0.5 + half, abs=1e-10)
    assert ci.method == "sandwich"


def test_bad_level_rejected():
    e = alternating_estimate()
    with pytest.raises(ValueError, match="level"):
        sandwich_ci(e, level=1.0)


def test_wald_test_statistic_and_pvalue():
    e = alternating_estimate()
    result = wald_test(e, 0.0)
    z = 0.5 / sandwich_se(e)
    assert result.statistic == pytest.approx(z, abs=1e-9)
    assert result.p_value == pytest.approx(0.0, abs=1e-8)
    assert result.df is None


def test_wald_test_zero_se_is_degenerate():
    e = EstimateWithIF(label="flat", value=0.0, if_values=np.zeros(10), n_effective=10)
    with pytest.raises(DegenerateTestError, match="zero standard error"):
        wald_test(e)


def test_bootstrap_is_deterministic(small_dataset):
    plan = AnalysisPlan(outcome_kind="continuous", estimators=("phi",), arms=(1,))
    first = bootstrap(small_dataset, plan, 20, seed=9)
    second = bootstrap(small_dataset, plan, 20, seed=9)
    assert np.array_equal(first["phi(1)"].replicates, second["phi(1)"].replicates)
    third = bootstrap(small_dataset, plan, 20, seed=10)
    assert not np.array_equal(first["phi(1)"].replicates, third["phi(1)"].replicates)


def test_bootstrap_replicates_are_index_keyed(small_dataset):
    plan = AnalysisPlan(outcome_kind="continuous", estimators=("phi",), arms=(1,))
    full = bootstrap(small_dataset, plan, 10, seed=9)
    # replicate 7 recomputed on its own matches position 7 of the run
    alone = inference.bootstrap_replicate(small_dataset, plan, seed=9, index=7)
    assert alone["phi(1)"] == full["phi(1)"].replicates[7]


def test_bootstrap_resamples_within_study(small_dataset):
    plan = AnalysisPlan(outcome_kind="continuous", estimators=("phi",), arms=(1,))
    rng_draw = inference._replicate_rng(3, 0)
    trial_rows = np.flatnonzero(small_dataset.s == 1)
    emulation_rows = np.flatnonzero(small_dataset.s == 0)
    take_trial = trial_rows[rng_draw.integers(0, trial_rows.size, trial_rows.size)]
    take_emulation = emulation_rows[
        rng_draw.integers(0, emulation_rows.size, emulation_rows.size)
    ]
    resampled = small_dataset.subset(np.concatenate([take_trial, take_emulation]))
    assert resampled.n_trial == small_dataset.n_trial
    assert resampled.n_emulation == small_dataset.n_emulation


def test_bootstrap_counts_and_tolerates_failures(small_dataset, monkeypatch):
    plan = AnalysisPlan(outcome_kind="continuous", estimators=("phi",), arms=(1,))
    real = inference.bootstrap_replicate

    def flaky(d, p, seed, index):
        if index % 3 == 0:
            raise DegenerateFitError("forced failure")
        return real(d, p, seed, index)

    monkeypatch.setattr(inference, "bootstrap_replicate", flaky)
    out = bootstrap(small_dataset, plan, 9, seed=1)
    assert out["phi(1)"].failures == 3
    assert out["phi(1)"].replicates.size == 6


def test_bootstrap_aborts_past_half_failures(small_dataset, monkeypatch):
    plan = AnalysisPlan(outcome_kind="continuous", estimators=("phi",), arms=(1,))

    def broken(d, p, seed, index):
        raise DegenerateFitError("forced failure")

    monkeypatch.setattr(inference, "bootstrap_replicate", broken)
    with pytest.raises(FitError, match="aborted"):
        bootstrap(small_dataset, plan, 8, seed=1)


def test_bootstrap_needs_two_replicates(small_dataset):
    plan = AnalysisPlan(outcome_kind="continuous", estimators=("phi",), arms=(1,))
    with pytest.raises(ValueError, match="at least 2"):
        bootstrap(small_dataset, plan, 1, seed=0)


def test_percentile_interval_known_quantiles():
    reps = np.linspace(0.0, 1.0, 1001)
    br = BootstrapResult(label="q", replicates=reps, requested=1001, failures=0, seed=0)
    interval = br.percentile_interval(point=0.5, level=0.95)
    assert interval.lower == pytest.approx(0.025, abs=1e-9)
    assert interval.upper == pytest.approx(0.975, abs=1e-9)
    assert interval.method == "bootstrap-percentile"
    assert br.std_error == pytest.approx(np.std(reps, ddof=1), abs=1e-12)
