"""
Statistical behaviour on the default workload (rate 90, s = 0.01, t_f = 20)
and the full-size randomized sweep.

These replay thousands of simulated paths; run them with `pytest -m slow`.
"""

import statistics
import warnings

import pytest

from app.core.fpa_oracle import (
    DIFFERENCE_RANGE,
    ERROR_BOUND,
    LOSS_DECOMPOSITION,
    LOSS_DIFFERENCE_EXACT,
    MONOTONE_LOSSES,
    RELATIVE_ERROR_BOUND,
    SURROGATE_BELOW_DIFFERENCE,
    TYPE1_CHAIN,
)
from app.core.optimizer import buffer_size
from app.schemas.experiment import ExperimentConfig, WorkloadConfig
from app.schemas.optimizer import OptimizerConfig
from app.tasks import FLUID_IPA, LEMMA_PREDICTION, estimate_expected_error, property_sweep, repeat_experiment

WORKLOAD = WorkloadConfig()
SEED = 2024
SWEEP_CASES = 1000

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("k", range(1, 13))
def test_cost_derivative_sign(k):
    # the cost derivative changes sign between k = 6 and k = 7
    sign = -1 if k <= 6 else 1
    entry = estimate_expected_error(k, WORKLOAD, 50, SEED, a=0.2)
    assert entry.se_Fc_prime is not None
    assert sign * entry.mean_Fc_prime >= 2 * entry.se_Fc_prime


@pytest.mark.parametrize("theta0", [15.0, 1.0])
def test_optimizer_settles_between_five_and_eight(theta0):
    config = ExperimentConfig(workload=WORKLOAD, optimizer=OptimizerConfig(theta0=theta0), base_seed=SEED)
    finals = repeat_experiment(config, 20)
    assert 5.5 <= statistics.median(finals) <= 7.5
    assert sum(1 for theta in finals if 5 <= buffer_size(theta, 1) <= 8) >= 16


def test_error_fraction_near_optimum():
    entry = estimate_expected_error(6, WORKLOAD, 200, SEED, a=0.2)
    assert entry.mean_ns_over_n is not None
    assert 0.0 <= entry.mean_ns_over_n <= 1.0
    if entry.mean_ns_over_n > 0.693:
        warnings.warn(f"N_s/N at k=6 is {entry.mean_ns_over_n:.3f}, above 0.693")


class TestFullSweep:
    @pytest.fixture(scope="class")
    def report(self):
        return property_sweep(SWEEP_CASES, seed=7)

    def test_every_case_is_tallied(self, report):
        assert len(report.rows) == SWEEP_CASES
        for counts in report.tallies.values():
            assert sum(counts.values()) == SWEEP_CASES

    @pytest.mark.parametrize(
        "name",
        [
            MONOTONE_LOSSES,
            DIFFERENCE_RANGE,
            SURROGATE_BELOW_DIFFERENCE,
            TYPE1_CHAIN,
            LOSS_DECOMPOSITION,
            ERROR_BOUND,
            RELATIVE_ERROR_BOUND,
            FLUID_IPA,
        ],
    )
    def test_no_failures(self, report, name):
        assert report.tallies[name]["fail"] == 0

    def test_relative_bound_skipped_only_without_lossy_periods(self, report):
        loss_free = sum(1 for row in report.rows if row.N == 0)
        assert report.tallies[RELATIVE_ERROR_BOUND]["skipped"] == loss_free

    def test_coupling_facts_never_skip(self, report):
        for name in (MONOTONE_LOSSES, DIFFERENCE_RANGE, SURROGATE_BELOW_DIFFERENCE, TYPE1_CHAIN, LOSS_DECOMPOSITION):
            assert report.tallies[name]["pass"] == SWEEP_CASES

    @pytest.mark.parametrize("name", [LOSS_DIFFERENCE_EXACT, LEMMA_PREDICTION])
    def test_counterexamples_match_failures(self, report, name):
        listed = [c for c in report.counterexamples if name in c.failed]
        assert len(listed) == report.tallies[name]["fail"]
        assert len({c.label for c in listed}) == len(listed)

    def test_counterexamples_only_carry_prediction_checks(self, report):
        for counterexample in report.counterexamples:
            assert set(counterexample.failed) <= {LOSS_DIFFERENCE_EXACT, LEMMA_PREDICTION}
            assert counterexample.detail
