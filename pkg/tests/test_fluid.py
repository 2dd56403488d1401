import numpy as np
import pytest

from app.core.exceptions import ParameterError
from app.core.fluid import finite_diff_check, fluid_from_trace, fluid_ipa, simulate_fluid
from app.schemas.fluid import FluidModel, FluidSegment
from app.schemas.queue import ArrivalTrace


@pytest.fixture
def ramp_model() -> FluidModel:
    """alpha=2, beta=1 on [0, 10]: fills by t=3, overflows until the end."""
    return FluidModel(t_f=10.0, segments=[FluidSegment(start=0.0, alpha=2.0, beta=1.0)])


@pytest.fixture
def pause_model() -> FluidModel:
    """Inflow pauses on [4, 6); both overflow stretches share one busy period."""
    return FluidModel(
        t_f=10.0,
        segments=[
            FluidSegment(start=0.0, alpha=2.0, beta=1.0),
            FluidSegment(start=4.0, alpha=0.0, beta=1.0),
            FluidSegment(start=6.0, alpha=2.0, beta=1.0),
        ],
    )


@pytest.fixture
def underloaded_model() -> FluidModel:
    return FluidModel(
        t_f=8.0,
        segments=[FluidSegment(start=0.0, alpha=0.5, beta=1.0), FluidSegment(start=3.0, alpha=1.0, beta=1.0)],
    )


def random_model(seed: int) -> tuple[FluidModel, float]:
    rng = np.random.Generator(np.random.PCG64(seed))
    t_f = 10.0
    n = int(rng.integers(1, 21))
    starts = [0.0] + sorted(float(t) for t in rng.uniform(0.0, t_f, size=n - 1))
    segments = [
        FluidSegment(start=start, alpha=float(rng.uniform(0, 3)), beta=float(rng.uniform(0, 3))) for start in starts
    ]
    return FluidModel(t_f=t_f, segments=segments), float(rng.uniform(0.5, 5.0))


class TestSimulateFluid:
    def test_ramp(self, ramp_model):
        result = simulate_fluid(ramp_model, 3.0)
        assert result.loss_volume == pytest.approx(7.0)
        assert result.N == 1
        assert 3.0 in result.breakpoints
        assert result.x_final == 3.0

    def test_pause(self, pause_model):
        result = simulate_fluid(pause_model, 3.0)
        assert result.loss_volume == pytest.approx(3.0)
        assert result.N == 1
        for t in (3.0, 4.0, 6.0, 8.0):
            assert t in result.breakpoints
        x_at_6 = next(p.x_start for p in result.trajectory if p.t_start == 6.0)
        assert x_at_6 == pytest.approx(1.0)

    def test_underloaded(self, underloaded_model):
        result = simulate_fluid(underloaded_model, 1.0)
        assert result.loss_volume == 0.0
        assert result.N == 0

    def test_two_busy_periods(self):
        model = FluidModel(
            t_f=10.0,
            segments=[
                FluidSegment(start=0.0, alpha=2.0, beta=1.0),
                FluidSegment(start=4.0, alpha=0.0, beta=1.0),
                FluidSegment(start=8.0, alpha=2.0, beta=1.0),
            ],
        )
        # empties at t=7, fills again on [8, 10] without reaching theta=3
        result = simulate_fluid(model, 3.0)
        assert result.N == 1
        assert simulate_fluid(model, 1.0).N == 2

    def test_grazing_is_not_loss(self):
        model = FluidModel(
            t_f=6.0,
            segments=[FluidSegment(start=0.0, alpha=2.0, beta=1.0), FluidSegment(start=2.0, alpha=1.0, beta=1.0)],
        )
        result = simulate_fluid(model, 2.0)
        assert result.loss_volume == 0.0
        assert result.N == 0

    def test_flat_interior(self):
        model = FluidModel(
            t_f=6.0,
            segments=[FluidSegment(start=0.0, alpha=2.0, beta=1.0), FluidSegment(start=1.0, alpha=1.5, beta=1.5)],
        )
        result = simulate_fluid(model, 4.0)
        assert result.x_final == pytest.approx(1.0)
        assert result.loss_volume == 0.0

    def test_initial_workload(self):
        model = FluidModel(t_f=4.0, x0=2.0, segments=[FluidSegment(start=0.0, alpha=1.0, beta=0.0)])
        result = simulate_fluid(model, 3.0)
        assert result.loss_volume == pytest.approx(3.0)
        assert result.N == 1

    def test_rejects_initial_above_theta(self):
        model = FluidModel(t_f=4.0, x0=5.0, segments=[FluidSegment(start=0.0, alpha=1.0, beta=1.0)])
        with pytest.raises(ParameterError):
            simulate_fluid(model, 3.0)

    def test_rejects_non_positive_theta(self, ramp_model):
        with pytest.raises(ParameterError):
            simulate_fluid(ramp_model, 0.0)

    @pytest.mark.parametrize("seed", range(200))
    def test_conservation_and_bounds(self, seed):
        model, theta = random_model(seed)
        result = simulate_fluid(model, theta)
        balance = result.outflow_volume + result.loss_volume + result.x_final - result.x0
        assert result.inflow_volume == pytest.approx(balance, rel=1e-12, abs=1e-9)
        assert result.loss_volume >= 0.0
        for piece in result.trajectory:
            assert -1e-12 <= piece.x_start <= theta + 1e-12
            assert -1e-12 <= piece.x_end <= theta + 1e-12
            if piece.overflow_rate > 0:
                assert piece.x_start == theta and piece.x_end == theta


class TestModelValidation:
    def test_first_segment_must_start_at_zero(self):
        with pytest.raises(ValueError):
            FluidModel(t_f=5.0, segments=[FluidSegment(start=1.0, alpha=1.0, beta=1.0)])

    def test_starts_must_increase(self):
        with pytest.raises(ValueError):
            FluidModel(
                t_f=5.0,
                segments=[FluidSegment(start=0.0, alpha=1.0, beta=1.0), FluidSegment(start=0.0, alpha=1.0, beta=1.0)],
            )

    def test_negative_rate(self):
        with pytest.raises(ValueError):
            FluidSegment(start=0.0, alpha=-1.0, beta=1.0)


class TestFluidIpa:
    def test_ramp(self, ramp_model):
        assert fluid_ipa(simulate_fluid(ramp_model, 3.0)) == -1.0

    def test_pause(self, pause_model):
        assert fluid_ipa(simulate_fluid(pause_model, 3.0)) == -1.0

    def test_loss_free(self, underloaded_model):
        assert fluid_ipa(simulate_fluid(underloaded_model, 1.0)) == 0.0


class TestFiniteDiffCheck:
    @pytest.mark.parametrize("fixture", ["ramp_model", "pause_model"])
    def test_closed_form_fixtures(self, request, fixture):
        report = finite_diff_check(request.getfixturevalue(fixture), 3.0, 1e-4)
        assert report.discrepancy < 1e-9
        assert report.ipa == -1.0
        assert not report.flagged

    def test_loss_free(self, underloaded_model):
        report = finite_diff_check(underloaded_model, 1.0, 1e-4)
        assert report.discrepancy == 0.0
        assert report.N == 0

    def test_degenerate_theta_flagged(self):
        model = FluidModel(
            t_f=10.0,
            segments=[
                FluidSegment(start=0.0, alpha=2.0, beta=1.0),
                FluidSegment(start=4.0, alpha=0.0, beta=1.0),
                FluidSegment(start=8.0, alpha=2.0, beta=1.0),
            ],
        )
        # at theta=2 the second busy period peaks exactly at theta
        report = finite_diff_check(model, 2.0, 1e-4)
        assert report.flagged
        assert (report.N_minus, report.N_plus) == (2, 1)

    @pytest.mark.parametrize("delta,theta", [(0.0, 3.0), (3.0, 3.0), (-1e-4, 3.0)])
    def test_invalid_delta(self, ramp_model, delta, theta):
        with pytest.raises(ParameterError):
            finite_diff_check(ramp_model, theta, delta)

    @pytest.mark.parametrize("seed", range(200))
    def test_random_models(self, seed):
        model, theta = random_model(seed)
        report = finite_diff_check(model, theta, 1e-4)
        if not report.flagged:
            assert report.discrepancy <= 1e-6


class TestFluidFromTrace:
    def test_binning(self):
        trace = ArrivalTrace(arrivals=[0.0, 0.05, 0.5], t_f=1.0)
        model = fluid_from_trace(trace, 1.0, 0.1)
        assert len(model.segments) == 10
        alphas = [seg.alpha for seg in model.segments]
        assert alphas[0] == pytest.approx(20.0)
        assert alphas[5] == pytest.approx(10.0)
        assert sum(alphas) == pytest.approx(30.0)
        assert all(seg.beta == 1.0 for seg in model.segments)

    def test_total_work_preserved(self):
        trace = ArrivalTrace(arrivals=[0.1 * i + 0.01 for i in range(25)], t_f=2.55)
        model = fluid_from_trace(trace, 0.2, 0.5)
        result = simulate_fluid(model, 1.0)
        assert result.inflow_volume == pytest.approx(25 * 0.2)

    def test_rejects_bad_bin(self):
        trace = ArrivalTrace(arrivals=[0.0], t_f=1.0)
        with pytest.raises(ParameterError):
            fluid_from_trace(trace, 1.0, 0.0)
