import pytest
from hypothesis import given, settings, strategies as st

from app.core.exceptions import ParameterError
from app.core.perturbation import predict_delta_x, psi_at, track, zeta_at
from app.core.queue_sim import simulate
from app.schemas.queue import QueueParams
from tests.conftest import SERVICE_TIMES, arrival_traces, unit_params


class TestTrack:
    def test_trace_c(self, trace_c):
        log = track(trace_c, unit_params(1, trace_c))
        assert log.type1_epochs == [0.5]
        assert log.type2_epochs == [0.0, 1.3]
        assert log.N_1 == 1
        starts = [start for start, _ in log.zeta_segments]
        values = [value for _, value in log.zeta_segments]
        assert starts == [0.0, 0.5, 1.3]
        assert values == pytest.approx([1.0, 0.0, 0.3])

    def test_trace_c_zeta_and_psi_lookup(self, trace_c):
        log = track(trace_c, unit_params(1, trace_c))
        assert zeta_at(log, 0.2) == 1.0
        assert zeta_at(log, 1.0) == 0.0
        assert zeta_at(log, 2.5) == pytest.approx(0.3)
        assert psi_at(log, 0.2) == 0
        assert psi_at(log, 1.0) == 1
        assert psi_at(log, 2.0) == 0

    def test_trace_c_loss_at_1_8_is_not_type1(self, trace_c):
        # zeta = 0.3 is not above s - (1.8 - 1.3) = 0.5
        log = track(trace_c, unit_params(1, trace_c))
        assert 1.8 not in log.type1_epochs

    def test_trace_b(self, trace_b):
        log = track(trace_b, unit_params(1, trace_b))
        assert log.type1_epochs == [0.5, 2.1]
        assert log.N_1 == 2

    def test_loss_free(self, loss_free_trace):
        log = track(loss_free_trace, unit_params(1, loss_free_trace))
        assert log.N_1 == 0
        assert all(value == 0 for _, value in log.psi_segments)
        assert log.delta_x_segments == []

    def test_first_busy_period_keeps_zeta(self):
        from app.schemas.queue import ArrivalTrace

        trace = ArrivalTrace(arrivals=[0.7, 0.9], t_f=3.0)
        log = track(trace, unit_params(1, trace))
        assert log.type2_epochs == [0.7]
        assert zeta_at(log, 0.8) == 1.0
        assert log.type1_epochs == [0.9]

    def test_accepts_precomputed_nominal(self, trace_c):
        params = unit_params(1, trace_c)
        assert track(trace_c, params, nominal=simulate(trace_c, params)) == track(trace_c, params)

    def test_trace_c_delta_segments(self, trace_c):
        log = track(trace_c, unit_params(1, trace_c))
        assert len(log.delta_x_segments) == 2
        (a0, b0), (a1, b1) = log.delta_x_segments
        assert (a0, b0) == pytest.approx((0.5, 2.0))
        assert (a1, b1) == pytest.approx((2.3, 3.0))


class TestPredictDeltaX:
    @pytest.mark.parametrize("t,expected", [(1.9, 1), (2.1, 0), (0.2, 0), (0.7, 1), (1.1, 1), (2.5, 1)])
    def test_trace_c(self, trace_c, t, expected):
        log = track(trace_c, unit_params(1, trace_c))
        assert predict_delta_x(log, t) == expected

    def test_before_first_type1_is_zero(self, trace_b):
        log = track(trace_b, unit_params(1, trace_b))
        assert predict_delta_x(log, 0.0) == 0
        assert predict_delta_x(log, 0.49) == 0

    @pytest.mark.parametrize("t", [-0.1, 3.1])
    def test_outside_horizon(self, trace_c, t):
        log = track(trace_c, unit_params(1, trace_c))
        with pytest.raises(ParameterError):
            predict_delta_x(log, t)


class TestLogInvariants:
    @settings(max_examples=150, deadline=None)
    @given(trace=arrival_traces(), k=st.integers(min_value=1, max_value=4), s=st.sampled_from(SERVICE_TIMES))
    def test_state_invariants(self, trace, k, s):
        params = QueueParams(k=k, s=s, t_f=trace.t_f)
        nominal = simulate(trace, params)
        log = track(trace, params, nominal=nominal)

        assert all(0.0 <= value <= s for _, value in log.zeta_segments)
        assert all(value in (0, 1) for _, value in log.psi_segments)
        assert log.N_1 == len(log.type1_epochs)

        # a type-2 event separates any two type-1 events
        for first, second in zip(log.type1_epochs, log.type1_epochs[1:]):
            assert any(first < t <= second for t in log.type2_epochs)

        # at most one type-1 event per nominal busy period, and only at losses
        for bp in nominal.busy_periods:
            inside = [t for t in log.type1_epochs if bp.start <= t <= bp.end]
            assert len(inside) <= 1
            assert set(inside) <= set(bp.loss_epochs)

        assert nominal.N_ell <= log.N_1 <= nominal.N

        for start, end in log.delta_x_segments:
            assert 0.0 <= start < end <= trace.t_f
