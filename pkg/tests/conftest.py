import os
import sys

import pytest
from hypothesis import strategies as st

# Add the project root to sys.path so 'app' is importable without installing
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from app.schemas.queue import ArrivalTrace, QueueParams  # noqa: E402


def unit_params(k: int, trace: ArrivalTrace) -> QueueParams:
    """Hand fixtures all use s = 1."""
    return QueueParams(k=k, s=1.0, t_f=trace.t_f)


@pytest.fixture
def trace_a() -> ArrivalTrace:
    return ArrivalTrace(arrivals=[0.0, 0.5, 2.0], t_f=3.0, provenance="fixture A")


@pytest.fixture
def trace_b() -> ArrivalTrace:
    return ArrivalTrace(arrivals=[0.0, 0.5, 1.3, 1.8, 2.1], t_f=3.5, provenance="fixture B")


@pytest.fixture
def trace_c() -> ArrivalTrace:
    return ArrivalTrace(arrivals=[0.0, 0.5, 1.3, 1.8], t_f=3.0, provenance="fixture C")


@pytest.fixture
def displacement_trace() -> ArrivalTrace:
    """At k=1 the larger buffer later drops the job at 2.5 that the nominal system admits."""
    return ArrivalTrace(arrivals=[0.0, 0.5, 1.3, 1.8, 2.1, 2.5], t_f=4.0, provenance="fixture displacement")


@pytest.fixture
def loss_free_trace() -> ArrivalTrace:
    return ArrivalTrace(arrivals=[0.0, 2.0], t_f=3.0, provenance="fixture loss-free")


@pytest.fixture
def trace_file(tmp_path):
    """Write epochs one per line and return the path."""

    def _write(lines, name="trace.txt"):
        path = tmp_path / name
        path.write_text("".join(f"{line}\n" for line in lines))
        return path

    return _write


# Service times and epochs on a 1/64 grid: every sum the simulators form is exact,
# so ties between arrivals and departures really are ties.
GRID = 64
SERVICE_TIMES = [0.25, 0.5, 0.75, 1.0, 1.5]


def arrival_traces(t_f: float = 6.0, max_size: int = 40):
    """Hypothesis strategy: strictly increasing grid epochs in [0, t_f]."""
    ticks = st.lists(st.integers(min_value=0, max_value=int(t_f * GRID)), max_size=max_size)
    return ticks.map(lambda ns: ArrivalTrace(arrivals=[n / GRID for n in sorted(set(ns))], t_f=t_f))
