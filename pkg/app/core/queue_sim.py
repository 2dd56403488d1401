"""
G/D/1/k loss queue: workload generation, discrete-event simulation, and the
surrogate (fluid-model) derivative of the loss volume.

Capacity k counts every job in the system (server plus buffer). Departures
are processed before arrivals that share an epoch, so an arrival at a service
completion sees the decremented occupancy.
"""

import heapq
import logging
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from app.core.exceptions import ParameterError, TraceFormatError
from app.schemas.queue import (
    INITIAL,
    ArrivalTrace,
    BusyPeriodRecord,
    EventRecord,
    QueueParams,
    SimResult,
)

logger = logging.getLogger(__name__)

# Calendar priorities at equal epochs: departures first.
DEPARTURE = 0
ARRIVAL = 1

GENERATOR_NAME = "numpy.PCG64"


class EventCalendar:
    """Time-ordered event list; ties broken by priority, then insertion order."""

    def __init__(self):
        self._queue: List[Tuple[float, int, int]] = []
        self._counter = 0

    def push(self, time: float, priority: int):
        heapq.heappush(self._queue, (time, priority, self._counter))
        self._counter += 1

    def pop(self) -> Tuple[float, int]:
        time, priority, _ = heapq.heappop(self._queue)
        return time, priority

    def __len__(self):
        return len(self._queue)


def make_params(k: int, s: float, t_f: float) -> QueueParams:
    try:
        return QueueParams(k=k, s=s, t_f=t_f)
    except ValidationError as e:
        raise ParameterError(f"invalid queue parameters (k={k}, s={s}, t_f={t_f}): {e}") from e


def generate_poisson_trace(rate: float, t_f: float, seed: int) -> ArrivalTrace:
    """
    Poisson arrivals on [0, t_f] from numpy's PCG64 generator.

    Interarrival times are drawn by inverse transform, -ln(1 - U) / rate, with
    U from Generator.random(); epochs are their running sums.
    """
    if not rate > 0:
        raise ParameterError(f"arrival rate must be positive, got {rate}")
    if not t_f > 0:
        raise ParameterError(f"horizon must be positive, got {t_f}")

    rng = np.random.Generator(np.random.PCG64(seed))
    expected = rate * t_f
    batch = max(16, int(expected + 6.0 * np.sqrt(expected) + 16))

    epochs: List[float] = []
    last = 0.0
    while True:
        gaps = -np.log1p(-rng.random(batch)) / rate
        gaps[0] += last
        times = np.cumsum(gaps)
        inside = times[times <= t_f]
        epochs.extend(inside.tolist())
        if inside.size < times.size:
            break
        last = float(times[-1])

    return ArrivalTrace(
        arrivals=epochs,
        t_f=t_f,
        provenance=f"{GENERATOR_NAME} seed={seed} poisson rate={rate}",
    )


def load_trace(path: str | Path, t_f: float) -> ArrivalTrace:
    """Read one decimal arrival epoch per line (blank lines ignored)."""
    if not t_f > 0:
        raise ParameterError(f"horizon must be positive, got {t_f}")
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as e:
        raise TraceFormatError(f"cannot read trace: {e}", path=str(path)) from e

    epochs: List[float] = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        try:
            t = float(text)
        except ValueError:
            raise TraceFormatError(f"not a decimal epoch: {text!r}", line=lineno, path=str(path))
        if not (0.0 <= t <= t_f):
            raise TraceFormatError(f"epoch {t} outside [0, {t_f}]", line=lineno, path=str(path))
        if epochs and t <= epochs[-1]:
            raise TraceFormatError(
                f"epoch {t} does not follow {epochs[-1]} (arrivals must strictly increase)",
                line=lineno,
                path=str(path),
            )
        epochs.append(t)

    logger.debug(f"[SIM] Loaded {len(epochs)} arrivals from {path}")
    return ArrivalTrace(arrivals=epochs, t_f=t_f, provenance=f"file {path}")


def simulate(trace: ArrivalTrace, params: QueueParams) -> SimResult:
    """Run the FIFO single-server queue with capacity k and constant service s over [0, t_f]."""
    if trace.t_f != params.t_f:
        raise ParameterError(f"trace horizon {trace.t_f} does not match params horizon {params.t_f}")

    k, s, t_f = params.k, params.s, params.t_f
    calendar = EventCalendar()
    for t in trace.arrivals:
        calendar.push(t, ARRIVAL)

    x = 0
    n_lost = 0
    event_log: List[EventRecord] = []
    busy_periods: List[BusyPeriodRecord] = []

    busy_start = 0.0
    preceding: float | str = INITIAL
    idle_since: Optional[float] = None
    period_losses: List[float] = []

    while calendar:
        t, kind = calendar.pop()
        if t > t_f:
            break

        if kind == DEPARTURE:
            x -= 1
            event_log.append(EventRecord(t, "departure", x))
            if x > 0:
                calendar.push(t + s, DEPARTURE)
            else:
                busy_periods.append(_close_period(busy_start, t, preceding, period_losses))
                idle_since = t
        elif x >= k:
            n_lost += 1
            period_losses.append(t)
            event_log.append(EventRecord(t, "loss", x))
        else:
            if x == 0:
                busy_start = t
                preceding = INITIAL if idle_since is None else t - idle_since
                period_losses = []
                calendar.push(t + s, DEPARTURE)
            x += 1
            event_log.append(EventRecord(t, "arrival", x))

    if x > 0:
        # busy period still open at the horizon
        busy_periods.append(_close_period(busy_start, t_f, preceding, period_losses))

    N_s = sum(1 for bp in busy_periods if bp.lossy and bp.preceding_idle != INITIAL and bp.preceding_idle < s)
    N = sum(1 for bp in busy_periods if bp.lossy)
    n_arrivals = len(trace.arrivals)

    # Internally built from validated inputs; skip re-validating the event log.
    return SimResult.model_construct(
        params=params,
        n_arrivals=n_arrivals,
        n_lost=n_lost,
        loss_volume=n_lost * s,
        loss_fraction=n_lost / n_arrivals if n_arrivals else 0.0,
        busy_periods=busy_periods,
        N=N,
        N_s=N_s,
        N_ell=N - N_s,
        event_log=event_log,
    )


def _close_period(start: float, end: float, preceding: float | str, losses: List[float]) -> BusyPeriodRecord:
    return BusyPeriodRecord(
        start=start,
        end=end,
        lossy=bool(losses),
        preceding_idle=preceding,
        loss_epochs=list(losses),
    )


def ipa_derivative(result: SimResult) -> float:
    """Fluid-model IPA derivative of the loss volume applied to a discrete path: -s * N."""
    return -result.params.s * result.N


def cost_derivative(result: SimResult, a: float) -> float:
    """Surrogate derivative of F(k) = L(k) + a*k."""
    if a < 0:
        raise ParameterError(f"buffer cost must be non-negative, got {a}")
    return ipa_derivative(result) + a


def sample_cost(result: SimResult, a: float) -> float:
    return result.loss_volume + a * result.params.k
