"""
Perturbation tracking for a one-unit buffer increase (k -> k+1).

Walks the nominal path at capacity k once and maintains two state variables:
psi (1 while the perturbed system holds one extra job that the nominal system
discarded) and zeta in [0, s] (how far the nominal service schedule lags the
perturbed one). From these it predicts where x(k+1, t) - x(k, t) equals 1
without simulating the perturbed system.
"""

import logging
from bisect import bisect_right
from typing import List, Optional, Tuple

from app.core.exceptions import ParameterError
from app.core.queue_sim import simulate
from app.schemas.perturbation import PerturbationLog
from app.schemas.queue import ArrivalTrace, QueueParams, SimResult

logger = logging.getLogger(__name__)


def track(trace: ArrivalTrace, params: QueueParams, nominal: Optional[SimResult] = None) -> PerturbationLog:
    """
    Run the type-1 / type-2 event machinery over the nominal path at params.k.

    Type-1: a loss at t_a with psi == 0 and zeta > s - (t_a - t_0) >= 0, where
    t_0 is the start of the service in progress. Sets psi = 1, zeta = 0.

    Type-2: an arrival into the empty system at t_b. Sets psi = 0 and
    zeta = min(t_b - tau_e + zeta, s), tau_e being the end of the previous
    busy period; zeta stays s for the first busy period.

    Args:
        trace: arrival epochs.
        params: nominal capacity, service time and horizon.
        nominal: an already computed simulate(trace, params), to avoid a rerun.

    Returns:
        PerturbationLog with the event epochs, the psi/zeta step functions and
        the predicted intervals of unit coupled difference.
    """
    if nominal is None:
        nominal = simulate(trace, params)
    s, t_f = params.s, params.t_f

    psi = 0
    zeta = s
    t0 = 0.0
    tau_e: Optional[float] = None

    type1: List[float] = []
    type2: List[float] = []
    zeta_segments: List[Tuple[float, float]] = [(0.0, s)]
    psi_segments: List[Tuple[float, int]] = [(0.0, 0)]
    intervals: List[Tuple[float, float]] = []
    # residual of the extra job after the nominal system empties, cut at the next arrival
    pending_gap: Optional[Tuple[float, float]] = None

    for event in nominal.event_log:
        t = event.time
        if event.kind == "arrival" and event.x == 1:
            if pending_gap is not None:
                intervals.append((pending_gap[0], min(pending_gap[1], t)))
                pending_gap = None
            if tau_e is not None:
                zeta = min(t - tau_e + zeta, s)
            psi = 0
            type2.append(t)
            _set_step(zeta_segments, t, zeta)
            _set_step(psi_segments, t, psi)
            t0 = t
            intervals.append((t, t + (s - zeta)))
        elif event.kind == "departure":
            if event.x > 0:
                t0 = t
                intervals.append((t, t + (s - zeta)))
            else:
                tau_e = t
                pending_gap = (t, t + (s - zeta))
        elif event.kind == "loss":
            if psi == 0 and zeta > s - (t - t0) >= 0:
                psi = 1
                zeta = 0.0
                type1.append(t)
                _set_step(zeta_segments, t, zeta)
                _set_step(psi_segments, t, psi)
                intervals.append((t, t0 + s))

    if pending_gap is not None:
        intervals.append(pending_gap)

    log = PerturbationLog(
        k=params.k,
        s=s,
        t_f=t_f,
        type1_epochs=type1,
        type2_epochs=type2,
        zeta_segments=zeta_segments,
        psi_segments=psi_segments,
        N_1=len(type1),
        delta_x_segments=_merge(intervals, t_f),
    )
    logger.debug(f"[PERT] k={params.k}: N_1={log.N_1}, type-2 events={len(type2)}")
    return log


def _set_step(segments: list, t: float, value) -> None:
    """Append a step at t, overwriting a step that starts at the same epoch."""
    if segments and segments[-1][0] == t:
        segments[-1] = (t, value)
    else:
        segments.append((t, value))


def _merge(intervals: List[Tuple[float, float]], t_f: float) -> List[Tuple[float, float]]:
    merged: List[Tuple[float, float]] = []
    for start, end in sorted(intervals):
        end = min(end, t_f)
        if end <= start:
            continue
        if merged and start <= merged[-1][1]:
            if end > merged[-1][1]:
                merged[-1] = (merged[-1][0], end)
        else:
            merged.append((start, end))
    return merged


def predict_delta_x(log: PerturbationLog, t: float) -> int:
    """Predicted x(k+1, t) - x(k, t): 1 inside a delta_x segment, else 0."""
    if not (0.0 <= t <= log.t_f):
        raise ParameterError(f"t={t} lies outside the horizon [0, {log.t_f}]")
    segments = log.delta_x_segments
    idx = bisect_right(segments, (t, float("inf"))) - 1
    if idx < 0:
        return 0
    start, end = segments[idx]
    if t < end or (t == end == log.t_f):
        return 1
    return 0


def zeta_at(log: PerturbationLog, t: float) -> float:
    idx = bisect_right(log.zeta_segments, (t, float("inf"))) - 1
    return log.zeta_segments[max(idx, 0)][1]


def psi_at(log: PerturbationLog, t: float) -> int:
    idx = bisect_right(log.psi_segments, (t, float("inf"))) - 1
    return log.psi_segments[max(idx, 0)][1]
