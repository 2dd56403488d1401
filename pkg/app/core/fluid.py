"""
Stochastic flow model of a single buffer with piecewise-constant rates.

Workload x(t) in [0, theta] follows dx/dt = alpha - beta, held at 0 while
alpha <= beta and at theta while alpha >= beta; whatever overflows at theta
is lost. Within a constant-rate segment the trajectory is linear, so every
piece (and the loss volume) is computed in closed form.
"""

import logging
import math
from typing import List

import numpy as np

from app.core.exceptions import ParameterError
from app.schemas.fluid import FiniteDiffReport, FluidModel, FluidResult, FluidSegment, WorkloadPiece
from app.schemas.queue import ArrivalTrace

logger = logging.getLogger(__name__)


def simulate_fluid(model: FluidModel, theta: float) -> FluidResult:
    """
    Integrate the flow model at buffer size theta.

    Breakpoints fall at segment boundaries and at the epochs where x hits 0
    or theta. A busy period is a maximal stretch with x > 0; it is lossy when
    it contains an overflow interval of positive length with alpha > beta, so
    grazing theta at alpha == beta does not count.
    """
    if not theta > 0:
        raise ParameterError(f"buffer size must be positive, got {theta}")
    if model.x0 > theta:
        raise ParameterError(f"initial workload {model.x0} exceeds buffer size {theta}")

    x = model.x0
    loss = 0.0
    inflow = 0.0
    outflow = 0.0
    N = 0
    busy = x > 0
    lossy = False
    pieces: List[WorkloadPiece] = []
    breakpoints: List[float] = [0.0]

    for idx, seg in enumerate(model.segments):
        t, end = seg.start, model.segment_end(idx)
        alpha, beta = seg.alpha, seg.beta
        net = alpha - beta
        inflow += alpha * (end - t)

        while t < end:
            if x >= theta and net >= 0:
                # pinned full; overflow at rate net
                pieces.append(WorkloadPiece(t_start=t, t_end=end, x_start=theta, x_end=theta, overflow_rate=net))
                loss += net * (end - t)
                outflow += beta * (end - t)
                if net > 0:
                    lossy = True
                x, t = theta, end
            elif x <= 0 and net <= 0:
                # pinned empty; everything that arrives is served at once
                pieces.append(WorkloadPiece(t_start=t, t_end=end, x_start=0.0, x_end=0.0))
                outflow += alpha * (end - t)
                x, t = 0.0, end
            elif net == 0:
                pieces.append(WorkloadPiece(t_start=t, t_end=end, x_start=x, x_end=x))
                outflow += beta * (end - t)
                t = end
            elif net > 0:
                if x <= 0 and not busy:
                    busy, lossy = True, False
                hit = t + (theta - x) / net
                stop = min(hit, end)
                x_next = theta if hit <= end else min(x + net * (end - t), theta)
                pieces.append(WorkloadPiece(t_start=t, t_end=stop, x_start=x, x_end=x_next))
                outflow += beta * (stop - t)
                x, t = x_next, stop
            else:
                hit = t + x / -net
                stop = min(hit, end)
                x_next = 0.0 if hit <= end else max(x + net * (end - t), 0.0)
                pieces.append(WorkloadPiece(t_start=t, t_end=stop, x_start=x, x_end=x_next))
                outflow += beta * (stop - t)
                x, t = x_next, stop
                if x <= 0 and busy:
                    if lossy:
                        N += 1
                    busy, lossy = False, False
            if breakpoints[-1] != t:
                breakpoints.append(t)

    if busy and lossy:
        N += 1

    return FluidResult(
        theta=theta,
        loss_volume=loss,
        N=N,
        breakpoints=breakpoints,
        trajectory=pieces,
        inflow_volume=inflow,
        outflow_volume=outflow,
        x0=model.x0,
        x_final=x,
    )


def fluid_ipa(result: FluidResult) -> float:
    """IPA derivative of the loss volume with respect to theta: minus the lossy busy periods."""
    return float(-result.N)


def finite_diff_check(model: FluidModel, theta: float, delta: float) -> FiniteDiffReport:
    """
    Central difference of the loss volume against the IPA derivative.

    discrepancy = |(L(theta+delta) - L(theta-delta)) / (2 delta) + N| / max(1, N).
    A theta where the lossy-busy-period count changes inside [theta-delta,
    theta+delta] is flagged instead of judged.
    """
    if not (0 < delta < theta):
        raise ParameterError(f"need 0 < delta < theta, got delta={delta}, theta={theta}")
    if model.x0 > theta - delta:
        raise ParameterError(f"initial workload {model.x0} exceeds theta - delta = {theta - delta}")

    center = simulate_fluid(model, theta)
    lower = simulate_fluid(model, theta - delta)
    upper = simulate_fluid(model, theta + delta)

    central = (upper.loss_volume - lower.loss_volume) / (2.0 * delta)
    ipa = fluid_ipa(center)
    discrepancy = abs(central - ipa) / max(1, center.N)
    flagged = not (lower.N == center.N == upper.N)
    if flagged:
        logger.debug(f"[FLUID] theta={theta} is degenerate: N jumps {lower.N} -> {center.N} -> {upper.N}")

    return FiniteDiffReport(
        theta=theta,
        delta=delta,
        central_difference=central,
        ipa=ipa,
        discrepancy=discrepancy,
        N=center.N,
        N_minus=lower.N,
        N_plus=upper.N,
        flagged=flagged,
    )


def fluid_from_trace(trace: ArrivalTrace, s: float, bin_width: float) -> FluidModel:
    """
    Fluid abstraction of a discrete arrival trace.

    Arrivals are binned into windows of bin_width (the last one cut at t_f);
    each window's inflow rate is the work that arrived in it, s * count /
    width, and the service rate is 1 (one second of work per second).
    """
    if not s > 0:
        raise ParameterError(f"service time must be positive, got {s}")
    if not bin_width > 0:
        raise ParameterError(f"bin width must be positive, got {bin_width}")

    t_f = trace.t_f
    n_bins = max(1, math.ceil(t_f / bin_width))
    edges = np.minimum(np.arange(n_bins + 1) * bin_width, t_f)
    edges = edges[np.concatenate(([True], np.diff(edges) > 0))]
    counts, _ = np.histogram(np.asarray(trace.arrivals, dtype=float), bins=edges)
    widths = np.diff(edges)

    segments = [
        FluidSegment(start=float(start), alpha=float(s * count / width), beta=1.0)
        for start, count, width in zip(edges[:-1], counts, widths)
    ]
    return FluidModel(t_f=t_f, x0=0.0, segments=segments)
