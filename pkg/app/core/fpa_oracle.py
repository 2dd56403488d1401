"""
Coupled finite-difference oracle.

Replays one ArrivalTrace at capacities k and k+1 (common random numbers) and
compares the exact loss difference with the fluid-model surrogate -s*N and
with the perturbation-tracking predictions.

All identities are checked on integer job counts. Loss volumes are n*s, so
comparing counts is exact where comparing volumes would drag in float noise.
"""

import logging
from bisect import bisect_right
from typing import List, Tuple

from app.core.perturbation import predict_delta_x, track
from app.core.queue_sim import make_params, simulate
from app.schemas.oracle import (
    UNDEFINED,
    BoundsReport,
    CheckOutcome,
    CoupledResult,
    Discrepancy,
    Lemma1Report,
)
from app.schemas.queue import ArrivalTrace, QueueParams, SimResult

logger = logging.getLogger(__name__)

# Identities claimed for every path by the approximation analysis.
LOSS_DIFFERENCE_EXACT = "loss_difference_exact"
ERROR_BOUND = "error_bound"
RELATIVE_ERROR_BOUND = "relative_error_bound"

# Facts that hold on every path of the coupled system.
MONOTONE_LOSSES = "monotone_losses"
DIFFERENCE_RANGE = "difference_range"
SURROGATE_BELOW_DIFFERENCE = "surrogate_below_difference"
TYPE1_CHAIN = "type1_chain"
LOSS_DECOMPOSITION = "loss_decomposition"

# Relative width (in units of s) below which an interval between epochs is rounding noise.
EPOCH_TOLERANCE = 1e-9


class OccupancyPath:
    """Right-continuous step function x(t) rebuilt from a SimResult event log."""

    def __init__(self, result: SimResult):
        self.times: List[float] = []
        self.values: List[int] = []
        for event in result.event_log:
            if self.times and self.times[-1] == event.time:
                self.values[-1] = event.x
            else:
                self.times.append(event.time)
                self.values.append(event.x)

    def at(self, t: float) -> int:
        idx = bisect_right(self.times, t) - 1
        return self.values[idx] if idx >= 0 else 0


def _elementary_intervals(t_f: float, min_width: float, *epoch_lists: List[float]) -> List[Tuple[float, float]]:
    """
    Intervals between consecutive breakpoints of all paths on [0, t_f].

    Epochs reached by different float sums (t + s + s versus t + (s - zeta))
    can disagree in the last bits; slivers no wider than min_width are
    rounding artifacts, not states of either path, and are dropped.
    """
    points = {0.0, t_f}
    for epochs in epoch_lists:
        points.update(t for t in epochs if 0.0 <= t <= t_f)
    ordered = sorted(points)
    return [(a, b) for a, b in zip(ordered, ordered[1:]) if b - a > min_width]


def _sliver(s: float) -> float:
    return EPOCH_TOLERANCE * s


def _difference_range(nominal: SimResult, perturbed: SimResult) -> Tuple[int, int]:
    x_k, x_k1 = OccupancyPath(nominal), OccupancyPath(perturbed)
    intervals = _elementary_intervals(nominal.params.t_f, _sliver(nominal.params.s), x_k.times, x_k1.times)
    diffs = [x_k1.at(0.5 * (a + b)) - x_k.at(0.5 * (a + b)) for a, b in intervals]
    if not diffs:
        return 0, 0
    return min(diffs), max(diffs)


def coupled_run(trace: ArrivalTrace, params: QueueParams) -> CoupledResult:
    """Simulate at k and k+1 on the same trace and assemble the finite-difference record."""
    perturbed_params = make_params(params.k + 1, params.s, params.t_f)
    nominal = simulate(trace, params)
    perturbed = simulate(trace, perturbed_params)
    log = track(trace, params, nominal=nominal)

    s = params.s
    dn = perturbed.n_lost - nominal.n_lost
    lost_k = set(nominal.loss_epochs)
    lost_k1 = set(perturbed.loss_epochs)
    min_dx, max_dx = _difference_range(nominal, perturbed)
    error_count = abs(dn + nominal.N)

    result = CoupledResult(
        k=params.k,
        s=s,
        n_lost_k=nominal.n_lost,
        n_lost_k1=perturbed.n_lost,
        L_k=nominal.loss_volume,
        L_k1=perturbed.loss_volume,
        delta_L=dn * s,
        N=nominal.N,
        N_s=nominal.N_s,
        N_ell=nominal.N_ell,
        N_1=log.N_1,
        ipa=-s * nominal.N,
        E=error_count * s,
        bound=s * nominal.N_s,
        rel_error=error_count / nominal.N if nominal.N > 0 else UNDEFINED,
        n_absorbed=len(lost_k - lost_k1),
        n_displaced=len(lost_k1 - lost_k),
        max_delta_x=max_dx,
        min_delta_x=min_dx,
    )
    logger.debug(
        f"[FPA] k={params.k}: n(k)={nominal.n_lost} n(k+1)={perturbed.n_lost} "
        f"N={nominal.N} N_s={nominal.N_s} N_1={log.N_1}"
    )
    return result


def check_bounds(result: CoupledResult) -> BoundsReport:
    """
    Check the identities of the approximation analysis on one coupled result:

    - loss difference exactness: delta_L == -s * N_1
    - error bound: E <= s * N_s
    - relative error bound: E / (s*N) <= N_s / N <= 1, skipped when N == 0

    Counts are taken from n_lost_k / n_lost_k1, so delta_L is read as
    s * (n_lost_k1 - n_lost_k).
    """
    dn = result.n_lost_k1 - result.n_lost_k
    error_count = abs(dn + result.N)
    checks = []

    if dn == -result.N_1:
        checks.append(CheckOutcome(name=LOSS_DIFFERENCE_EXACT, status="pass"))
    else:
        checks.append(
            CheckOutcome(
                name=LOSS_DIFFERENCE_EXACT,
                status="fail",
                detail=f"delta_L={result.delta_L} but -s*N_1={-result.s * result.N_1} "
                f"(n(k+1)-n(k)={dn}, N_1={result.N_1})",
            )
        )

    if error_count <= result.N_s:
        checks.append(CheckOutcome(name=ERROR_BOUND, status="pass"))
    else:
        checks.append(
            CheckOutcome(
                name=ERROR_BOUND,
                status="fail",
                detail=f"E={result.E} exceeds s*N_s={result.bound}",
            )
        )

    if result.N == 0:
        checks.append(CheckOutcome(name=RELATIVE_ERROR_BOUND, status="skipped", detail=f"rel_error {UNDEFINED} (N=0)"))
    elif error_count <= result.N_s <= result.N:
        checks.append(CheckOutcome(name=RELATIVE_ERROR_BOUND, status="pass"))
    else:
        checks.append(
            CheckOutcome(
                name=RELATIVE_ERROR_BOUND,
                status="fail",
                detail=f"rel_error={result.rel_error} exceeds N_s/N={result.N_s}/{result.N}",
            )
        )

    return BoundsReport(k=result.k, checks=checks)


def check_coupling(result: CoupledResult) -> BoundsReport:
    """Facts that every coupled path satisfies; a failure here means a simulator bug."""
    dn = result.n_lost_k1 - result.n_lost_k

    def outcome(name: str, ok: bool, detail: str) -> CheckOutcome:
        return CheckOutcome(name=name, status="pass" if ok else "fail", detail="" if ok else detail)

    checks = [
        outcome(
            MONOTONE_LOSSES,
            result.n_lost_k1 <= result.n_lost_k,
            f"n(k+1)={result.n_lost_k1} > n(k)={result.n_lost_k}",
        ),
        outcome(
            DIFFERENCE_RANGE,
            0 <= result.min_delta_x and result.max_delta_x <= 2,
            f"x(k+1)-x(k) ranged over [{result.min_delta_x}, {result.max_delta_x}]",
        ),
        outcome(
            SURROGATE_BELOW_DIFFERENCE,
            -result.N <= dn <= 0,
            f"expected ipa <= delta_L <= 0, got ipa={result.ipa}, delta_L={result.delta_L}",
        ),
        outcome(
            TYPE1_CHAIN,
            result.N_ell <= result.N_1 <= result.N,
            f"expected N_ell <= N_1 <= N, got {result.N_ell}, {result.N_1}, {result.N}",
        ),
        outcome(
            LOSS_DECOMPOSITION,
            dn == result.n_displaced - result.n_absorbed,
            f"n(k+1)-n(k)={dn} but displaced-absorbed={result.n_displaced - result.n_absorbed}",
        ),
    ]
    return BoundsReport(k=result.k, checks=checks)


def verify_lemma1(trace: ArrivalTrace, params: QueueParams) -> Lemma1Report:
    """
    Compare predict_delta_x with the simulated x(k+1, t) - x(k, t).

    The two step functions only change at event epochs of either run or at a
    predicted segment boundary, so each elementary interval between those
    breakpoints is checked once at its midpoint.
    """
    perturbed_params = make_params(params.k + 1, params.s, params.t_f)
    nominal = simulate(trace, params)
    perturbed = simulate(trace, perturbed_params)
    log = track(trace, params, nominal=nominal)

    x_k, x_k1 = OccupancyPath(nominal), OccupancyPath(perturbed)
    boundaries = [t for segment in log.delta_x_segments for t in segment]
    intervals = _elementary_intervals(params.t_f, _sliver(params.s), x_k.times, x_k1.times, boundaries)

    discrepancies = 0
    first = None
    max_dx = 0
    for a, b in intervals:
        mid = 0.5 * (a + b)
        actual = x_k1.at(mid) - x_k.at(mid)
        predicted = predict_delta_x(log, mid)
        max_dx = max(max_dx, actual)
        if actual != predicted:
            discrepancies += 1
            if first is None:
                first = Discrepancy(start=a, end=b, predicted=predicted, actual=actual)

    if first is not None:
        logger.debug(f"[FPA] k={params.k}: prediction off on [{first.start}, {first.end}) ({first.predicted} vs {first.actual})")

    return Lemma1Report(
        k=params.k,
        holds=discrepancies == 0,
        intervals_checked=len(intervals),
        discrepancies=discrepancies,
        first_discrepancy=first,
        max_delta_x=max_dx,
    )
