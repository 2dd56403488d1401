"""
Stochastic-approximation driver for the buffer size.

Iteration i holds a real theta_i, evaluates one fresh sample path at
k_i = max(k_min, round_half_up(theta_i)), and moves theta by the truncated
displacement d_i. theta itself is never rounded, so fractional steps
accumulate across iterations.
"""

import logging
import math
from typing import Callable, List, Tuple

from app.core.exceptions import EvaluatorError, IterationIndexError
from app.core.utils import round_half_up
from app.schemas.optimizer import Evaluation, IterateRecord, OptimizerConfig

logger = logging.getLogger(__name__)

# (k, iteration) -> (F(k), F_c'(k)) on a fresh sample path
Evaluator = Callable[[int, int], Evaluation]


def step_size(i: int, config: OptimizerConfig) -> float:
    if i < 1:
        raise IterationIndexError(f"iterations are numbered from 1, got {i}")
    return config.lambda0 / i**config.p


def truncate_displacement(lambda_i: float, Fc_prime: float, r: float) -> float:
    """lambda_i * Fc_prime when it stays within r, else r with the sign of Fc_prime."""
    d = lambda_i * Fc_prime
    if abs(d) <= r:
        return d
    return math.copysign(r, Fc_prime)


def buffer_size(theta: float, k_min: int) -> int:
    return max(k_min, round_half_up(theta))


def step(theta: float, evaluator: Evaluator, i: int, config: OptimizerConfig) -> Tuple[IterateRecord, float]:
    """One iteration: evaluate at the rounded buffer size and return (record, theta_next)."""
    lam = step_size(i, config)
    k = buffer_size(theta, config.k_min)
    try:
        F, Fc_prime = evaluator(k, i)
    except Exception as e:
        raise EvaluatorError(i, k, e) from e

    d = truncate_displacement(lam, Fc_prime, config.r)
    record = IterateRecord(i=i, theta=theta, k=k, F=F, Fc_prime=Fc_prime, d=d)
    return record, theta - d


def run(config: OptimizerConfig, evaluator: Evaluator) -> List[IterateRecord]:
    theta = config.theta0
    records: List[IterateRecord] = []
    for i in range(1, config.iterations + 1):
        record, theta = step(theta, evaluator, i, config)
        records.append(record)
        logger.debug(f"[OPT] i={i} theta={record.theta:.4f} k={record.k} Fc'={record.Fc_prime:.4f} d={record.d:.4f}")

    last = records[-1]
    logger.info(
        f"[OPT] {config.iterations} iterations from theta0={config.theta0}: "
        f"final theta={theta:.4f}, k={buffer_size(theta, config.k_min)} (last evaluated k={last.k})"
    )
    return records


def final_theta(records: List[IterateRecord]) -> float:
    """theta after the last recorded step."""
    last = records[-1]
    return last.theta - last.d
