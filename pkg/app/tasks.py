"""
Experiment orchestration: optimizer experiments, replication statistics and the
randomized property sweep. Replications and sweep cases are independent, so
they fan out over a process pool when more than one worker is configured.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, TypeVar

import numpy as np

from app.core.artifacts import iterates_to_csv, to_json, write_json, write_text
from app.core.fluid import finite_diff_check
from app.core.fpa_oracle import check_bounds, check_coupling, coupled_run, verify_lemma1
from app.core.optimizer import buffer_size, final_theta, run
from app.core.perturbation import track
from app.core.queue_sim import (
    cost_derivative,
    generate_poisson_trace,
    make_params,
    sample_cost,
    simulate,
)
from app.core.utils import derive_seed, mean_and_stderr
from app.schemas.experiment import (
    CounterExample,
    ExperimentConfig,
    ExperimentSummary,
    ReplicationEntry,
    ReplicationSummary,
    SweepCaseRow,
    SweepRanges,
    SweepReport,
    WorkloadConfig,
)
from app.schemas.fluid import FluidModel, FluidSegment
from app.schemas.optimizer import Evaluation, IterateRecord
from app.schemas.queue import ArrivalTrace

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# Standard errors are only reported from this many samples on.
MIN_SAMPLES_FOR_STDERR = 30

LEMMA_PREDICTION = "lemma_prediction"
FLUID_IPA = "fluid_ipa"

# Hand-checked traces (arrivals, t_f), replayed with s = 1 and k = 1.
FIXTURE_TRACES: Dict[str, tuple] = {
    "TRACE-A": ([0.0, 0.5, 2.0], 3.0),
    "TRACE-B": ([0.0, 0.5, 1.3, 1.8, 2.1], 3.5),
    "TRACE-C": ([0.0, 0.5, 1.3, 1.8], 3.0),
}


def _fan_out(fn: Callable[[T], R], items: Sequence[T], workers: int) -> List[R]:
    """map() over items, in a process pool when workers > 1; results keep submission order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    chunksize = max(1, len(items) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))


def _timed(task_name: str, identifier: str, fn: Callable[[], R]) -> R:
    """Run one orchestration task with start/finish logging."""
    start = time.time()
    logger.info(f"[TASK] Starting {task_name} for {identifier}")
    try:
        result = fn()
    except Exception as e:
        logger.error(f"[TASK] Failed {task_name} for {identifier}: {e}")
        raise
    logger.info(f"[TASK] Completed {task_name} for {identifier} in {time.time() - start:.2f}s")
    return result


# ---------------------------------------------------------------------------
# Optimizer experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QueueEvaluator:
    """
    Evaluator for the optimizer: one fresh Poisson path per iteration.

    Iteration i of run `run_id` draws its trace from derive_seed(base_seed,
    run_id, i), so a run is reproducible and iterations are independent.
    """

    workload: WorkloadConfig
    a: float
    base_seed: int
    run_id: int = 0

    def __call__(self, k: int, iteration: int) -> Evaluation:
        seed = derive_seed(self.base_seed, self.run_id, iteration)
        trace = generate_poisson_trace(self.workload.rate, self.workload.t_f, seed)
        result = simulate(trace, make_params(k, self.workload.s, self.workload.t_f))
        return Evaluation(F=sample_cost(result, self.a), Fc_prime=cost_derivative(result, self.a))


def optimize(config: ExperimentConfig, run_id: int = 0) -> List[IterateRecord]:
    evaluator = QueueEvaluator(
        workload=config.workload,
        a=config.optimizer.a,
        base_seed=config.base_seed,
        run_id=run_id,
    )
    return run(config.optimizer, evaluator)


def run_experiment(config: ExperimentConfig) -> ExperimentSummary:
    """Run the optimizer once and write the iterate CSV and the JSON summary."""

    def _experiment() -> ExperimentSummary:
        records = optimize(config)
        theta = final_theta(records)
        summary = ExperimentSummary(
            final_theta=theta,
            final_k=buffer_size(theta, config.optimizer.k_min),
            iterations=len(records),
            base_seed=config.base_seed,
            theta0=config.optimizer.theta0,
            trajectory_path=config.trajectory_path,
        )
        write_text(config.trajectory_path, iterates_to_csv(records))
        write_json(config.summary_path, summary)
        logger.info(f"[OPT] final theta={summary.final_theta:.4f} final k={summary.final_k}")
        return summary

    return _timed("optimizer experiment", f"theta0={config.optimizer.theta0} seed={config.base_seed}", _experiment)


def _final_theta_of_run(run_id: int, config: ExperimentConfig) -> float:
    return final_theta(optimize(config, run_id=run_id))


def repeat_experiment(config: ExperimentConfig, runs: int, workers: int = 1) -> List[float]:
    """Final theta of `runs` independently seeded optimizer runs (run ids 0..runs-1)."""
    return _fan_out(partial(_final_theta_of_run, config=config), list(range(runs)), workers)


# ---------------------------------------------------------------------------
# Replication statistics
# ---------------------------------------------------------------------------


class ReplicationSample(NamedTuple):
    n_lost: int
    F: float
    Fc_prime: float
    delta_L: float
    ipa: float
    E: float
    N: int
    N_s: int


class ReplicationJob(NamedTuple):
    k: int
    s: float
    a: float
    rate: float
    t_f: float
    seed: int
    trace: Optional[ArrivalTrace] = None


def _replicate(job: ReplicationJob) -> ReplicationSample:
    trace = job.trace if job.trace is not None else generate_poisson_trace(job.rate, job.t_f, job.seed)
    params = make_params(job.k, job.s, trace.t_f)
    coupled = coupled_run(trace, params)
    F = coupled.L_k + job.a * job.k
    return ReplicationSample(
        n_lost=coupled.n_lost_k,
        F=F,
        Fc_prime=coupled.ipa + job.a,
        delta_L=coupled.delta_L,
        ipa=coupled.ipa,
        E=coupled.E,
        N=coupled.N,
        N_s=coupled.N_s,
    )


def _stat(values: List[float], n: int) -> tuple[float, Optional[float]]:
    mean, se = mean_and_stderr(values)
    return mean, (se if n >= MIN_SAMPLES_FOR_STDERR else None)


def estimate_expected_error(
    k: int,
    workload: WorkloadConfig,
    replications: int,
    base_seed: int,
    a: float = 0.2,
    trace: Optional[ArrivalTrace] = None,
    workers: int = 1,
) -> ReplicationEntry:
    """
    Replication estimate of the surrogate's relative error at buffer size k.

    Replication j replays a Poisson trace seeded by derive_seed(base_seed, k, j),
    or the given fixed trace. eps_hat = |mean(ipa) - mean(delta_L)| / |mean(delta_L)|
    compares means, not per-path ratios; it is None when mean(delta_L) == 0.
    Per-path relative errors are averaged separately over paths with N > 0.
    """
    if replications < 1:
        raise ValueError(f"replications must be at least 1, got {replications}")
    jobs = [
        ReplicationJob(
            k=k,
            s=workload.s,
            a=a,
            rate=workload.rate,
            t_f=workload.t_f,
            seed=derive_seed(base_seed, k, j),
            trace=trace,
        )
        for j in range(replications)
    ]
    samples = _fan_out(_replicate, jobs, workers)
    n = len(samples)

    mean_F, se_F = _stat([x.F for x in samples], n)
    mean_Fc, se_Fc = _stat([x.Fc_prime for x in samples], n)
    mean_dL, se_dL = _stat([x.delta_L for x in samples], n)
    mean_ipa, _ = _stat([x.ipa for x in samples], n)
    mean_E, se_E = _stat([x.E for x in samples], n)

    lossy = [x for x in samples if x.N > 0]
    mean_ratio = se_ratio = mean_rel = None
    if lossy:
        mean_ratio, se_ratio = _stat([x.N_s / x.N for x in lossy], len(lossy))
        mean_rel, _ = _stat([x.E / (workload.s * x.N) for x in lossy], len(lossy))

    eps_hat = abs(mean_ipa - mean_dL) / abs(mean_dL) if mean_dL != 0 else None
    degenerate = all(x.n_lost == 0 for x in samples)
    if degenerate:
        logger.warning(f"[EST] k={k}: all {n} replications are loss-free; estimate is degenerate")

    entry = ReplicationEntry(
        k=k,
        replications=n,
        mean_F=mean_F,
        se_F=se_F,
        mean_Fc_prime=mean_Fc,
        se_Fc_prime=se_Fc,
        mean_delta_L=mean_dL,
        se_delta_L=se_dL,
        mean_ipa=mean_ipa,
        mean_E=mean_E,
        se_E=se_E,
        mean_ns_over_n=mean_ratio,
        se_ns_over_n=se_ratio,
        mean_rel_error=mean_rel,
        undefined_rel_error=n - len(lossy),
        eps_hat=eps_hat,
        descent_ok=None if eps_hat is None else eps_hat < 1,
        degenerate=degenerate,
    )
    logger.info(
        f"[EST] k={k}: mean Fc'={mean_Fc:.4f} mean dL={mean_dL:.4f} mean ipa={mean_ipa:.4f} "
        f"eps_hat={eps_hat} over {n} reps"
    )
    return entry


def derivative_table(
    ks: Iterable[int],
    workload: WorkloadConfig,
    a: float,
    replications: int,
    base_seed: int,
    workers: int = 1,
) -> ReplicationSummary:
    """Per-k replication statistics of F(k) and F_c'(k) (and the error terms)."""
    entries = [estimate_expected_error(k, workload, replications, base_seed, a=a, workers=workers) for k in ks]
    return ReplicationSummary(workload=workload, a=a, base_seed=base_seed, entries=entries)


# ---------------------------------------------------------------------------
# Property sweep
# ---------------------------------------------------------------------------


class SweepCase(NamedTuple):
    index: int
    case_seed: int
    ranges: SweepRanges
    dump_dir: Optional[str] = None


class CaseOutcome(NamedTuple):
    row: SweepCaseRow
    statuses: Dict[str, str]
    fluid_flagged: bool
    counterexample: Optional[CounterExample]


def _random_fluid_model(rng: np.random.Generator, ranges: SweepRanges) -> tuple[FluidModel, float]:
    t_f = 10.0
    n_segments = int(rng.integers(1, ranges.fluid_segments_max + 1))
    inner = np.unique(rng.uniform(0.0, t_f, size=n_segments - 1))
    starts = [0.0] + [float(t) for t in inner if 0.0 < t < t_f]
    segments = [
        FluidSegment(
            start=start,
            alpha=float(rng.uniform(0.0, ranges.fluid_rate_max)),
            beta=float(rng.uniform(0.0, ranges.fluid_rate_max)),
        )
        for start in starts
    ]
    theta = float(rng.uniform(0.2, 5.0))
    return FluidModel(t_f=t_f, segments=segments), theta


def _dump_counterexample(dump_dir: str, label: str, trace: ArrivalTrace, k: int, s: float) -> str:
    base = Path(dump_dir) / label
    trace_path = write_text(base.with_suffix(".trace"), "".join(f"{t!r}\n" for t in trace.arrivals))
    write_json(base.with_suffix(".perturbation.json"), track(trace, make_params(k, s, trace.t_f)))
    return str(trace_path)


def _check_trace(label: str, trace: ArrivalTrace, k: int, s: float, seed: int, rate: Optional[float], dump_dir: Optional[str]):
    params = make_params(k, s, trace.t_f)
    coupled = coupled_run(trace, params)
    statuses: Dict[str, str] = {}
    details: List[str] = []
    for report in (check_bounds(coupled), check_coupling(coupled)):
        for check in report.checks:
            statuses[check.name] = check.status
            if check.status == "fail":
                details.append(f"{check.name}: {check.detail}")

    lemma = verify_lemma1(trace, params)
    statuses[LEMMA_PREDICTION] = "pass" if lemma.holds else "fail"
    if not lemma.holds:
        first = lemma.first_discrepancy
        details.append(
            f"{LEMMA_PREDICTION}: predicted {first.predicted}, simulated {first.actual} on [{first.start}, {first.end})"
        )

    row = SweepCaseRow(
        seed=seed,
        k=k,
        N=coupled.N,
        N_s=coupled.N_s,
        N_1=coupled.N_1,
        delta_L=coupled.delta_L,
        ipa=coupled.ipa,
        E=coupled.E,
        bound=coupled.bound,
    )
    failed = [name for name, status in statuses.items() if status == "fail"]
    counterexample = None
    if failed:
        counterexample = CounterExample(
            label=label,
            seed=seed,
            k=k,
            rate=rate,
            s=s,
            t_f=trace.t_f,
            failed=failed,
            detail="; ".join(details),
            trace_path=_dump_counterexample(dump_dir, label, trace, k, s) if dump_dir else None,
        )
    return row, statuses, counterexample


def _run_case(case: SweepCase) -> CaseOutcome:
    ranges = case.ranges
    rng = np.random.Generator(np.random.PCG64(case.case_seed))
    load = float(rng.uniform(ranges.load_min, ranges.load_max))
    s = float(rng.uniform(ranges.s_min, ranges.s_max))
    k = int(rng.integers(ranges.k_min, ranges.k_max + 1))
    target = int(rng.integers(ranges.arrivals_min, ranges.arrivals_max + 1))
    rate = load / s
    t_f = target / rate
    trace = generate_poisson_trace(rate, t_f, case.case_seed)

    row, statuses, counterexample = _check_trace(
        f"case-{case.index}", trace, k, s, case.case_seed, rate, case.dump_dir
    )

    model, theta = _random_fluid_model(rng, ranges)
    fd = finite_diff_check(model, theta, ranges.fluid_delta)
    if fd.flagged:
        statuses[FLUID_IPA] = "skipped"
    elif fd.discrepancy <= ranges.fluid_tolerance:
        statuses[FLUID_IPA] = "pass"
    else:
        statuses[FLUID_IPA] = "fail"
        failed = (counterexample.failed if counterexample else []) + [FLUID_IPA]
        detail = f"{FLUID_IPA}: discrepancy {fd.discrepancy} at theta={theta} (N={fd.N})"
        counterexample = CounterExample(
            label=f"case-{case.index}",
            seed=case.case_seed,
            k=k,
            rate=rate,
            s=s,
            t_f=t_f,
            failed=failed,
            detail="; ".join(filter(None, [counterexample.detail if counterexample else "", detail])),
            trace_path=counterexample.trace_path if counterexample else None,
        )
        if case.dump_dir:
            write_text(Path(case.dump_dir) / f"case-{case.index}.fluid.json", to_json(model))

    return CaseOutcome(row=row, statuses=statuses, fluid_flagged=fd.flagged, counterexample=counterexample)


def _tally(tallies: Dict[str, Dict[str, int]], statuses: Dict[str, str]) -> None:
    for name, status in statuses.items():
        counts = tallies.setdefault(name, {"pass": 0, "fail": 0, "skipped": 0})
        counts[status] += 1


def property_sweep(
    cases: int,
    seed: int,
    ranges: Optional[SweepRanges] = None,
    include_fixtures: bool = False,
    dump_dir: Optional[str] = None,
    workers: int = 1,
) -> SweepReport:
    """
    Randomized check of every coupled-path identity and the fluid IPA formula.

    Case i draws (load, s, k, arrival count) and a random fluid model from a
    generator seeded with derive_seed(seed, i); the trace rate is load / s and
    t_f is the arrival count divided by the rate. Failures become report
    content; counterexample traces are written under dump_dir when given.
    """
    if cases < 1:
        raise ValueError(f"cases must be at least 1, got {cases}")
    ranges = ranges or SweepRanges()

    def _sweep() -> SweepReport:
        jobs = [SweepCase(i, derive_seed(seed, i), ranges, dump_dir) for i in range(cases)]
        outcomes = _fan_out(_run_case, jobs, workers)

        tallies: Dict[str, Dict[str, int]] = {}
        counterexamples: List[CounterExample] = []
        for outcome in outcomes:
            _tally(tallies, outcome.statuses)
            if outcome.counterexample is not None:
                counterexamples.append(outcome.counterexample)

        if include_fixtures:
            for label, (arrivals, t_f) in FIXTURE_TRACES.items():
                trace = ArrivalTrace(arrivals=arrivals, t_f=t_f, provenance=f"fixture {label}")
                _, statuses, counterexample = _check_trace(label, trace, 1, 1.0, 0, None, dump_dir)
                _tally(tallies, statuses)
                if counterexample is not None:
                    counterexamples.append(counterexample)

        report = SweepReport(
            cases=cases,
            seed=seed,
            tallies=tallies,
            fluid_flagged=sum(1 for o in outcomes if o.fluid_flagged),
            rows=[o.row for o in outcomes],
            counterexamples=counterexamples,
        )
        for name, counts in sorted(tallies.items()):
            logger.info(f"[SWEEP] {name}: {counts['pass']} pass, {counts['fail']} fail, {counts['skipped']} skipped")
        return report

    return _timed("property sweep", f"cases={cases} seed={seed}", _sweep)

