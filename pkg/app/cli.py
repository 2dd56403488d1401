"""
Command-line surface.

    bufferpa simulate  --rate 90 --service 0.01 --k 6 --horizon 20 --seed 1
    bufferpa coupled   --trace fixtures/trace_c.txt --service 1 --k 1 --horizon 3
    bufferpa fluid     --model model.json --theta 3
    bufferpa optimize  --theta0 15 --out out/trajectory.csv
    bufferpa estimate  --k-range 1:12 --reps 50
    bufferpa verify    --cases 1000 --seed 7 --out out/verify.csv [--config ranges.json]

JSON goes to stdout (or --out), logs go to stderr. Exit status: 0 when every
check passes, 1 when a check fails, 2 on invalid input or I/O errors.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ValidationError

from app.core.artifacts import read_fluid_model, read_json, to_json, verify_rows_to_csv, write_text
from app.core.config import settings
from app.core.exceptions import BufferPAError, ParameterError
from app.core.fluid import finite_diff_check, fluid_from_trace, simulate_fluid
from app.core.fpa_oracle import check_bounds, check_coupling, coupled_run, verify_lemma1
from app.core.queue_sim import generate_poisson_trace, load_trace, make_params, simulate
from app.schemas.experiment import ExperimentConfig, ReplicationSummary, SweepRanges, WorkloadConfig
from app.schemas.fluid import FluidReport
from app.schemas.oracle import CoupledReport
from app.schemas.queue import ArrivalTrace
from app import tasks

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def _add_workload_flags(parser: argparse.ArgumentParser, with_k: bool = True) -> None:
    parser.add_argument("--rate", type=float, help="Poisson arrival rate (jobs/second)")
    parser.add_argument("--service", type=float, help="constant service time s (seconds)")
    parser.add_argument("--horizon", type=float, help="horizon t_f (seconds)")
    parser.add_argument("--seed", type=int, help="generator seed")
    parser.add_argument("--config", type=str, help="ExperimentConfig JSON document")
    parser.add_argument("--out", type=str, help="output path (stdout when omitted)")
    if with_k:
        parser.add_argument("--k", type=int, default=None, help="system capacity (server + buffer)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bufferpa", description="Loss-queue perturbation analysis and buffer optimization")
    parser.add_argument("--log-level", default=None, help=f"logging level (default {settings.LOG_LEVEL})")
    parser.add_argument("--workers", type=int, default=settings.WORKERS, help="processes for replications/sweeps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate the G/D/1/k queue on one trace")
    _add_workload_flags(p)
    p.add_argument("--trace", type=str, help="trace file (one epoch per line) instead of a Poisson workload")
    p.add_argument("--events", action="store_true", help="include the event log in the output")

    p = sub.add_parser("coupled", help="coupled k / k+1 run with every identity check")
    _add_workload_flags(p)
    p.add_argument("--trace", type=str, help="trace file instead of a Poisson workload")

    p = sub.add_parser("fluid", help="simulate the flow model and check its IPA derivative")
    _add_workload_flags(p, with_k=False)
    p.add_argument("--model", type=str, help="FluidModel JSON; otherwise the workload is binned into a flow model")
    p.add_argument("--bin-width", type=float, default=0.1, help="bin width when deriving the model from a trace")
    p.add_argument("--theta", type=float, required=True, help="buffer size (volume)")
    p.add_argument("--delta", type=float, default=1e-4, help="finite-difference half-width")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--trajectory", action="store_true", help="include the workload trajectory in the output")

    p = sub.add_parser("optimize", help="run the stochastic-approximation optimizer")
    _add_workload_flags(p, with_k=False)
    p.add_argument("--theta0", type=float, help="initial theta")
    p.add_argument("--iterations", type=int)
    p.add_argument("--a", type=float, help="cost per buffer unit")

    p = sub.add_parser("estimate", help="replication estimates of the surrogate's error")
    _add_workload_flags(p)
    p.add_argument("--k-range", type=str, help="inclusive range lo:hi of buffer sizes")
    p.add_argument("--reps", type=int, help="replications per buffer size")
    p.add_argument("--a", type=float, help="cost per buffer unit")
    p.add_argument("--trace", type=str, help="replay this fixed trace in every replication")

    p = sub.add_parser("verify", help="randomized sweep of every identity")
    p.add_argument("--cases", type=int, default=1000)
    p.add_argument("--seed", type=int, default=settings.BASE_SEED)
    p.add_argument("--out", type=str, default=f"{settings.OUTPUT_DIR}/verify.csv", help="per-case CSV")
    p.add_argument("--dump-dir", type=str, help="directory for counterexample traces")
    p.add_argument("--fixtures", action="store_true", help="also check the hand-computed fixture traces")
    p.add_argument("--config", type=str, help="SweepRanges JSON document (parameter ranges of the random cases)")
    return parser


def summary_path_for(trajectory_path: str) -> str:
    """The optimize summary sits next to the trajectory with a .json suffix."""
    summary = Path(trajectory_path).with_suffix(".json")
    if summary == Path(trajectory_path):
        raise ParameterError(f"--out {trajectory_path!r} would be overwritten by the JSON summary; use a .csv path")
    return str(summary)


def sweep_ranges(args: argparse.Namespace) -> SweepRanges:
    return read_json(args.config, SweepRanges) if args.config else SweepRanges()


def experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    """settings, then --config file values, then explicit flags."""
    if getattr(args, "config", None):
        config = read_json(args.config, ExperimentConfig)
    else:
        config = ExperimentConfig(
            workload=settings.workload,
            optimizer=settings.optimizer,
            replications=settings.REPLICATIONS,
            base_seed=settings.BASE_SEED,
            trajectory_path=f"{settings.OUTPUT_DIR}/trajectory.csv",
            summary_path=f"{settings.OUTPUT_DIR}/summary.json",
        )

    data = config.model_dump()
    overrides = {"rate": "rate", "service": "s", "horizon": "t_f"}
    for flag, field in overrides.items():
        value = getattr(args, flag, None)
        if value is not None:
            data["workload"][field] = value
    for flag, field in {"theta0": "theta0", "iterations": "iterations", "a": "a"}.items():
        value = getattr(args, flag, None)
        if value is not None:
            data["optimizer"][field] = value
    if getattr(args, "seed", None) is not None:
        data["base_seed"] = args.seed
    if getattr(args, "reps", None) is not None:
        data["replications"] = args.reps
    if args.command == "optimize" and getattr(args, "out", None):
        data["trajectory_path"] = args.out
        data["summary_path"] = summary_path_for(args.out)

    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ParameterError(f"invalid configuration: {e}") from e


def _trace_for(args: argparse.Namespace, workload: WorkloadConfig, seed: int) -> ArrivalTrace:
    if getattr(args, "trace", None):
        return load_trace(args.trace, workload.t_f)
    return generate_poisson_trace(workload.rate, workload.t_f, seed)


def _capacity(args: argparse.Namespace) -> int:
    if args.k is None:
        raise ParameterError("--k is required for this command")
    return args.k


def _emit(args: argparse.Namespace, text: str) -> None:
    if getattr(args, "out", None):
        write_text(args.out, text)
    else:
        sys.stdout.write(text)


def _emit_model(args: argparse.Namespace, model: BaseModel, exclude: Optional[dict] = None) -> None:
    _emit(args, model.model_dump_json(indent=2, exclude=exclude) + "\n")


def cmd_simulate(args: argparse.Namespace) -> int:
    config = experiment_config(args)
    trace = _trace_for(args, config.workload, config.base_seed)
    result = simulate(trace, make_params(_capacity(args), config.workload.s, trace.t_f))
    logger.info(f"[SIM] k={result.params.k}: {result.n_lost}/{result.n_arrivals} lost, N={result.N} (N_s={result.N_s})")
    _emit_model(args, result, exclude=None if args.events else {"event_log"})
    return EXIT_OK


def cmd_coupled(args: argparse.Namespace) -> int:
    config = experiment_config(args)
    trace = _trace_for(args, config.workload, config.base_seed)
    params = make_params(_capacity(args), config.workload.s, trace.t_f)
    result = coupled_run(trace, params)
    report = CoupledReport(
        result=result,
        bounds=check_bounds(result),
        coupling=check_coupling(result),
        lemma=verify_lemma1(trace, params),
    )
    for check in report.bounds.checks + report.coupling.checks:
        if check.status == "fail":
            logger.warning(f"[FPA] {check.name} failed: {check.detail}")
    _emit_model(args, report)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_fluid(args: argparse.Namespace) -> int:
    if args.model:
        model = read_fluid_model(args.model)
    else:
        config = experiment_config(args)
        trace = generate_poisson_trace(config.workload.rate, config.workload.t_f, config.base_seed)
        model = fluid_from_trace(trace, config.workload.s, args.bin_width)
    result = simulate_fluid(model, args.theta)
    report = FluidReport(
        result=result,
        finite_difference=finite_diff_check(model, args.theta, args.delta),
        tolerance=args.tolerance,
    )
    logger.info(f"[FLUID] theta={args.theta}: loss={result.loss_volume:.6f} N={result.N}")
    exclude = None if args.trajectory else {"result": {"trajectory"}}
    _emit_model(args, report, exclude=exclude)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_optimize(args: argparse.Namespace) -> int:
    config = experiment_config(args)
    summary = tasks.run_experiment(config)
    sys.stdout.write(to_json(summary))
    return EXIT_OK


def _k_values(args: argparse.Namespace) -> List[int]:
    if args.k_range:
        try:
            lo, hi = (int(v) for v in args.k_range.split(":"))
        except ValueError as e:
            raise ParameterError(f"--k-range must look like lo:hi, got {args.k_range!r}") from e
        if lo < 1 or hi < lo:
            raise ParameterError(f"invalid --k-range {args.k_range!r}")
        return list(range(lo, hi + 1))
    return [_capacity(args)]


def cmd_estimate(args: argparse.Namespace) -> int:
    config = experiment_config(args)
    trace = load_trace(args.trace, config.workload.t_f) if args.trace else None
    entries = [
        tasks.estimate_expected_error(
            k,
            config.workload,
            config.replications,
            config.base_seed,
            a=config.optimizer.a,
            trace=trace,
            workers=args.workers,
        )
        for k in _k_values(args)
    ]
    summary = ReplicationSummary(
        workload=config.workload, a=config.optimizer.a, base_seed=config.base_seed, entries=entries
    )
    _emit_model(args, summary)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    report = tasks.property_sweep(
        args.cases,
        args.seed,
        ranges=sweep_ranges(args),
        include_fixtures=args.fixtures,
        dump_dir=args.dump_dir,
        workers=args.workers,
    )
    write_text(args.out, verify_rows_to_csv(report.rows))
    sys.stdout.write(report.model_dump_json(indent=2, exclude={"rows"}) + "\n")
    if report.failures:
        logger.warning(f"[SWEEP] {report.failures} failed checks, {len(report.counterexamples)} counterexamples")
        return EXIT_CHECK_FAILED
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "coupled": cmd_coupled,
    "fluid": cmd_fluid,
    "optimize": cmd_optimize,
    "estimate": cmd_estimate,
    "verify": cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or settings.LOG_LEVEL).upper(),
        format=LOG_FORMAT,
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except BufferPAError as e:
        logger.error(f"[CLI] {args.command}: {e}")
        return EXIT_ERROR
