import sys
import os
import logging
import statistics

# Add the project root to the python path so we can import the app package
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from app.core.config import settings  # noqa: E402
from app.core.optimizer import buffer_size  # noqa: E402
from app.schemas.experiment import ExperimentConfig  # noqa: E402
from app import tasks  # noqa: E402

RUNS = 20
SIGN_TABLE_KS = range(1, 13)
SIGN_TABLE_REPS = 50


def convergence(theta0: float, workers: int):
    """Both optimizer experiments: one logged run plus RUNS seeded repeats."""
    config = ExperimentConfig(
        workload=settings.workload,
        optimizer=settings.optimizer.model_copy(update={"theta0": theta0}),
        base_seed=settings.BASE_SEED,
        trajectory_path=f"{settings.OUTPUT_DIR}/trajectory_theta0_{theta0:g}.csv",
        summary_path=f"{settings.OUTPUT_DIR}/summary_theta0_{theta0:g}.json",
    )
    summary = tasks.run_experiment(config)
    print(f"\ntheta0={theta0:g}: single run ends at theta={summary.final_theta:.3f} (k={summary.final_k})")
    print(f"  trajectory -> {summary.trajectory_path}")

    finals = tasks.repeat_experiment(config, RUNS, workers=workers)
    ks = [buffer_size(t, config.optimizer.k_min) for t in finals]
    in_band = sum(1 for k in ks if 5 <= k <= 8)
    print(f"  {RUNS} seeded runs: median final theta = {statistics.median(finals):.3f}")
    print(f"  runs ending with k in 5..8: {in_band}/{RUNS}")
    print(f"  final k values: {sorted(ks)}")


def sign_table(workers: int):
    print(f"\nSurrogate derivative by buffer size ({SIGN_TABLE_REPS} replications, a={settings.BUFFER_COST})")
    print(f"{'k':>3} | {'mean F':>10} | {'mean Fc_prime':>14} | {'se':>8} | {'eps_hat':>8} | {'Ns/N':>6}")
    print("-" * 64)
    table = tasks.derivative_table(
        SIGN_TABLE_KS,
        settings.workload,
        settings.BUFFER_COST,
        SIGN_TABLE_REPS,
        settings.BASE_SEED,
        workers=workers,
    )
    for e in table.entries:
        eps = f"{e.eps_hat:.3f}" if e.eps_hat is not None else "-"
        ratio = f"{e.mean_ns_over_n:.3f}" if e.mean_ns_over_n is not None else "-"
        se = f"{e.se_Fc_prime:.4f}" if e.se_Fc_prime is not None else "-"
        print(f"{e.k:>3} | {e.mean_F:>10.4f} | {e.mean_Fc_prime:>14.4f} | {se:>8} | {eps:>8} | {ratio:>6}")


if __name__ == "__main__":
    logging.basicConfig(level=logging.WARNING, format="%(asctime)s [%(levelname)s] %(name)s: %(message)s")
    workers = settings.WORKERS
    print(f"Workload: rate={settings.ARRIVAL_RATE}/s, s={settings.SERVICE_TIME}s, t_f={settings.HORIZON}s")
    convergence(15.0, workers)
    convergence(1.0, workers)
    sign_table(workers)
