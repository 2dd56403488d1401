from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.optimizer import OptimizerConfig


class WorkloadConfig(BaseModel):
    """Poisson arrivals at `rate` into a queue with service time `s` over [0, t_f]."""

    model_config = ConfigDict(frozen=True)

    rate: float = Field(default=90.0, gt=0)
    s: float = Field(default=0.01, gt=0)
    t_f: float = Field(default=20.0, gt=0)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    workload: WorkloadConfig = Field(default_factory=WorkloadConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    replications: int = Field(default=200, ge=1)
    base_seed: int = Field(default=2024, ge=0)
    trajectory_path: str = "out/trajectory.csv"
    summary_path: str = "out/summary.json"


class ExperimentSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    final_theta: float
    final_k: int
    iterations: int
    base_seed: int
    theta0: float
    trajectory_path: str


class ReplicationEntry(BaseModel):
    """Replication statistics at one buffer size k. Standard errors are None below 30 samples."""

    model_config = ConfigDict(frozen=True)

    k: int
    replications: int
    mean_F: float
    se_F: Optional[float] = None
    mean_Fc_prime: float
    se_Fc_prime: Optional[float] = None
    mean_delta_L: float
    se_delta_L: Optional[float] = None
    mean_ipa: float
    mean_E: float
    se_E: Optional[float] = None
    mean_ns_over_n: Optional[float] = None
    se_ns_over_n: Optional[float] = None
    mean_rel_error: Optional[float] = None
    undefined_rel_error: int = 0
    eps_hat: Optional[float] = None
    descent_ok: Optional[bool] = None
    degenerate: bool = False


class ReplicationSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    workload: WorkloadConfig
    a: float
    base_seed: int
    entries: List[ReplicationEntry]


class SweepRanges(BaseModel):
    model_config = ConfigDict(frozen=True)

    load_min: float = Field(default=0.3, gt=0)
    load_max: float = Field(default=1.5, gt=0)
    s_min: float = Field(default=0.01, gt=0)
    s_max: float = Field(default=1.0, gt=0)
    k_min: int = Field(default=1, ge=1)
    k_max: int = Field(default=20, ge=1)
    arrivals_min: int = Field(default=100, ge=1)
    arrivals_max: int = Field(default=5000, ge=1)
    fluid_segments_max: int = Field(default=20, ge=1)
    fluid_rate_max: float = Field(default=3.0, gt=0)
    fluid_delta: float = Field(default=1e-4, gt=0)
    fluid_tolerance: float = Field(default=1e-6, gt=0)

    @model_validator(mode="after")
    def check_order(self):
        if self.load_min > self.load_max or self.s_min > self.s_max:
            raise ValueError("range minimum exceeds maximum")
        if self.k_min > self.k_max or self.arrivals_min > self.arrivals_max:
            raise ValueError("range minimum exceeds maximum")
        return self


class SweepCaseRow(BaseModel):
    """One row of the verify CSV."""

    model_config = ConfigDict(frozen=True)

    seed: int
    k: int
    N: int
    N_s: int
    N_1: int
    delta_L: float
    ipa: float
    E: float
    bound: float


class CounterExample(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    seed: Optional[int] = None
    k: Optional[int] = None
    rate: Optional[float] = None
    s: Optional[float] = None
    t_f: Optional[float] = None
    failed: List[str]
    detail: str = ""
    trace_path: Optional[str] = None


class SweepReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    cases: int
    seed: int
    # check name -> {"pass": n, "fail": n, "skipped": n}
    tallies: Dict[str, Dict[str, int]]
    fluid_flagged: int
    rows: List[SweepCaseRow]
    counterexamples: List[CounterExample]

    @property
    def failures(self) -> int:
        return sum(t.get("fail", 0) for t in self.tallies.values())
