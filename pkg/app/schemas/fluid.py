import math
from typing import List

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class FluidSegment(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: float = Field(ge=0)
    alpha: float = Field(ge=0)
    beta: float = Field(ge=0)

    @field_validator("alpha", "beta")
    @classmethod
    def finite_rate(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("rates must be finite")
        return v


class FluidModel(BaseModel):
    """Piecewise-constant inflow/service rates on [0, t_f]."""

    model_config = ConfigDict(frozen=True)

    t_f: float = Field(gt=0)
    x0: float = Field(default=0.0, ge=0)
    segments: List[FluidSegment] = Field(min_length=1)

    @model_validator(mode="after")
    def check_segments(self):
        if self.segments[0].start != 0.0:
            raise ValueError("first segment must start at 0")
        for prev, nxt in zip(self.segments, self.segments[1:]):
            if nxt.start <= prev.start:
                raise ValueError(f"segment starts must increase ({prev.start} then {nxt.start})")
        if self.segments[-1].start >= self.t_f:
            raise ValueError("every segment must start before t_f")
        return self

    def segment_end(self, idx: int) -> float:
        return self.segments[idx + 1].start if idx + 1 < len(self.segments) else self.t_f


class WorkloadPiece(BaseModel):
    """Linear piece of x(t): x moves from x_start to x_end over [t_start, t_end]."""

    model_config = ConfigDict(frozen=True)

    t_start: float
    t_end: float
    x_start: float
    x_end: float
    overflow_rate: float = 0.0


class FluidResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    theta: float
    loss_volume: float
    N: int
    breakpoints: List[float]
    trajectory: List[WorkloadPiece]
    inflow_volume: float
    outflow_volume: float
    x0: float
    x_final: float


class FiniteDiffReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    theta: float
    delta: float
    central_difference: float
    ipa: float
    discrepancy: float
    N: int
    N_minus: int
    N_plus: int
    flagged: bool


class FluidReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    result: FluidResult
    finite_difference: FiniteDiffReport
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.finite_difference.flagged or self.finite_difference.discrepancy <= self.tolerance
