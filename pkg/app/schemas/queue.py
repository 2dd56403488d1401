from typing import List, Literal, NamedTuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

INITIAL = "INITIAL"


class ArrivalTrace(BaseModel):
    """Arrival epochs shared by every run that replays this workload."""

    model_config = ConfigDict(frozen=True)

    arrivals: List[float] = Field(default_factory=list)
    t_f: float = Field(gt=0)
    provenance: str = "external file"

    @model_validator(mode="after")
    def check_epochs(self):
        previous = None
        for idx, t in enumerate(self.arrivals):
            if not (0.0 <= t <= self.t_f):
                raise ValueError(f"arrival {idx} at {t} lies outside [0, {self.t_f}]")
            if previous is not None and t <= previous:
                raise ValueError(f"arrival {idx} at {t} is not after {previous}")
            previous = t
        return self


class QueueParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=1, description="system capacity, server plus buffer")
    s: float = Field(gt=0, description="constant service time (seconds)")
    t_f: float = Field(gt=0, description="horizon (seconds)")


class BusyPeriodRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: float
    end: float
    lossy: bool
    # seconds of idleness before start, or "INITIAL" for the first busy period
    preceding_idle: Union[float, Literal["INITIAL"]]
    loss_epochs: List[float] = Field(default_factory=list)


class EventRecord(NamedTuple):
    time: float
    kind: Literal["arrival", "departure", "loss"]
    x: int


class SimResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: QueueParams
    n_arrivals: int
    n_lost: int
    loss_volume: float
    loss_fraction: float
    busy_periods: List[BusyPeriodRecord]
    N: int
    N_s: int
    N_ell: int
    event_log: List[EventRecord]

    @property
    def loss_epochs(self) -> List[float]:
        return [e.time for e in self.event_log if e.kind == "loss"]
