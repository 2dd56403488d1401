from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field


class PerturbationLog(BaseModel):
    """
    Event-machinery record for the k -> k+1 perturbation of one nominal path.

    zeta_segments / psi_segments hold (start, value) pairs of right-continuous
    step functions; delta_x_segments holds the [start, end) intervals on which
    the predicted coupled difference is 1 (it is 0 everywhere else).
    """

    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=1)
    s: float = Field(gt=0)
    t_f: float = Field(gt=0)
    type1_epochs: List[float] = Field(default_factory=list)
    type2_epochs: List[float] = Field(default_factory=list)
    zeta_segments: List[Tuple[float, float]] = Field(default_factory=list)
    psi_segments: List[Tuple[float, int]] = Field(default_factory=list)
    N_1: int = 0
    delta_x_segments: List[Tuple[float, float]] = Field(default_factory=list)
