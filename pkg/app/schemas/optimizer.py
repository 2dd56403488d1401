from typing import NamedTuple

from pydantic import BaseModel, ConfigDict, Field


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: float = Field(default=0.2, ge=0, description="cost per buffer unit")
    r: float = Field(default=2.5, gt=0, description="truncation threshold")
    lambda0: float = Field(default=10.0, gt=0)
    # (0.5, 1] keeps sum(lambda_i) infinite and sum(lambda_i^2) finite
    p: float = Field(default=0.6, gt=0.5, le=1.0)
    iterations: int = Field(default=100, ge=1)
    theta0: float = 15.0
    k_min: int = Field(default=1, ge=1)


class IterateRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    i: int = Field(ge=1)
    theta: float
    k: int
    F: float
    Fc_prime: float
    d: float


class Evaluation(NamedTuple):
    """Sample cost F(k) = L(k) + a*k and its surrogate derivative at one path."""

    F: float
    Fc_prime: float
