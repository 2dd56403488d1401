from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict

UNDEFINED = "UNDEFINED"

CheckStatus = Literal["pass", "fail", "skipped"]


class CoupledResult(BaseModel):
    """Exact finite difference of the loss volume between capacities k and k+1."""

    model_config = ConfigDict(frozen=True)

    k: int
    s: float
    n_lost_k: int
    n_lost_k1: int
    L_k: float
    L_k1: float
    delta_L: float
    N: int
    N_s: int
    N_ell: int
    N_1: int
    ipa: float
    E: float
    bound: float
    rel_error: Union[float, Literal["UNDEFINED"]]
    # losses of the nominal run that the extra buffer slot admits
    n_absorbed: int
    # losses of the perturbed run that the nominal run admits
    n_displaced: int
    max_delta_x: int
    min_delta_x: int


class CheckOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    status: CheckStatus
    detail: str = ""


class BoundsReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    checks: List[CheckOutcome]

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def status_of(self, name: str) -> CheckStatus:
        for check in self.checks:
            if check.name == name:
                return check.status
        raise KeyError(name)


class Discrepancy(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: float
    end: float
    predicted: int
    actual: int


class Lemma1Report(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    holds: bool
    intervals_checked: int
    discrepancies: int
    first_discrepancy: Optional[Discrepancy] = None
    max_delta_x: int


class CoupledReport(BaseModel):
    """Everything the `coupled` command reports for one (trace, k)."""

    model_config = ConfigDict(frozen=True)

    result: CoupledResult
    bounds: BoundsReport
    coupling: BoundsReport
    lemma: Lemma1Report

    @property
    def passed(self) -> bool:
        return self.bounds.passed and self.coupling.passed and self.lemma.holds
