from pydantic_settings import BaseSettings, SettingsConfigDict

from app.schemas.experiment import WorkloadConfig
from app.schemas.optimizer import OptimizerConfig


class Settings(BaseSettings):
    # Workload (M/D/1/k defaults: 90 jobs/s, s = 10 ms, 20 s horizon)
    ARRIVAL_RATE: float = 90.0
    SERVICE_TIME: float = 0.01
    HORIZON: float = 20.0

    # Stochastic approximation
    BUFFER_COST: float = 0.2
    TRUNCATION: float = 2.5
    STEP_SCALE: float = 10.0
    STEP_EXPONENT: float = 0.6
    ITERATIONS: int = 100
    THETA0: float = 15.0
    K_MIN: int = 1

    # Replications / reproducibility
    BASE_SEED: int = 2024
    REPLICATIONS: int = 200
    WORKERS: int = 1

    LOG_LEVEL: str = "INFO"
    OUTPUT_DIR: str = "out"

    @property
    def workload(self) -> WorkloadConfig:
        return WorkloadConfig(rate=self.ARRIVAL_RATE, s=self.SERVICE_TIME, t_f=self.HORIZON)

    @property
    def optimizer(self) -> OptimizerConfig:
        """Optimizer parameters as configured; theta0 defaults to the descending experiment."""
        return OptimizerConfig(
            a=self.BUFFER_COST,
            r=self.TRUNCATION,
            lambda0=self.STEP_SCALE,
            p=self.STEP_EXPONENT,
            iterations=self.ITERATIONS,
            theta0=self.THETA0,
            k_min=self.K_MIN,
        )

    model_config = SettingsConfigDict(env_file=".env", extra="ignore")

settings = Settings()
