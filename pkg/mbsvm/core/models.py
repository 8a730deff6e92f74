from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SolverKind(str, Enum):
    PEGASOS = "pegasos"
    SDCA_NAIVE = "sdca_naive"
    SDCA_SAFE = "sdca_safe"
    SDCA_AGGRESSIVE = "sdca_aggressive"
    SDCA_SERIAL = "sdca_serial"

    @property
    def is_dual(self) -> bool:
        return self is not SolverKind.PEGASOS


class AveragingMode(str, Enum):
    TAIL = "tail"
    DECAYING = "decaying"
    FINAL = "final"
    SCHEDULE = "schedule"


class SolverConfig(BaseModel):
    """Everything a single solver run needs besides the data."""
    model_config = ConfigDict(populate_by_name=True)

    kind: SolverKind
    lambda_: float = Field(alias="lambda", gt=0)
    b: int = Field(default=1, ge=1)
    max_iters: int = Field(default=1000, ge=1)
    beta_override: Optional[float] = Field(default=None, gt=0)
    gamma: float = Field(default=0.95, gt=0, lt=1)
    averaging: AveragingMode = AveragingMode.DECAYING
    seed: int = Field(default=0, ge=0)
    checkpoint_every: Optional[int] = Field(default=None, ge=1)
    epsilon: float = Field(default=1e-3, gt=0)
    stop_on_target: bool = False
    deterministic_reduction: bool = False
    workers: int = Field(default=1, ge=1)

    def checkpoint_cadence(self, n: int) -> int:
        """Checkpoint every ``checkpoint_every`` iterations, one epoch by default."""
        if self.checkpoint_every is not None:
            return self.checkpoint_every
        return max(1, -(-n // self.b))


class Schedule(BaseModel):
    t0: int = Field(ge=0)
    T0: int
    T: int
    epsilon: float = Field(gt=0)

    @model_validator(mode="after")
    def _check_order(self):
        if not (self.t0 <= self.T0 < self.T):
            raise ValueError(f"schedule must satisfy t0 <= T0 < T, got {self.t0}, {self.T0}, {self.T}")
        return self


class SpectralEstimate(BaseModel):
    sigma_sq: float = Field(gt=0)
    iterations_used: int = Field(ge=0)
    converged: bool
    inflation: float = Field(default=1.0, ge=1)
    lambda_max: Optional[float] = None
    method: str = "power"


class GapReport(BaseModel):
    primal: float
    dual: float
    gap: float
    test_error: Optional[float] = Field(default=None, ge=0, le=1)


class TraceRecord(BaseModel):
    iter: int = Field(ge=0)
    epoch_equiv: float
    primal: float
    dual: float
    gap: float
    test_error: Optional[float] = None
    beta_t: Optional[float] = None
    elapsed_s: Optional[float] = None


class SigmaSource(BaseModel):
    mode: str = Field(default="estimate", pattern="^(estimate|override|exact_small_n)$")
    value: Optional[float] = Field(default=None, gt=0, le=1)

    @model_validator(mode="after")
    def _value_needed(self):
        if self.mode == "override" and self.value is None:
            raise ValueError("sigma_sq override requires a value")
        return self


class ExperimentSpec(BaseModel):
    """A solve or sweep request, as read from ``--spec`` JSON or assembled from flags."""
    train_path: str
    test_path: Optional[str] = None
    test_fraction: float = Field(default=0.0, ge=0, lt=1)
    solvers: List[SolverConfig]
    b_values: List[int] = []
    epsilon_target: float = Field(default=1e-3, gt=0)
    sigma_sq_source: SigmaSource = SigmaSource()
    output_path: Optional[str] = None
    seed: int = Field(default=0, ge=0)
    normalize: bool = True

    @model_validator(mode="after")
    def _check_solvers(self):
        if not self.solvers:
            raise ValueError("at least one solver configuration is required")
        if any(b < 1 for b in self.b_values):
            raise ValueError("batch sizes must be positive")
        return self


class SweepRow(BaseModel):
    solver: SolverKind
    b: int
    sigma_sq: float
    beta_b: float
    beta_b_over_b: float
    iterations: Optional[int] = None
    final_subopt: float
    rejected_steps: int = 0

    @property
    def reached(self) -> bool:
        return self.iterations is not None


class ReferenceEntry(BaseModel):
    dataset_key: str
    lambda_: float = Field(alias="lambda")
    primal: float
    dual: float
    iterations: int
    certified: bool
    version: str
    model_config = ConfigDict(populate_by_name=True)

    @property
    def p_star(self) -> float:
        """Best certified value to measure suboptimality against.

        An uncertified run falls back to its dual value, which still lower-bounds
        the optimum, so suboptimality is over- rather than under-estimated.
        """
        return self.primal if self.certified else self.dual
