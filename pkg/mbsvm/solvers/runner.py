import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from mbsvm.core.dataset import Dataset
from mbsvm.core.models import GapReport, TraceRecord
from mbsvm.core.objectives import DualVector, certificate
from mbsvm.core.sampler import BatchSampler
from mbsvm.solvers.base import Solver, SolverState


@dataclass
class TrainingResult:
    records: List[TraceRecord]
    w: np.ndarray
    alpha: DualVector
    report: GapReport
    iterations: int
    target_iteration: Optional[int] = None
    rejected_steps: int = 0
    beta_final: Optional[float] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def reached(self) -> bool:
        return self.target_iteration is not None


class SolverRunner:
    """
    Drives a solver for up to ``max_iters`` iterations and records checkpoints.

    A checkpoint evaluates P at the averaged iterate and D at the solver's dual
    certificate. The target counts as reached at the first checkpoint where the
    primal suboptimality P - p_star is <= epsilon when a reference p_star is
    known, or where the gap is <= epsilon otherwise. With ``stop_on_target``
    the run ends there.
    """

    def __init__(self, solver: Solver, test_ds: Optional[Dataset] = None, p_star: Optional[float] = None,
                 status_callback: Optional[Callable[[str], None]] = None):
        self.solver = solver
        self.ds = solver.ds
        self.cfg = solver.cfg
        self.test_ds = test_ds
        self.p_star = p_star
        self.status_callback = status_callback

    def _log(self, message: str):
        logging.info(message)
        if self.status_callback:
            self.status_callback(message)

    def _target_met(self, report: TraceRecord) -> bool:
        if self.p_star is not None:
            return report.primal - self.p_star <= self.cfg.epsilon
        return report.gap <= self.cfg.epsilon

    def _checkpoint(self, state: SolverState, started: float) -> TraceRecord:
        w_bar, alpha, w_alpha = self.solver.averaged(state)
        report = certificate(self.ds, w_bar, alpha, w_alpha, self.solver.lam, self.test_ds)
        elapsed = None if self.cfg.deterministic_reduction else time.perf_counter() - started
        return TraceRecord(
            iter=state.t,
            epoch_equiv=state.t * self.cfg.b / self.ds.n,
            primal=report.primal,
            dual=report.dual,
            gap=report.gap,
            test_error=report.test_error,
            beta_t=self.solver.reported_beta(state),
            elapsed_s=elapsed,
        )

    def run(self) -> TrainingResult:
        cfg = self.cfg
        cadence = cfg.checkpoint_cadence(self.ds.n)
        sampler = BatchSampler(self.ds.n, cfg.b, cfg.seed, cfg.b)
        self._log(f"Running {self.solver.get_name()} with b = {cfg.b}, lambda = {cfg.lambda_:g}, "
                  f"up to {cfg.max_iters} iterations (checkpoint every {cadence})")

        started = time.perf_counter()
        state = self.solver.init_state()
        records = [self._checkpoint(state, started)]
        target_iteration = 0 if self._target_met(records[0]) else None
        try:
            while state.t < cfg.max_iters:
                if target_iteration is not None and cfg.stop_on_target:
                    break
                self.solver.step(state, sampler.draw())
                if state.t % cadence == 0 or state.t == cfg.max_iters:
                    record = self._checkpoint(state, started)
                    records.append(record)
                    logging.debug(f"iter {record.iter}: primal {record.primal:.6g}, dual {record.dual:.6g}, "
                                  f"gap {record.gap:.3e}")
                    if target_iteration is None and self._target_met(record):
                        target_iteration = state.t
                        self._log(f"Target {cfg.epsilon:g} reached at iteration {state.t}")
        finally:
            self.solver.close()

        w_bar, alpha, w_alpha = self.solver.averaged(state)
        report = certificate(self.ds, w_bar, alpha, w_alpha, self.solver.lam, self.test_ds)
        warnings = []
        if target_iteration is None:
            message = f"Target {cfg.epsilon:g} not reached within {state.t} iterations (gap {report.gap:.3e})"
            logging.warning(message)
            warnings.append(message)
        if state.rejected_steps:
            self._log(f"{state.rejected_steps} of {state.t} steps were rejected")
        return TrainingResult(
            records=records,
            w=w_bar,
            alpha=alpha,
            report=report,
            iterations=state.t,
            target_iteration=target_iteration,
            rejected_steps=state.rejected_steps,
            beta_final=self.solver.reported_beta(state),
            warnings=warnings,
        )
