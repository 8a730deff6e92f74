from typing import Dict, Optional, Type

from mbsvm.core.dataset import Dataset
from mbsvm.core.models import SolverConfig, SolverKind
from mbsvm.solvers.base import Solver
from mbsvm.solvers.pegasos import PegasosSolver
from mbsvm.solvers.sdca import AggressiveSdcaSolver, NaiveSdcaSolver, SafeSdcaSolver, SerialSdcaSolver

SOLVERS: Dict[SolverKind, Type[Solver]] = {
    SolverKind.PEGASOS: PegasosSolver,
    SolverKind.SDCA_NAIVE: NaiveSdcaSolver,
    SolverKind.SDCA_SAFE: SafeSdcaSolver,
    SolverKind.SDCA_AGGRESSIVE: AggressiveSdcaSolver,
    SolverKind.SDCA_SERIAL: SerialSdcaSolver,
}


def make_solver(ds: Dataset, cfg: SolverConfig, sigma_sq: Optional[float] = None,
                schedule_start: Optional[int] = None) -> Solver:
    return SOLVERS[cfg.kind](ds, cfg, sigma_sq=sigma_sq, schedule_start=schedule_start)
