from typing import Optional, Tuple

import numpy as np

from mbsvm.core.dataset import Dataset
from mbsvm.core.models import SolverConfig, SolverKind
from mbsvm.core.objectives import DualVector, primal_from_dual
from mbsvm.core.sampler import MiniBatch
from mbsvm.solvers.base import BatchKernel, Solver, SolverState, update_average


def pegasos_step(state: SolverState, ds: Dataset, cfg: SolverConfig, batch: MiniBatch,
                 kernel: Optional[BatchKernel] = None):
    """
    One mini-batch Pegasos update with eta_t = 1/(lambda t):

        w <- (1 - eta_t lambda) w + (eta_t / b) sum_{i in A+} y_i x_i

    A+ holds the batch members with margin < 1, all measured against the
    iterate before the update.
    """
    kernel = kernel or BatchKernel()
    lam = cfg.lambda_
    t = state.t + 1
    eta = 1.0 / (lam * t)
    rows = batch.indices
    active = rows[kernel.margins(ds, rows, state.w) < 1.0]

    state.w *= 1.0 - eta * lam
    if active.size:
        state.w += (eta / batch.b) * kernel.aggregate(ds, active, ds.labels[active])
        state.hit_counts[active] += 1
    state.t = t
    update_average(state)


class PegasosSolver(Solver):
    """
    Primal stochastic subgradient descent on mini-batches.

    Unrolling the update gives w^(t+1) = (1/(lambda t b)) sum_i c_i y_i x_i, with
    c_i the number of times example i was a margin violator. The implied dual
    point alpha_i = n c_i / (t b), clipped to [0, 1], is feasible and certifies
    the reported iterate.
    """

    kind = SolverKind.PEGASOS

    def init_state(self) -> SolverState:
        state = SolverState(w=np.zeros(self.ds.dim), averager=self._new_averager(),
                            hit_counts=np.zeros(self.ds.n))
        update_average(state)
        return state

    def step(self, state: SolverState, batch: MiniBatch):
        pegasos_step(state, self.ds, self.cfg, batch, self.kernel)

    def averaged(self, state: SolverState) -> Tuple[np.ndarray, DualVector, np.ndarray]:
        w_bar, _ = state.averager.average(state.w, None)
        if state.t == 0:
            alpha = DualVector.zeros(self.ds.n)
        else:
            scale = self.ds.n / (state.t * self.cfg.b)
            alpha = DualVector(np.clip(state.hit_counts * scale, 0.0, 1.0))
        return w_bar, alpha, primal_from_dual(self.ds, alpha.values, self.lam)
