import abc
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from mbsvm.core.dataset import Dataset
from mbsvm.core.errors import ConfigError
from mbsvm.core.linalg import aggregate, beta_b
from mbsvm.core.models import AveragingMode, SolverConfig, SolverKind
from mbsvm.core.objectives import DualVector, margins
from mbsvm.core.sampler import MiniBatch

DECAY = 0.9


class IterateAverager:
    """
    Running average of the iterates (w and, for dual solvers, alpha).

    ``steps`` counts completed solver steps; the iterate after s steps is
    iterate s + 1 in the 1-based Pegasos numbering. Tail and schedule modes
    average the iterates with s in [start, T - 1]; tail uses start = floor(T/2),
    which is the window (floor(T/2), T] of 1-based iterates.
    """

    def __init__(self, mode: AveragingMode, budget: int, start: Optional[int] = None):
        self.mode = mode
        self.budget = budget
        if mode is AveragingMode.TAIL:
            start = budget // 2
        elif mode is AveragingMode.SCHEDULE:
            if start is None:
                raise ConfigError("schedule averaging needs the T0 of a schedule")
            if start >= budget:
                logging.warning(f"Schedule T0 = {start} is beyond the budget of {budget} iterations; "
                                f"averaging over the tail window instead")
                start = budget // 2
        self.start = start
        self.count = 0
        self.w_acc: Optional[np.ndarray] = None
        self.alpha_acc: Optional[np.ndarray] = None

    def update(self, w: np.ndarray, alpha: Optional[np.ndarray], steps: int):
        if self.mode is AveragingMode.FINAL:
            return
        if self.mode is AveragingMode.DECAYING:
            if self.w_acc is None:
                self.w_acc = w.copy()
                self.alpha_acc = None if alpha is None else alpha.copy()
            else:
                self.w_acc = DECAY * self.w_acc + (1.0 - DECAY) * w
                if alpha is not None:
                    self.alpha_acc = DECAY * self.alpha_acc + (1.0 - DECAY) * alpha
            self.count += 1
            return
        if not self.start <= steps <= self.budget - 1:
            return
        if self.w_acc is None:
            self.w_acc = np.zeros_like(w)
            self.alpha_acc = None if alpha is None else np.zeros_like(alpha)
        self.w_acc += w
        if alpha is not None:
            self.alpha_acc += alpha
        self.count += 1

    def average(self, w: np.ndarray, alpha: Optional[np.ndarray]) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """The averaged iterate; the current one while the window is still empty."""
        if self.mode is AveragingMode.FINAL or self.count == 0:
            return w.copy(), None if alpha is None else alpha.copy()
        if self.mode is AveragingMode.DECAYING:
            return self.w_acc.copy(), None if self.alpha_acc is None else self.alpha_acc.copy()
        w_bar = self.w_acc / self.count
        alpha_bar = None if self.alpha_acc is None else self.alpha_acc / self.count
        return w_bar, alpha_bar


@dataclass
class SolverState:
    w: np.ndarray
    averager: IterateAverager
    alpha: Optional[DualVector] = None
    beta_t: Optional[float] = None
    t: int = 0
    rejected_steps: int = 0
    hit_counts: Optional[np.ndarray] = None


def update_average(state: SolverState):
    """Folds the current iterate into the averaging buffer."""
    alpha = None if state.alpha is None else state.alpha.values
    state.averager.update(state.w, alpha, state.t)


class BatchKernel:
    """
    Per-batch margins and aggregations, optionally split over worker threads.

    The batch rows are cut into ``workers`` contiguous chunks. Margins are
    per-row values reassembled in chunk order, so they do not depend on the
    chunking. With ``deterministic`` set, an aggregation is a single reduction
    over the batch rows in ascending index order, so its bits are the same for
    every worker count; otherwise chunk partials are summed in completion order.
    """

    def __init__(self, workers: int = 1, deterministic: bool = False):
        self.workers = workers
        self.deterministic = deterministic
        self._executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def _chunks(self, rows: np.ndarray) -> List[np.ndarray]:
        return [chunk for chunk in np.array_split(rows, self.workers) if chunk.size]

    def margins(self, ds: Dataset, rows: np.ndarray, w: np.ndarray) -> np.ndarray:
        if self._executor is None or rows.size < 2 * self.workers:
            return margins(ds, rows, w)
        futures = [self._executor.submit(margins, ds, chunk, w) for chunk in self._chunks(rows)]
        return np.concatenate([future.result() for future in futures])

    def aggregate(self, ds: Dataset, rows: np.ndarray, coef: np.ndarray) -> np.ndarray:
        if self._executor is None or self.deterministic or rows.size < 2 * self.workers:
            return aggregate(ds, rows, coef)
        bounds = np.cumsum([0] + [c.size for c in self._chunks(rows)])
        futures = [self._executor.submit(aggregate, ds, rows[lo:hi], coef[lo:hi])
                   for lo, hi in zip(bounds[:-1], bounds[1:])]
        total = np.zeros(ds.dim)
        for future in as_completed(futures):
            total += future.result()
        return total

    def close(self):
        if self._executor is not None:
            self._executor.shutdown(wait=True)


class Solver(abc.ABC):
    """A mini-batch training algorithm bound to one dataset and one configuration."""

    kind: SolverKind

    def __init__(self, ds: Dataset, cfg: SolverConfig, sigma_sq: Optional[float] = None,
                 schedule_start: Optional[int] = None):
        self.ds = ds
        self.cfg = cfg
        self.lam = cfg.lambda_
        self.sigma_sq = sigma_sq
        self.schedule_start = schedule_start
        self.kernel = BatchKernel(cfg.workers, cfg.deterministic_reduction)
        self.beta = self._resolve_beta()

    def _resolve_beta(self) -> Optional[float]:
        """beta_override when given, else beta_b from sigma^2 (None when neither is known)."""
        if self.cfg.beta_override is not None:
            return self.cfg.beta_override
        if self.sigma_sq is None:
            return None
        return beta_b(self.ds.n, self.cfg.b, self.sigma_sq)

    def _new_averager(self) -> IterateAverager:
        return IterateAverager(self.cfg.averaging, self.cfg.max_iters, self.schedule_start)

    @abc.abstractmethod
    def init_state(self) -> SolverState:
        """Returns the starting state with the initial iterate already averaged."""
        pass

    @abc.abstractmethod
    def step(self, state: SolverState, batch: MiniBatch):
        """Performs one iteration on ``batch``, advancing ``state.t``."""
        pass

    def averaged(self, state: SolverState) -> Tuple[np.ndarray, DualVector, np.ndarray]:
        """
        The reported iterate and a feasible dual point to certify it.

        Returns (w_bar, alpha, w(alpha)). Dual solvers average alpha with the
        same weights as w, so w_bar = w(alpha_bar).
        """
        w_bar, alpha_bar = state.averager.average(state.w, state.alpha.values)
        alpha = DualVector(np.clip(alpha_bar, 0.0, 1.0))
        return w_bar, alpha, w_bar

    def reported_beta(self, state: SolverState) -> Optional[float]:
        return None

    def get_name(self) -> str:
        return self.kind.value

    def close(self):
        self.kernel.close()