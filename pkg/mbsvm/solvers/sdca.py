"""Stochastic dual coordinate ascent on mini-batches.

Every variant computes, for i in the batch,

    delta_i = clip_[-alpha_i, 1 - alpha_i]( lambda n (1 - y_i <w(alpha), x_i>) / denominator )

against the same w(alpha) and differs only in the denominator and in how the
batch is committed: naive uses ||x_i||^2, safe a fixed beta, aggressive an
adaptively tuned beta in [1, beta_b] with step rejection, and serial applies
the coordinates one after another.
"""
import logging
from typing import Optional, Union

import numpy as np

from mbsvm.core.dataset import Dataset
from mbsvm.core.errors import ConfigError
from mbsvm.core.linalg import axpy, dot
from mbsvm.core.models import SolverConfig, SolverKind
from mbsvm.core.objectives import DualVector
from mbsvm.core.sampler import MiniBatch
from mbsvm.solvers.base import BatchKernel, Solver, SolverState, update_average

ArrayLike = Union[float, np.ndarray]


def sdca_coordinate_delta(alpha_i: ArrayLike, margin: ArrayLike, lam: float, n: int,
                          denominator: ArrayLike) -> ArrayLike:
    """
    Clipped coordinate step, vectorized over batch members.

    A zero denominator (an all-zero example under the serial rule) makes the
    objective linear in delta; the step then goes to the end of the box the
    numerator points at: 1 - alpha_i when 1 - margin > 0, else -alpha_i.
    """
    alpha_i = np.asarray(alpha_i, dtype=np.float64)
    numerator = lam * n * (1.0 - np.asarray(margin, dtype=np.float64))
    denominator = np.broadcast_to(np.asarray(denominator, dtype=np.float64), numerator.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = np.where(denominator > 0, numerator / denominator, np.where(numerator > 0, np.inf, -np.inf))
    delta = np.clip(raw, -alpha_i, 1.0 - alpha_i)
    return float(delta) if delta.ndim == 0 else delta


def _batch_deltas(state: SolverState, ds: Dataset, lam: float, rows: np.ndarray,
                  denominator: ArrayLike, kernel: BatchKernel) -> np.ndarray:
    batch_margins = kernel.margins(ds, rows, state.w)
    return sdca_coordinate_delta(state.alpha.values[rows], batch_margins, lam, ds.n, denominator)


def _box_step(alpha: DualVector, rows: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """The step actually realized once alpha + delta is projected exactly onto [0, 1]."""
    current = alpha.values[rows]
    return np.clip(current + delta, 0.0, 1.0) - current


def _commit(state: SolverState, ds: Dataset, lam: float, rows: np.ndarray, delta: np.ndarray,
            kernel: BatchKernel):
    """alpha_A += delta, w += (1/(lambda n)) sum_i delta_i y_i x_i"""
    moved = delta != 0.0
    if not moved.any():
        return
    rows, delta = rows[moved], delta[moved]
    state.w += kernel.aggregate(ds, rows, delta * ds.labels[rows]) / (lam * ds.n)
    state.alpha.update(rows, delta)


def sdca_naive_step(state: SolverState, ds: Dataset, cfg: SolverConfig, batch: MiniBatch,
                    kernel: Optional[BatchKernel] = None):
    """All batch coordinates take their individually optimal step at once."""
    kernel = kernel or BatchKernel()
    rows = batch.indices
    delta = _batch_deltas(state, ds, cfg.lambda_, rows, ds.sq_norms[rows], kernel)
    _commit(state, ds, cfg.lambda_, rows, _box_step(state.alpha, rows, delta), kernel)
    state.t += 1
    update_average(state)


def sdca_safe_step(state: SolverState, ds: Dataset, cfg: SolverConfig, batch: MiniBatch, beta: float,
                   kernel: Optional[BatchKernel] = None):
    """Separable step with denominator beta (beta_b, or the configured override)."""
    kernel = kernel or BatchKernel()
    rows = batch.indices
    delta = _batch_deltas(state, ds, cfg.lambda_, rows, beta, kernel)
    _commit(state, ds, cfg.lambda_, rows, _box_step(state.alpha, rows, delta), kernel)
    state.t += 1
    update_average(state)


def sdca_serial_step(state: SolverState, ds: Dataset, cfg: SolverConfig, batch: MiniBatch):
    """Exact coordinate maximization over the batch members in ascending order, one at a time."""
    lam, n = cfg.lambda_, ds.n
    alpha = state.alpha
    for i in batch.indices.tolist():
        x = ds.example(i)
        margin = x.label * dot(x, state.w)
        delta = sdca_coordinate_delta(alpha.values[i], margin, lam, n, x.sq_norm)
        rows = np.array([i])
        delta = float(_box_step(alpha, rows, np.array([delta]))[0])
        if delta != 0.0:
            axpy(delta * x.label / (lam * n), x, state.w)
            alpha.update(rows, np.array([delta]))
    state.t += 1
    update_average(state)


def sdca_aggressive_step(state: SolverState, ds: Dataset, cfg: SolverConfig, batch: MiniBatch,
                         beta_cap: float, kernel: Optional[BatchKernel] = None):
    """
    One iteration of the adaptive-beta variant.

    A tentative step with the current beta gives the curvature ratio
    rho = ||sum_i d_i y_i x_i||^2 / sum_i d_i^2 (clipped to [1, beta_cap]); the
    step is recomputed with beta = rho, beta moves to beta^gamma rho^(1-gamma),
    and the step is kept only if it strictly increases D.
    """
    kernel = kernel or BatchKernel()
    lam, n = cfg.lambda_, ds.n
    rows = batch.indices
    y = ds.labels[rows]
    batch_margins = kernel.margins(ds, rows, state.w)
    alpha_rows = state.alpha.values[rows]

    tentative = sdca_coordinate_delta(alpha_rows, batch_margins, lam, n, state.beta_t)
    zeta = float(tentative @ tentative)
    state.t += 1
    if zeta == 0.0:
        update_average(state)
        return

    spread = kernel.aggregate(ds, rows, tentative * y)
    rho = min(beta_cap, max(1.0, float(spread @ spread) / zeta))
    delta = _box_step(state.alpha, rows, sdca_coordinate_delta(alpha_rows, batch_margins, lam, n, rho))
    state.beta_t = state.beta_t ** cfg.gamma * rho ** (1.0 - cfg.gamma)

    u = kernel.aggregate(ds, rows, delta * y) / (lam * n)
    # D(alpha + delta) - D(alpha) through the maintained w
    gain = float(delta.sum()) / n - 0.5 * lam * (2.0 * float(state.w @ u) + float(u @ u))
    if gain > 0.0:
        state.w += u
        state.alpha.update(rows, delta)
    else:
        state.rejected_steps += 1
        logging.debug(f"Rejected step {state.t}: dual change {gain:.3e} with rho = {rho:.4g}")
    update_average(state)


class _DualSolver(Solver):
    def init_state(self) -> SolverState:
        state = SolverState(w=np.zeros(self.ds.dim), averager=self._new_averager(),
                            alpha=DualVector.zeros(self.ds.n))
        update_average(state)
        return state


class NaiveSdcaSolver(_DualSolver):
    kind = SolverKind.SDCA_NAIVE

    def step(self, state: SolverState, batch: MiniBatch):
        sdca_naive_step(state, self.ds, self.cfg, batch, self.kernel)


class SafeSdcaSolver(_DualSolver):
    kind = SolverKind.SDCA_SAFE

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        if self.beta is None:
            raise ConfigError("sdca_safe needs sigma^2 or a beta override")

    def step(self, state: SolverState, batch: MiniBatch):
        sdca_safe_step(state, self.ds, self.cfg, batch, self.beta, self.kernel)

    def reported_beta(self, state: SolverState) -> Optional[float]:
        return self.beta


class SerialSdcaSolver(_DualSolver):
    kind = SolverKind.SDCA_SERIAL

    def step(self, state: SolverState, batch: MiniBatch):
        sdca_serial_step(state, self.ds, self.cfg, batch)


class AggressiveSdcaSolver(_DualSolver):
    kind = SolverKind.SDCA_AGGRESSIVE

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        if self.beta is None:
            raise ConfigError("sdca_aggressive needs sigma^2 or a beta override")

    def init_state(self) -> SolverState:
        state = super().init_state()
        state.beta_t = self.beta
        return state

    def step(self, state: SolverState, batch: MiniBatch):
        sdca_aggressive_step(state, self.ds, self.cfg, batch, self.beta, self.kernel)

    def reported_beta(self, state: SolverState) -> Optional[float]:
        return state.beta_t
