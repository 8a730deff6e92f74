"""Primal and dual SVM objectives, the duality gap and mini-batch losses.

All dual quantities are evaluated through the maintained primal vector
w(alpha) = (1/(lambda n)) sum_i alpha_i y_i x_i, which turns alpha^T Q alpha
into lambda^2 n^2 ||w(alpha)||^2 and keeps every evaluation O(nnz).
"""
from typing import Optional, Union

import numpy as np

from mbsvm.core.dataset import Dataset
from mbsvm.core.errors import DimensionError, DomainError, FeasibilityError
from mbsvm.core.linalg import aggregate
from mbsvm.core.models import GapReport
from mbsvm.core.sampler import MiniBatch

FEASIBILITY_TOL = 1e-12


def hinge(z: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """[1 - z]_+"""
    if np.ndim(z) == 0:
        return max(0.0, 1.0 - float(z))
    return np.maximum(0.0, 1.0 - np.asarray(z))


class DualVector:
    """The dual point alpha together with a running sum of its entries."""

    def __init__(self, alpha: np.ndarray):
        self.values = np.array(alpha, dtype=np.float64)
        self.l1_sum = float(self.values.sum())

    @classmethod
    def zeros(cls, n: int) -> "DualVector":
        return cls(np.zeros(n))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def update(self, rows: np.ndarray, deltas: np.ndarray):
        self.values[rows] += deltas
        self.l1_sum += float(deltas.sum())

    def check_feasible(self, tol: float = FEASIBILITY_TOL):
        if self.n and (self.values.min() < -tol or self.values.max() > 1.0 + tol):
            raise FeasibilityError(
                f"dual vector outside [0, 1]: min {self.values.min():.3g}, max {self.values.max():.3g}")

    def copy(self) -> "DualVector":
        return DualVector(self.values)


def _check_lambda(lam: float):
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")


def _check_w(ds: Dataset, w: np.ndarray):
    if w.shape != (ds.dim,):
        raise DimensionError(f"w has shape {w.shape}, expected ({ds.dim},)")


def margins(ds: Dataset, rows: np.ndarray, w: np.ndarray) -> np.ndarray:
    """y_i <w, x_i> for the given rows."""
    if len(rows) == 0:
        return np.zeros(0)
    return ds.labels[rows] * (ds.matrix[rows] @ w)


def primal_from_dual(ds: Dataset, alpha: np.ndarray, lam: float) -> np.ndarray:
    """w(alpha), recomputed from scratch."""
    _check_lambda(lam)
    return np.asarray(ds.matrix.T @ (alpha * ds.labels)).ravel() / (lam * ds.n)


def primal_objective(ds: Dataset, w: np.ndarray, lam: float) -> float:
    """P(w) = (1/n) sum_i hinge(y_i <w, x_i>) + (lambda/2) ||w||^2"""
    _check_lambda(lam)
    _check_w(ds, w)
    loss = float(np.mean(hinge(ds.labels * (ds.matrix @ w))))
    return loss + 0.5 * lam * float(w @ w)


def dual_objective(ds: Dataset, a: DualVector, w_of_alpha: np.ndarray, lam: float) -> float:
    """D(alpha) = (1/n) sum_i alpha_i - (lambda/2) ||w(alpha)||^2"""
    _check_lambda(lam)
    _check_w(ds, w_of_alpha)
    a.check_feasible()
    return a.l1_sum / ds.n - 0.5 * lam * float(w_of_alpha @ w_of_alpha)


def classification_error(ds: Dataset, w: np.ndarray) -> Optional[float]:
    """Misclassification rate; a zero decision value counts as an error."""
    if ds.n == 0:
        return None
    _check_w(ds, w)
    decision = ds.matrix @ w
    return float(np.mean(np.sign(decision) != ds.labels))


def certificate(ds: Dataset, w_primal: np.ndarray, a: DualVector, w_of_alpha: np.ndarray,
                lam: float, test_ds: Optional[Dataset] = None) -> GapReport:
    """
    Gap between P at ``w_primal`` and D at a feasible ``a``.

    By weak duality the result bounds the primal suboptimality of ``w_primal``
    whatever dual point is supplied; it is the usual duality gap when
    ``w_primal`` is w(a).
    """
    primal = primal_objective(ds, w_primal, lam)
    dual = dual_objective(ds, a, w_of_alpha, lam)
    error = classification_error(test_ds, w_primal) if test_ds is not None else None
    return GapReport(primal=primal, dual=dual, gap=primal - dual, test_error=error)


def duality_gap(ds: Dataset, a: DualVector, w_of_alpha: np.ndarray, lam: float,
                test_ds: Optional[Dataset] = None) -> GapReport:
    """G(alpha) = P(w(alpha)) - D(alpha)"""
    return certificate(ds, w_of_alpha, a, w_of_alpha, lam, test_ds)


def minibatch_loss(ds: Dataset, batch: MiniBatch, w: np.ndarray) -> float:
    """Average hinge loss over the examples in the batch."""
    if batch.b < 1:
        raise DomainError("empty mini-batch")
    return float(np.mean(hinge(margins(ds, batch.indices, w))))


def minibatch_subgradient(ds: Dataset, batch: MiniBatch, w: np.ndarray) -> np.ndarray:
    """grad L_A(w) = -(1/b) sum_{i in A} chi_i(w) y_i x_i, chi_i = [y_i <w, x_i> < 1]"""
    rows = batch.indices
    active = rows[margins(ds, rows, w) < 1.0]
    return -aggregate(ds, active, ds.labels[active]) / batch.b


def separable_surrogate(ds: Dataset, a: DualVector, w_of_alpha: np.ndarray, delta: np.ndarray,
                        beta: float, lam: float) -> float:
    """
    H(delta, alpha): D(alpha + delta) with delta^T Q delta replaced by beta ||delta||^2.

    The cross term alpha^T Q delta equals lambda n <w(alpha), sum_i delta_i y_i x_i>.
    """
    n = ds.n
    u = aggregate(ds, np.arange(n), delta * ds.labels)
    cross = lam * n * float(w_of_alpha @ u)
    return (dual_objective(ds, a, w_of_alpha, lam)
            - cross / (lam * n * n)
            - beta * float(delta @ delta) / (2.0 * lam * n * n)
            + float(delta.sum()) / n)


def gram_matrix(ds: Dataset) -> np.ndarray:
    """Dense Q with Q_ij = y_i y_j <x_i, x_j>; small n only."""
    signed = ds.matrix.multiply(ds.labels[:, None]).tocsr()
    return np.asarray((signed @ signed.T).todense())


def explicit_dual(Q: np.ndarray, alpha: np.ndarray, lam: float) -> float:
    """D(alpha) = (1/n) sum_i alpha_i - alpha^T Q alpha / (2 lambda n^2), with Q given explicitly."""
    _check_lambda(lam)
    n = alpha.shape[0]
    return float(alpha.sum()) / n - float(alpha @ Q @ alpha) / (2.0 * lam * n * n)
