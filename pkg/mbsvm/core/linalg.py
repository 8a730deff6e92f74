import logging
from typing import Sequence, Tuple

import numpy as np

from mbsvm.core.dataset import Dataset, SparseExample
from mbsvm.core.errors import DegenerateDataError, DimensionError, DomainError
from mbsvm.core.models import SpectralEstimate


def _check_dim(x: SparseExample, w: np.ndarray):
    if x.indices.size and x.indices[-1] >= w.shape[0]:
        raise DimensionError(f"feature index {int(x.indices[-1])} out of range for dimension {w.shape[0]}")


def dot(x: SparseExample, w: np.ndarray) -> float:
    """<w, x> for a sparse x."""
    _check_dim(x, w)
    return float(np.dot(x.values, w[x.indices]))


def axpy(a: float, x: SparseExample, w: np.ndarray):
    """w += a * x in place; components outside x's support are untouched."""
    _check_dim(x, w)
    if a == 0.0:
        return
    w[x.indices] += a * x.values


def aggregate(ds: Dataset, rows: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """Dense sum_k coef[k] * x_{rows[k]}."""
    if len(rows) == 0:
        return np.zeros(ds.dim)
    return np.asarray(ds.matrix[rows].T @ coef).ravel()


def subset_quadratic(ds: Dataset, delta: Sequence[Tuple[int, float]]) -> float:
    """
    delta_[A]^T Q delta_[A] computed as ||sum_i delta_i y_i x_i||^2, never forming Q.

    Args:
        delta: (example index, coefficient) pairs with distinct indices.
    """
    if not delta:
        return 0.0
    rows = np.array([i for i, _ in delta], dtype=np.int64)
    if np.unique(rows).size != rows.size:
        raise DomainError("subset_quadratic requires distinct indices")
    if rows.min() < 0 or rows.max() >= ds.n:
        raise DimensionError(f"example index out of range [0, {ds.n})")
    coef = np.array([c for _, c in delta], dtype=np.float64) * ds.labels[rows]
    u = aggregate(ds, rows, coef)
    return float(u @ u)


def expected_subset_quadratic(Q: np.ndarray, v: np.ndarray, b: int) -> float:
    """
    Closed form of E_A[v_[A]^T Q v_[A]] over uniformly random b-subsets A:

        (b/n) * [(1 - (b-1)/(n-1)) * sum_i Q_ii v_i^2 + ((b-1)/(n-1)) * v^T Q v]
    """
    n = v.shape[0]
    if not 1 <= b <= n:
        raise DomainError(f"batch size {b} outside [1, {n}]")
    mix = (b - 1) / (n - 1) if n > 1 else 0.0
    diagonal = float(np.sum(np.diag(Q) * v * v))
    full = float(v @ Q @ v)
    return (b / n) * ((1.0 - mix) * diagonal + mix * full)


def spectral_norm_sq(ds: Dataset, tol: float = 1e-6, max_iter: int = 1000,
                     inflation: float = 1.02, seed: int = 0) -> SpectralEstimate:
    """
    Upper estimate of sigma^2 = ||X||^2 / n by power iteration.

    The operator v -> X^T (X v) is applied as two sparse passes. The returned
    value is ``inflation`` times the Rayleigh estimate over n, clamped to the
    range [1/n, 1] that normalized data always satisfies.
    """
    if tol <= 0 or max_iter < 1 or inflation < 1:
        raise DomainError("power iteration needs tol > 0, max_iter >= 1 and inflation >= 1")
    if ds.n == 0 or ds.max_norm == 0.0:
        raise DegenerateDataError("degenerate data")
    if ds.max_norm > 1 + 1e-9:
        raise DomainError(f"spectral estimate requires normalized data, max norm is {ds.max_norm:.6g}")

    X = ds.matrix
    rng = np.random.Generator(np.random.PCG64(seed))
    v = rng.standard_normal(ds.dim)
    v /= np.linalg.norm(v)

    rayleigh = 0.0
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        Xv = X @ v
        previous = rayleigh
        rayleigh = float(Xv @ Xv)
        y = X.T @ Xv
        y_norm = np.linalg.norm(y)
        if y_norm == 0.0:
            # start vector orthogonal to the row space; restart from a fresh direction
            v = rng.standard_normal(ds.dim)
            v /= np.linalg.norm(v)
            continue
        v = y / y_norm
        if iterations > 1 and abs(rayleigh - previous) < tol * rayleigh:
            converged = True
            break

    if not converged:
        logging.warning(f"Power iteration did not converge in {max_iter} iterations; using inflated estimate")

    sigma_sq = min(1.0, max(1.0 / ds.n, inflation * rayleigh / ds.n))
    logging.info(f"Spectral estimate sigma^2 = {sigma_sq:.6g} after {iterations} iterations (converged={converged})")
    return SpectralEstimate(sigma_sq=sigma_sq, iterations_used=iterations, converged=converged,
                            inflation=inflation, lambda_max=rayleigh)


def exact_spectral_norm_sq(ds: Dataset, max_entries: int = 4_000_000) -> SpectralEstimate:
    """sigma^2 from a dense SVD; only for desk-sized data."""
    if ds.n * ds.dim > max_entries:
        raise DomainError(f"exact spectral norm limited to {max_entries} dense entries")
    if ds.n == 0 or ds.max_norm == 0.0:
        raise DegenerateDataError("degenerate data")
    lambda_max = float(np.linalg.norm(ds.matrix.toarray(), 2) ** 2)
    sigma_sq = min(1.0, max(1.0 / ds.n, lambda_max / ds.n))
    return SpectralEstimate(sigma_sq=sigma_sq, iterations_used=0, converged=True,
                            inflation=1.0, lambda_max=lambda_max, method="exact")


def beta_b(n: int, b: int, sigma_sq: float) -> float:
    """beta_b = 1 + (b - 1)(n sigma^2 - 1)/(n - 1), the safe separable step denominator."""
    if not 1 <= b <= n:
        raise DomainError(f"batch size {b} outside [1, {n}]")
    if n == 1:
        return 1.0
    if sigma_sq < 1.0 / n - 1e-9 or sigma_sq > 1.0 + 1e-9:
        raise DomainError(f"sigma^2 = {sigma_sq} outside [1/n, 1]")
    return 1.0 + (b - 1) * (n * sigma_sq - 1.0) / (n - 1)
