"""Synthetic datasets for the extreme cases of data spread.

orthogonal: n distinct unit basis vectors (sigma^2 = 1/n, beta_b = 1)
duplicated: n copies of one unit vector (sigma^2 = 1, beta_b = b)
gaussian:   dense unit-norm rows with a shared direction tuned to a target sigma^2
"""
import logging
from typing import Optional

import numpy as np

from mbsvm.core.dataset import Dataset, make_example
from mbsvm.core.errors import DomainError
from mbsvm.core.sampler import make_rng

SYNTHETIC_KINDS = ("orthogonal", "duplicated", "gaussian")

# relative accuracy of the bisection on the shared-direction weight
_SIGMA_RTOL = 0.01


def _exact_sigma_sq(X: np.ndarray) -> float:
    return float(np.linalg.norm(X, 2) ** 2) / X.shape[0]


def _unit_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return X / norms


def orthogonal(n: int, d: Optional[int] = None) -> Dataset:
    d = n if d is None else d
    if d < n:
        raise DomainError(f"orthogonal data needs d >= n, got d = {d} < n = {n}")
    examples = [make_example([i], [1.0], 1.0 if i % 2 == 0 else -1.0) for i in range(n)]
    return Dataset(examples, dim=d)


def duplicated(n: int, d: Optional[int] = None) -> Dataset:
    d = 1 if d is None else d
    return Dataset([make_example([0], [1.0], 1.0) for _ in range(n)], dim=d)


def gaussian(n: int, d: int, sigma_target: float, seed: int = 0, label_noise: float = 0.0) -> Dataset:
    """
    Rows x_i = (c u + g_i / sqrt(d)) / ||.||, with g_i standard normal and u a
    random unit direction; c is bisected until the exact sigma^2 of the rows is
    within 1% of ``sigma_target``. Labels follow a random linear rule, flipped
    with probability ``label_noise``.
    """
    if not 0.0 < sigma_target <= 1.0:
        raise DomainError(f"sigma_target must lie in (0, 1], got {sigma_target}")
    if not 0.0 <= label_noise < 0.5:
        raise DomainError("label_noise must lie in [0, 0.5)")
    rng = make_rng(seed, n, d)
    G = rng.standard_normal((n, d)) / np.sqrt(d)
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)

    def rows(c: float) -> np.ndarray:
        return _unit_rows(c * u + G)

    floor = _exact_sigma_sq(rows(0.0))
    if sigma_target < floor * (1.0 - _SIGMA_RTOL):
        raise DomainError(f"sigma_target {sigma_target:g} is below {floor:.4g}, the spread of "
                          f"isotropic data with n = {n}, d = {d}")

    lo, hi = 0.0, 1.0
    while _exact_sigma_sq(rows(hi)) < sigma_target and hi < 1e6:
        hi *= 2.0
    c = hi
    for _ in range(100):
        c = 0.5 * (lo + hi)
        sigma_sq = _exact_sigma_sq(rows(c))
        if abs(sigma_sq - sigma_target) <= _SIGMA_RTOL * sigma_target:
            break
        if sigma_sq < sigma_target:
            lo = c
        else:
            hi = c
    X = rows(c)

    v = rng.standard_normal(d)
    labels = np.where(G @ v >= 0.0, 1.0, -1.0)
    if label_noise > 0.0:
        flip = rng.random(n) < label_noise
        labels[flip] *= -1.0
    logging.info(f"Generated gaussian data n = {n}, d = {d} with sigma^2 = {_exact_sigma_sq(X):.4g} (c = {c:.4g})")
    return Dataset([make_example(np.arange(d), X[i], labels[i]) for i in range(n)], dim=d)


def generate_synthetic(kind: str, n: int, d: Optional[int] = None, seed: int = 0,
                       sigma_target: Optional[float] = None, label_noise: float = 0.0) -> Dataset:
    if n < 1 or (d is not None and d < 1):
        raise DomainError("n and d must be positive")
    if kind == "orthogonal":
        return orthogonal(n, d)
    if kind == "duplicated":
        return duplicated(n, d)
    if kind == "gaussian":
        if sigma_target is None:
            raise DomainError("gaussian data needs a sigma target")
        return gaussian(n, d if d is not None else 50, sigma_target, seed, label_noise)
    raise DomainError(f"unknown synthetic kind '{kind}', expected one of {', '.join(SYNTHETIC_KINDS)}")
