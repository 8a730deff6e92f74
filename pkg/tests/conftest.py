import numpy as np
import pytest

from mbsvm.core.dataset import Dataset, make_example
from mbsvm.core.models import AveragingMode, SolverConfig, SolverKind
from mbsvm.harness.synthetic import duplicated, gaussian, orthogonal


def random_dataset(n: int, d: int, seed: int = 0, density: float = 0.5) -> Dataset:
    """Sparse random data scaled into the unit ball, at least one entry per row."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d)) * (rng.random((n, d)) < density)
    X[np.arange(n), rng.integers(0, d, n)] = rng.standard_normal(n) + 3.0
    X /= np.linalg.norm(X, axis=1).max()
    labels = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    examples = [make_example(np.flatnonzero(X[i]), X[i][X[i] != 0.0], labels[i]) for i in range(n)]
    return Dataset(examples, dim=d)


def dense_Q(ds: Dataset) -> np.ndarray:
    X = ds.matrix.toarray() * ds.labels[:, None]
    return X @ X.T


def config(kind, lam, b=1, **kwargs) -> SolverConfig:
    kwargs.setdefault("averaging", AveragingMode.FINAL)
    return SolverConfig(kind=SolverKind(kind), lambda_=lam, b=b, **kwargs)


@pytest.fixture
def toy() -> Dataset:
    """Two identical unit examples with the same label; used with lambda = 1/2."""
    return duplicated(2)


@pytest.fixture
def small_random() -> Dataset:
    return random_dataset(12, 5, seed=3)


@pytest.fixture
def make_orthogonal():
    return orthogonal


@pytest.fixture
def make_duplicated():
    return duplicated


@pytest.fixture(scope="session")
def gaussian_500() -> Dataset:
    return gaussian(500, 50, 0.1, seed=7)
