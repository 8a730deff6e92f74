import itertools

import numpy as np
import pytest

from conftest import dense_Q, random_dataset
from mbsvm.core.errors import DimensionError, DomainError, FeasibilityError
from mbsvm.core.objectives import (DualVector, certificate, classification_error, dual_objective, duality_gap,
                                   explicit_dual, gram_matrix, hinge, minibatch_loss, minibatch_subgradient,
                                   primal_from_dual, primal_objective, separable_surrogate)
from mbsvm.core.sampler import MiniBatch


def test_hinge():
    assert hinge(2.0) == 0.0
    assert hinge(0.25) == 0.75
    np.testing.assert_array_equal(hinge(np.array([-1.0, 1.0, 3.0])), [2.0, 0.0, 0.0])


def test_toy_objectives(toy):
    lam = 0.5
    zero = DualVector.zeros(2)
    assert primal_objective(toy, np.zeros(1), lam) == 1.0
    assert dual_objective(toy, zero, np.zeros(1), lam) == 0.0

    optimum = DualVector(np.array([0.5, 0.5]))
    w = primal_from_dual(toy, optimum.values, lam)
    np.testing.assert_allclose(w, [1.0])
    report = duality_gap(toy, optimum, w, lam)
    assert report.dual == pytest.approx(0.25)
    assert report.primal == pytest.approx(0.25)
    assert abs(report.gap) <= 1e-12


def test_toy_naive_endpoints_have_zero_dual(toy):
    lam = 0.5
    ones = DualVector(np.ones(2))
    w = primal_from_dual(toy, ones.values, lam)
    np.testing.assert_allclose(w, [2.0])
    assert dual_objective(toy, ones, w, lam) == pytest.approx(0.0)
    assert primal_objective(toy, w, lam) == pytest.approx(1.0)


def test_dual_rejects_infeasible_alpha(toy):
    with pytest.raises(FeasibilityError):
        dual_objective(toy, DualVector(np.array([1.5, 0.0])), np.zeros(1), 0.5)


def test_lambda_and_shape_checks(toy):
    with pytest.raises(DomainError):
        primal_objective(toy, np.zeros(1), 0.0)
    with pytest.raises(DimensionError):
        primal_objective(toy, np.zeros(3), 0.5)


def test_weak_duality_on_random_points():
    ds = random_dataset(15, 4, seed=1)
    lam = 0.05
    rng = np.random.default_rng(2)
    for _ in range(50):
        alpha = DualVector(rng.random(ds.n))
        w_alpha = primal_from_dual(ds, alpha.values, lam)
        w_any = rng.standard_normal(ds.dim)
        assert duality_gap(ds, alpha, w_alpha, lam).gap >= -1e-12
        assert certificate(ds, w_any, alpha, w_alpha, lam).gap >= -1e-12


def test_maintained_form_matches_explicit_dual():
    ds = random_dataset(10, 4, seed=4)
    lam = 0.1
    Q = gram_matrix(ds)
    np.testing.assert_allclose(Q, dense_Q(ds), atol=1e-14)
    alpha = DualVector(np.random.default_rng(0).random(ds.n))
    w = primal_from_dual(ds, alpha.values, lam)
    assert dual_objective(ds, alpha, w, lam) == pytest.approx(explicit_dual(Q, alpha.values, lam), rel=1e-12)


def test_dual_vector_tracks_its_sum():
    alpha = DualVector.zeros(4)
    alpha.update(np.array([0, 2]), np.array([0.25, 0.5]))
    alpha.update(np.array([2]), np.array([-0.5]))
    assert alpha.l1_sum == pytest.approx(alpha.values.sum())
    copy = alpha.copy()
    copy.update(np.array([1]), np.array([1.0]))
    assert alpha.values[1] == 0.0


def test_classification_error():
    ds = random_dataset(8, 3, seed=5)
    w = np.zeros(ds.dim)
    assert classification_error(ds, w) == 1.0
    w_alpha = primal_from_dual(ds, np.ones(ds.n), 1.0)
    assert 0.0 <= classification_error(ds, w_alpha) <= 1.0
    assert classification_error(ds.subset([]), w) is None


def test_minibatch_loss_and_subgradient(toy):
    batch = MiniBatch(np.array([0, 1]), 2)
    assert minibatch_loss(toy, batch, np.zeros(1)) == 1.0
    np.testing.assert_allclose(minibatch_subgradient(toy, batch, np.zeros(1)), [-1.0])
    # margin 2 everywhere: no violators
    np.testing.assert_allclose(minibatch_subgradient(toy, batch, np.array([2.0])), [0.0])


def test_separable_surrogate_matches_dual_when_beta_is_exact(toy):
    # with a single coordinate and beta = ||x||^2 the surrogate is exact
    lam = 0.5
    alpha = DualVector(np.array([0.2, 0.3]))
    w = primal_from_dual(toy, alpha.values, lam)
    delta = np.array([0.4, 0.0])
    moved = DualVector(alpha.values + delta)
    exact = dual_objective(toy, moved, primal_from_dual(toy, moved.values, lam), lam)
    assert separable_surrogate(toy, alpha, w, delta, 1.0, lam) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_expected_dual_after_subset_step_dominates_surrogate(n):
    """Averaged over every b-subset, D(alpha + delta_[A]) >= (1 - b/n) D(alpha) + (b/n) H(delta, alpha)."""
    from mbsvm.core.linalg import beta_b, exact_spectral_norm_sq

    rng = np.random.default_rng(100 + n)
    for instance in range(100):
        ds = random_dataset(n, 3, seed=1000 * n + instance)
        lam = float(rng.uniform(0.05, 1.0))
        sigma_sq = exact_spectral_norm_sq(ds).sigma_sq
        alpha = DualVector(rng.random(n))
        w = primal_from_dual(ds, alpha.values, lam)
        d_alpha = dual_objective(ds, alpha, w, lam)
        # feasible box steps keep alpha + delta_[A] in [0, 1]
        delta = rng.uniform(-alpha.values, 1.0 - alpha.values)
        for b in range(1, n + 1):
            beta = beta_b(n, b, sigma_sq)
            total = 0.0
            subsets = list(itertools.combinations(range(n), b))
            for A in subsets:
                step = np.zeros(n)
                step[list(A)] = delta[list(A)]
                moved = DualVector(alpha.values + step)
                total += dual_objective(ds, moved, primal_from_dual(ds, moved.values, lam), lam)
            average = total / len(subsets)
            bound = (1 - b / n) * d_alpha + (b / n) * separable_surrogate(ds, alpha, w, delta, beta, lam)
            assert average >= bound - 1e-10
