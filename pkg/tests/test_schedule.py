import pytest

from mbsvm.core.errors import DomainError
from mbsvm.solvers.schedule import compute_schedule


@pytest.mark.parametrize("n, b, lam, epsilon, beta, expected", [
    # t0 > 0: (n/b) ln(2 lambda n / beta) = 100 ln 8 = 207.94
    (1000, 10, 0.01, 0.003, 2.5, (208, 33342, 41676)),
    # t0 = 0: 2 lambda n / beta < 1
    (1000, 10, 1e-4, 3e-3, 1.3, (0, 1733134, 2166468)),
    # both bracketed terms clamp; T - T0 = ceil(n/b)
    (50, 5, 0.1, 10.0, 2.2, (16, 16, 26)),
    # beta_b = b
    (200, 4, 0.013, 0.007, 4.0, (14, 43871, 54861)),
    # b = n
    (8, 8, 0.5, 0.06, 2.9, (2, 49, 62)),
])
def test_schedule_values(n, b, lam, epsilon, beta, expected):
    schedule = compute_schedule(n, b, lam, epsilon, beta)
    assert (schedule.t0, schedule.T0, schedule.T) == expected
    assert schedule.epsilon == epsilon


def test_worst_case_beta_removes_batch_dependence_of_epsilon_terms():
    # with beta_b = b the epsilon-driven lengths are (4/(lambda eps) - 2n/b) and 1/(lambda eps)
    small = compute_schedule(1000, 2, 0.0007, 0.03, 2.0)
    large = compute_schedule(1000, 8, 0.0007, 0.03, 8.0)
    # 1 / (0.0007 * 0.03) = 47619.05
    assert (small.T - small.T0) == (large.T - large.T0) == 47620
    assert small.t0 == large.t0 == 0


def test_schedule_domain():
    with pytest.raises(DomainError):
        compute_schedule(10, 11, 0.1, 0.01, 1.0)
    with pytest.raises(DomainError):
        compute_schedule(10, 2, 0.1, 0.0, 1.0)
