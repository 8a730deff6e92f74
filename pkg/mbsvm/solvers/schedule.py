import math

from mbsvm.core.errors import DomainError
from mbsvm.core.models import Schedule


def compute_schedule(n: int, b: int, lam: float, epsilon: float, beta_b_val: float) -> Schedule:
    """
    Smallest integer iteration counts for which safe mini-batch SDCA with
    averaging of alpha over [T0, T - 1] is guaranteed an expected gap <= epsilon:

        t0 = max(0, ceil((n/b) ln(2 lambda n / beta_b)))
        T0 = t0 + ceil((beta_b/b) [4/(lambda epsilon) - 2n/beta_b]_+)
        T  = T0 + max(ceil(n/b), ceil((beta_b/b) / (lambda epsilon)))
    """
    if n < 1 or not 1 <= b <= n:
        raise DomainError(f"batch size {b} outside [1, {n}]")
    if lam <= 0 or epsilon <= 0 or beta_b_val <= 0:
        raise DomainError("lambda, epsilon and beta_b must be positive")

    ratio = beta_b_val / b
    t0 = max(0, math.ceil((n / b) * math.log(2.0 * lam * n / beta_b_val)))
    T0 = t0 + math.ceil(ratio * max(0.0, 4.0 / (lam * epsilon) - 2.0 * n / beta_b_val))
    T = T0 + max(math.ceil(n / b), math.ceil(ratio / (lam * epsilon)))
    return Schedule(t0=t0, T0=T0, T=T, epsilon=epsilon)
