import logging
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from mbsvm import __version__
from mbsvm.config import settings
from mbsvm.core.dataset import Dataset, load_dataset, make_example, normalize, split
from mbsvm.core.errors import ConfigError, DomainError
from mbsvm.core.linalg import beta_b, exact_spectral_norm_sq, spectral_norm_sq
from mbsvm.core.models import (AveragingMode, ExperimentSpec, Schedule, SigmaSource, SolverConfig, SolverKind,
                               SpectralEstimate, SweepRow)
from mbsvm.core.reference import ReferenceCache, reference_optimum
from mbsvm.core.sampler import GENERATOR_NAME
from mbsvm.harness.trace import write_sweep, write_trace
from mbsvm.solvers.factory import make_solver
from mbsvm.solvers.runner import SolverRunner, TrainingResult
from mbsvm.solvers.schedule import compute_schedule

# sweeps on small data measure iterations-to-target at every iteration
EVERY_ITERATION_MAX_N = 5000


def _rescale(ds: Dataset, factor: float) -> Dataset:
    if factor == 1.0:
        return ds
    examples = [make_example(ex.indices, ex.values / factor, ex.label) for ex in ds.examples]
    return Dataset(examples, dim=ds.dim, scale_factor=factor)


def _with_dim(ds: Dataset, dim: int) -> Dataset:
    return ds if ds.dim == dim else Dataset(ds.examples, dim=dim, scale_factor=ds.scale_factor)


def load_experiment_data(spec: ExperimentSpec) -> Tuple[Dataset, Optional[Dataset]]:
    """
    Loads the train set and the optional test set (a file, or a seeded split of
    the train file). Both share one dimension, and the test set is scaled by
    the factor that normalized the train set.
    """
    train = load_dataset(spec.train_path)
    test: Optional[Dataset] = None
    if spec.test_path:
        test = load_dataset(spec.test_path)
    elif spec.test_fraction > 0:
        train, test = split(train, spec.test_fraction, spec.seed)
        if test.n == 0:
            test = None
    if test is not None:
        dim = max(train.dim, test.dim)
        train, test = _with_dim(train, dim), _with_dim(test, dim)
    if spec.normalize:
        train = normalize(train)
        if test is not None:
            test = _rescale(test, train.scale_factor)
    return train, test


def is_normalized(ds: Dataset) -> bool:
    return ds.max_norm <= 1.0 + 1e-9


def resolve_sigma(ds: Dataset, source: SigmaSource, seed: int = 0) -> SpectralEstimate:
    """sigma^2 from the configured source: power iteration, dense SVD, or a given value."""
    if source.mode == "override":
        return SpectralEstimate(sigma_sq=source.value, iterations_used=0, converged=True, method="override")
    if not is_normalized(ds):
        raise DomainError("sigma^2 is defined for normalized data; drop --no-normalize or pass --sigma-sq")
    if source.mode == "exact_small_n":
        return exact_spectral_norm_sq(ds)
    return spectral_norm_sq(ds, tol=settings.POWER_TOL, max_iter=settings.POWER_MAX_ITER,
                            inflation=settings.POWER_INFLATION, seed=seed)


def needs_beta(cfg: SolverConfig, auto_iters: bool = False) -> bool:
    return (cfg.kind in (SolverKind.SDCA_SAFE, SolverKind.SDCA_AGGRESSIVE)
            or cfg.averaging is AveragingMode.SCHEDULE or auto_iters)


def _beta(cfg: SolverConfig, n: int, sigma: Optional[SpectralEstimate]) -> Optional[float]:
    if cfg.beta_override is not None:
        return cfg.beta_override
    if sigma is None:
        return None
    return beta_b(n, cfg.b, sigma.sigma_sq)


def cells_dir(output_path: str) -> str:
    """Directory holding the per-cell traces of a sweep written to ``output_path``."""
    stem, _ = os.path.splitext(output_path)
    return f"{stem}_cells"


@dataclass
class SolveOutcome:
    result: TrainingResult
    header: Dict[str, object]
    sigma: Optional[SpectralEstimate]
    schedule: Optional[Schedule]


class SolveWorkflow:
    """Runs one solver configuration on one dataset and writes its trace."""

    def __init__(self, spec: ExperimentSpec, status_callback: Optional[Callable[[str], None]] = None,
                 auto_iters: bool = False):
        self.spec = spec
        self.status_callback = status_callback
        self.auto_iters = auto_iters

    def _log(self, message: str):
        logging.info(message)
        if self.status_callback:
            self.status_callback(message)

    def _sigma(self, ds: Dataset, cfg: SolverConfig) -> Optional[SpectralEstimate]:
        source = self.spec.sigma_sq_source
        required = needs_beta(cfg, self.auto_iters) and cfg.beta_override is None
        if source.mode == "override" or is_normalized(ds) or required:
            return resolve_sigma(ds, source, self.spec.seed)
        return None

    def run(self) -> SolveOutcome:
        spec = self.spec
        cfg = spec.solvers[0].model_copy(update={"epsilon": spec.epsilon_target})
        train, test = load_experiment_data(spec)
        if cfg.b > train.n:
            raise ConfigError(f"batch size {cfg.b} exceeds the {train.n} training examples")

        sigma = self._sigma(train, cfg)
        beta = _beta(cfg, train.n, sigma)
        schedule = None
        if cfg.averaging is AveragingMode.SCHEDULE or self.auto_iters:
            schedule = compute_schedule(train.n, cfg.b, cfg.lambda_, cfg.epsilon, beta)
            self._log(f"Schedule for epsilon = {cfg.epsilon:g}: t0 = {schedule.t0}, T0 = {schedule.T0}, "
                      f"T = {schedule.T}")
            if self.auto_iters:
                cfg = cfg.model_copy(update={"max_iters": schedule.T})

        solver = make_solver(train, cfg, sigma_sq=None if sigma is None else sigma.sigma_sq,
                             schedule_start=None if schedule is None else schedule.T0)
        result = SolverRunner(solver, test_ds=test, status_callback=self.status_callback).run()
        header = run_header(cfg, train, sigma, beta, schedule)
        header["iterations"] = result.iterations
        header["target_iteration"] = "" if result.target_iteration is None else result.target_iteration
        if spec.output_path:
            write_trace(spec.output_path, header, result.records)
            self._log(f"Trace written to {spec.output_path}")
        return SolveOutcome(result=result, header=header, sigma=sigma, schedule=schedule)


def run_header(cfg: SolverConfig, ds: Dataset, sigma: Optional[SpectralEstimate], beta: Optional[float],
               schedule: Optional[Schedule] = None) -> Dict[str, object]:
    header: Dict[str, object] = {
        "mbsvm_version": __version__,
        "solver": cfg.kind.value,
        "lambda": repr(cfg.lambda_),
        "b": cfg.b,
        "max_iters": cfg.max_iters,
        "averaging": cfg.averaging.value,
        "gamma": repr(cfg.gamma),
        "seed": cfg.seed,
        "generator": GENERATOR_NAME,
        "checkpoint_every": cfg.checkpoint_cadence(ds.n),
        "epsilon": repr(cfg.epsilon),
        "n": ds.n,
        "d": ds.dim,
        "nnz": ds.nnz,
        "scale_factor": repr(ds.scale_factor),
        "sigma_sq": "" if sigma is None else repr(sigma.sigma_sq),
        "sigma_method": "" if sigma is None else sigma.method,
        "beta": "" if beta is None else repr(beta),
        "beta_override": "" if cfg.beta_override is None else repr(cfg.beta_override),
        "workers": cfg.workers,
        "deterministic_reduction": cfg.deterministic_reduction,
    }
    if schedule is not None:
        header["schedule"] = f"t0={schedule.t0} T0={schedule.T0} T={schedule.T}"
    if not cfg.deterministic_reduction:
        header["created"] = datetime.now(timezone.utc).isoformat()
    return header


class SweepWorkflow:
    """
    Runs every (solver, b) cell of a sweep to a primal-suboptimality target.

    Suboptimality is measured against a reference optimum computed once per
    lambda (and cached). Cells run on a thread pool; each writes its own trace
    and the rows are merged into one table in (solver, b) order.
    """

    def __init__(self, spec: ExperimentSpec, status_callback: Optional[Callable[[str], None]] = None,
                 cache: Optional[ReferenceCache] = None, max_workers: int = 1, auto_iters: bool = False):
        if not spec.b_values:
            raise ConfigError("empty b_values")
        self.spec = spec
        self.status_callback = status_callback
        self.cache = cache
        self.max_workers = max(1, max_workers)
        self.auto_iters = auto_iters

    def _log(self, message: str):
        logging.info(message)
        if self.status_callback:
            self.status_callback(message)

    def _cell_config(self, cfg: SolverConfig, b: int, n: int) -> SolverConfig:
        update = {"b": b, "epsilon": self.spec.epsilon_target, "stop_on_target": True}
        if cfg.checkpoint_every is None:
            update["checkpoint_every"] = 1 if n <= EVERY_ITERATION_MAX_N else max(1, -(-n // b))
        return cfg.model_copy(update=update)

    def _run_cell(self, train: Dataset, test: Optional[Dataset], cfg: SolverConfig, sigma: SpectralEstimate,
                  p_star: float) -> SweepRow:
        beta = _beta(cfg, train.n, sigma)
        schedule = None
        if cfg.averaging is AveragingMode.SCHEDULE or self.auto_iters:
            schedule = compute_schedule(train.n, cfg.b, cfg.lambda_, cfg.epsilon, beta)
            if self.auto_iters:
                cfg = cfg.model_copy(update={"max_iters": schedule.T})
        solver = make_solver(train, cfg, sigma_sq=sigma.sigma_sq,
                             schedule_start=None if schedule is None else schedule.T0)
        result = SolverRunner(solver, test_ds=test, p_star=p_star).run()
        if self.spec.output_path:
            path = os.path.join(cells_dir(self.spec.output_path), f"{cfg.kind.value}_b{cfg.b}.csv")
            header = run_header(cfg, train, sigma, beta, schedule)
            header["p_star"] = repr(p_star)
            write_trace(path, header, result.records)
        self._log(f"{cfg.kind.value} b = {cfg.b}: "
                  + (f"target reached at iteration {result.target_iteration}" if result.reached else "not reached"))
        return SweepRow(solver=cfg.kind, b=cfg.b, sigma_sq=sigma.sigma_sq, beta_b=beta, beta_b_over_b=beta / cfg.b,
                        iterations=result.target_iteration, final_subopt=result.report.primal - p_star,
                        rejected_steps=result.rejected_steps)

    def run(self) -> List[SweepRow]:
        spec = self.spec
        train, test = load_experiment_data(spec)
        too_large = [b for b in spec.b_values if b > train.n]
        if too_large:
            raise ConfigError(f"batch sizes {too_large} exceed the {train.n} training examples")

        sigma = resolve_sigma(train, spec.sigma_sq_source, spec.seed)
        self._log(f"sigma^2 = {sigma.sigma_sq:.6g} ({sigma.method})")

        p_stars: Dict[float, float] = {}
        for cfg in spec.solvers:
            if cfg.lambda_ not in p_stars:
                self._log(f"Computing reference optimum for lambda = {cfg.lambda_:g}")
                entry = reference_optimum(train, cfg.lambda_, self.cache, settings.REFERENCE_GAP,
                                          settings.REFERENCE_MAX_EPOCHS)
                p_stars[cfg.lambda_] = entry.p_star

        cells = [self._cell_config(cfg, b, train.n) for cfg in spec.solvers for b in spec.b_values]
        rows: List[Tuple[int, SweepRow]] = []
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            future_to_index = {
                executor.submit(self._run_cell, train, test, cfg, sigma, p_stars[cfg.lambda_]): i
                for i, cfg in enumerate(cells)
            }
            for future in as_completed(future_to_index):
                rows.append((future_to_index[future], future.result()))
        rows.sort(key=lambda item: item[0])
        merged = [row for _, row in rows]

        if spec.output_path:
            header = {
                "mbsvm_version": __version__,
                "train": spec.train_path,
                "n": train.n,
                "d": train.dim,
                "sigma_sq": repr(sigma.sigma_sq),
                "sigma_method": sigma.method,
                "epsilon_target": repr(spec.epsilon_target),
                "p_star": " ".join(f"{lam!r}={p!r}" for lam, p in p_stars.items()),
                "generator": GENERATOR_NAME,
                "seed_derivation": "(seed, b)",
                "checkpoint_every": cells[0].checkpoint_every,
            }
            write_sweep(spec.output_path, header, merged)
            self._log(f"Sweep summary written to {spec.output_path}")
        return merged


def sigma_report(ds: Dataset, sigma: SpectralEstimate, b_values: Sequence[int]) -> str:
    """Text report of the data size, sigma^2 and beta_b for the requested batch sizes."""
    lines = [
        f"n = {ds.n}",
        f"d = {ds.dim}",
        f"nnz = {ds.nnz}",
        f"sigma_sq = {sigma.sigma_sq:.10g} ({sigma.method}, {sigma.iterations_used} iterations, "
        f"converged = {sigma.converged})",
    ]
    if b_values:
        lines.append("b,beta_b,beta_b_over_b")
        for b in b_values:
            beta = beta_b(ds.n, b, sigma.sigma_sq)
            lines.append(f"{b},{beta:.10g},{beta / b:.10g}")
    return "\n".join(lines)
