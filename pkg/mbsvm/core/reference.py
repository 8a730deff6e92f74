import json
import logging
import threading
from typing import Dict, Optional

from packaging.version import InvalidVersion, Version

from mbsvm import __version__
from mbsvm.core.dataset import Dataset
from mbsvm.core.models import AveragingMode, ReferenceEntry, SolverConfig, SolverKind


def reference_key(ds: Dataset, lam: float) -> str:
    return f"{ds.fingerprint()}:{lam!r}"


class ReferenceCache:
    """JSON store of reference optima P* keyed by (dataset fingerprint, lambda)."""

    def __init__(self, cache_file: str):
        self.cache_path = cache_file
        self._lock = threading.Lock()
        self.entries: Dict[str, ReferenceEntry] = self._load()

    def _load(self) -> Dict[str, ReferenceEntry]:
        """Loads entries from file, or returns an empty cache."""
        try:
            with open(self.cache_path, 'r', encoding='utf-8') as f:
                data = json.load(f)
            return {key: ReferenceEntry(**value) for key, value in data.items()}
        except (FileNotFoundError, json.JSONDecodeError, TypeError, ValueError) as e:
            if not isinstance(e, FileNotFoundError):
                logging.warning(f"Ignoring unreadable reference cache {self.cache_path}: {e}")
            return {}

    def _save(self):
        with open(self.cache_path, 'w', encoding='utf-8') as f:
            json.dump({key: entry.model_dump(by_alias=True) for key, entry in self.entries.items()}, f, indent=4)

    @staticmethod
    def _compatible(entry: ReferenceEntry) -> bool:
        try:
            return Version(entry.version).major == Version(__version__).major
        except InvalidVersion:
            return False

    def get(self, ds: Dataset, lam: float) -> Optional[ReferenceEntry]:
        with self._lock:
            entry = self.entries.get(reference_key(ds, lam))
        if entry is not None and not self._compatible(entry):
            logging.info(f"Discarding reference computed by mbsvm {entry.version}")
            return None
        return entry

    def put(self, entry: ReferenceEntry):
        with self._lock:
            self.entries[entry.dataset_key] = entry
            self._save()


def compute_reference(ds: Dataset, lam: float, gap_tol: float = 1e-7, max_epochs: int = 2000,
                      seed: int = 0) -> ReferenceEntry:
    """
    Runs serial SDCA with b = 1 until the duality gap is at most ``gap_tol``.

    The certified primal value is within ``gap_tol`` of the optimum. When the
    epoch budget runs out first the entry is marked uncertified.
    """
    # solvers import the core package, so the runner is imported lazily
    from mbsvm.solvers.factory import make_solver
    from mbsvm.solvers.runner import SolverRunner

    cfg = SolverConfig(kind=SolverKind.SDCA_SERIAL, lambda_=lam, b=1, max_iters=max_epochs * ds.n,
                       averaging=AveragingMode.FINAL, seed=seed, checkpoint_every=ds.n,
                       epsilon=gap_tol, stop_on_target=True, deterministic_reduction=True)
    result = SolverRunner(make_solver(ds, cfg)).run()
    entry = ReferenceEntry(dataset_key=reference_key(ds, lam), lambda_=lam, primal=result.report.primal,
                           dual=result.report.dual, iterations=result.iterations, certified=result.reached,
                           version=__version__)
    if not entry.certified:
        logging.warning(f"Reference run stopped at gap {result.report.gap:.3e} > {gap_tol:g}; "
                        f"measuring suboptimality against the dual value")
    else:
        logging.info(f"Reference optimum P* = {entry.primal:.12g} (gap {result.report.gap:.2e})")
    return entry


def reference_optimum(ds: Dataset, lam: float, cache: Optional[ReferenceCache] = None,
                      gap_tol: float = 1e-7, max_epochs: int = 2000) -> ReferenceEntry:
    """Cached P* for (ds, lam), computing and storing it on a miss."""
    if cache is not None:
        entry = cache.get(ds, lam)
        if entry is not None:
            return entry
    entry = compute_reference(ds, lam, gap_tol, max_epochs)
    if cache is not None:
        try:
            cache.put(entry)
        except OSError as e:
            logging.warning(f"Could not write reference cache {cache.cache_path}: {e}")
    return entry
