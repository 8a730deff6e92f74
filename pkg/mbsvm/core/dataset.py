import hashlib
import io
import logging
import math
import os
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import zstandard as zstd

from mbsvm.core.errors import DatasetParseError, DegenerateDataError, DimensionError, DomainError


class SparseExample(NamedTuple):
    """One labeled point; indices are 0-based and strictly increasing."""
    indices: np.ndarray
    values: np.ndarray
    label: float
    sq_norm: float


def make_example(indices: Sequence[int], values: Sequence[float], label: float) -> SparseExample:
    """Builds a SparseExample, dropping stored zeros and checking the sparse invariants."""
    idx = np.asarray(indices, dtype=np.int64)
    val = np.asarray(values, dtype=np.float64)
    if idx.shape != val.shape or idx.ndim != 1:
        raise DimensionError("indices and values must be 1-d sequences of equal length")
    if idx.size and (idx[0] < 0 or np.any(np.diff(idx) <= 0)):
        raise DomainError("indices must be non-negative and strictly increasing")
    if not np.all(np.isfinite(val)):
        raise DomainError("feature values must be finite")
    if label not in (-1.0, 1.0):
        raise DomainError(f"label must be -1 or +1, got {label}")
    keep = val != 0.0
    idx, val = idx[keep], val[keep]
    idx.setflags(write=False)
    val.setflags(write=False)
    return SparseExample(idx, val, float(label), float(val @ val))


class Dataset:
    """An immutable collection of labeled sparse examples.

    The examples are also held as a CSR matrix (one row per example) so that
    batch margins and aggregations are single sparse products.
    """

    def __init__(self, examples: Sequence[SparseExample], dim: Optional[int] = None, scale_factor: float = 1.0):
        self.examples: Tuple[SparseExample, ...] = tuple(examples)
        self.n = len(self.examples)
        max_index = max((int(ex.indices[-1]) for ex in self.examples if ex.indices.size), default=-1)
        if dim is None:
            dim = max(1, max_index + 1)
        if dim < 1 or dim < max_index + 1:
            raise DimensionError(f"dimension {dim} is too small for feature index {max_index}")
        if scale_factor <= 0:
            raise DomainError("scale_factor must be positive")
        self.dim = dim
        self.scale_factor = float(scale_factor)

        self.labels = np.array([ex.label for ex in self.examples], dtype=np.float64)
        self.sq_norms = np.array([ex.sq_norm for ex in self.examples], dtype=np.float64)
        self.max_norm = float(math.sqrt(self.sq_norms.max())) if self.n else 0.0
        self.labels.setflags(write=False)
        self.sq_norms.setflags(write=False)

        indptr = np.zeros(self.n + 1, dtype=np.int64)
        if self.n:
            indptr[1:] = np.cumsum([ex.indices.size for ex in self.examples])
            indices = np.concatenate([ex.indices for ex in self.examples])
            data = np.concatenate([ex.values for ex in self.examples])
        else:
            indices = np.zeros(0, dtype=np.int64)
            data = np.zeros(0, dtype=np.float64)
        self.matrix = sp.csr_matrix((data, indices, indptr), shape=(self.n, self.dim))

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)

    def example(self, i: int) -> SparseExample:
        return self.examples[i]

    def subset(self, rows: Iterable[int]) -> "Dataset":
        """Returns the examples at ``rows`` as a new Dataset of the same dimension."""
        return Dataset([self.examples[i] for i in rows], dim=self.dim, scale_factor=self.scale_factor)

    def fingerprint(self) -> str:
        """SHA256 over the numeric content, used to key cached reference optima."""
        sha256 = hashlib.sha256()
        sha256.update(np.int64(self.dim).tobytes())
        for array in (self.matrix.indptr, self.matrix.indices):
            sha256.update(np.ascontiguousarray(array, dtype=np.int64).tobytes())
        sha256.update(np.ascontiguousarray(self.matrix.data).tobytes())
        sha256.update(self.labels.tobytes())
        return sha256.hexdigest()

    def to_libsvm(self) -> str:
        lines = []
        for ex in self.examples:
            label = "+1" if ex.label > 0 else "-1"
            features = " ".join(f"{i + 1}:{float(v)!r}" for i, v in zip(ex.indices.tolist(), ex.values.tolist()))
            lines.append(f"{label} {features}".rstrip())
        return "\n".join(lines) + ("\n" if lines else "")

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, dim={self.dim}, nnz={self.nnz}, max_norm={self.max_norm:.6g})"


def _parse_label(token: str, line_number: int) -> float:
    try:
        raw = float(token)
    except ValueError:
        raise DatasetParseError(f"malformed label '{token}'", line_number) from None
    if not math.isfinite(raw):
        raise DatasetParseError(f"non-finite label '{token}'", line_number)
    # {0,1} and {1,2} style files are thresholded at zero
    return 1.0 if raw > 0 else -1.0


def _parse_feature(token: str, line_number: int) -> Tuple[int, float]:
    key, sep, value = token.partition(":")
    if not sep:
        raise DatasetParseError(f"malformed token '{token}'", line_number)
    try:
        index = int(key)
        val = float(value)
    except ValueError:
        raise DatasetParseError(f"malformed token '{token}'", line_number) from None
    if index < 1:
        raise DatasetParseError(f"feature index {index} must be 1-based", line_number)
    if not math.isfinite(val):
        raise DatasetParseError(f"non-finite value in '{token}'", line_number)
    return index - 1, val


def parse_libsvm(text_stream: Iterable[str], dim: Optional[int] = None) -> Dataset:
    """
    Reads LIBSVM/SVMlight text into a Dataset.

    Args:
        text_stream: Any iterable of lines (an open text file, ``io.StringIO``...).
        dim: Force the feature dimension, e.g. to align a test file with its train file.

    Raises:
        DatasetParseError: On a malformed token or non-increasing indices.
        DegenerateDataError: If the stream holds no examples.
    """
    examples: List[SparseExample] = []
    for line_number, raw_line in enumerate(text_stream, start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        label = _parse_label(tokens[0], line_number)
        indices: List[int] = []
        values: List[float] = []
        for token in tokens[1:]:
            index, val = _parse_feature(token, line_number)
            if indices and index <= indices[-1]:
                reason = "duplicate index" if index == indices[-1] else "indices not increasing"
                raise DatasetParseError(f"{reason} {index + 1}", line_number)
            indices.append(index)
            values.append(val)
        examples.append(make_example(indices, values, label))

    if not examples:
        raise DegenerateDataError("no examples")
    return Dataset(examples, dim=dim)


def normalize(ds: Dataset) -> Dataset:
    """
    Divides every example by the global max norm M = max_i ||x_i||.

    Uniform scaling keeps the geometry of the data (and n * sigma^2) intact.
    A dataset whose max norm is already 1 up to rounding is returned as is,
    with scale_factor 1, which makes the operation idempotent.
    """
    if ds.n == 0 or ds.max_norm == 0.0:
        raise DegenerateDataError("degenerate data")
    scale = ds.max_norm
    if math.isclose(scale, 1.0, rel_tol=1e-12, abs_tol=0.0):
        return Dataset(ds.examples, dim=ds.dim, scale_factor=1.0)

    examples = [make_example(ex.indices, ex.values / scale, ex.label) for ex in ds.examples]
    logging.info(f"Normalized {ds.n} examples by global max norm {scale:.6g}")
    return Dataset(examples, dim=ds.dim, scale_factor=scale)


def split(ds: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Seeded shuffle, then the first floor(test_fraction * n) shuffled rows become the test set."""
    if not 0.0 <= test_fraction < 1.0:
        raise DomainError("test_fraction must lie in [0, 1)")
    if test_fraction > 0 and ds.n < 2:
        raise DomainError("splitting needs at least two examples")
    n_test = int(math.floor(test_fraction * ds.n))
    order = np.random.Generator(np.random.PCG64(seed)).permutation(ds.n)
    test_rows = np.sort(order[:n_test])
    train_rows = np.sort(order[n_test:])
    return ds.subset(train_rows.tolist()), ds.subset(test_rows.tolist())


def load_dataset(path: str, dim: Optional[int] = None) -> Dataset:
    """Loads a LIBSVM file; ``*.zst`` files are decompressed on the fly."""
    logging.info(f"Loading dataset from {path}")
    with open(path, "rb") as f:
        if path.endswith(".zst"):
            try:
                with zstd.ZstdDecompressor().stream_reader(f) as reader:
                    payload = reader.read()
            except zstd.ZstdError as e:
                raise DatasetParseError(f"{path} is not a valid zstd stream: {e}") from None
        else:
            payload = f.read()
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError as e:
        line_number = payload.count(b"\n", 0, e.start) + 1
        raise DatasetParseError(f"invalid UTF-8 byte 0x{payload[e.start]:02x}", line_number) from None
    ds = parse_libsvm(io.StringIO(text), dim=dim)
    logging.info(f"Loaded {ds!r}")
    return ds


def save_dataset(ds: Dataset, path: str):
    """Writes ``ds`` in LIBSVM text format, zstd-compressed when the path ends in ``.zst``."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    payload = ds.to_libsvm().encode("utf-8")
    try:
        if path.endswith(".zst"):
            cctx = zstd.ZstdCompressor(level=9)
            with open(path, "wb") as f, cctx.stream_writer(f) as writer:
                writer.write(payload)
        else:
            with open(path, "wb") as f:
                f.write(payload)
    except (IOError, zstd.ZstdError):
        if os.path.exists(path):
            os.remove(path)
        raise
    logging.info(f"Wrote {ds.n} examples to {path}")


def read_text(text: str, dim: Optional[int] = None) -> Dataset:
    """Convenience wrapper over parse_libsvm for in-memory text."""
    return parse_libsvm(io.StringIO(text), dim=dim)

