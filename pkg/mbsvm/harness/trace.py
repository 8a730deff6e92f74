"""CSV traces and sweep tables.

A file starts with ``# key: value`` comment lines describing the run, followed
by a column header and the rows. Reals are written with 17 significant digits,
absent values as empty fields.
"""
import csv
import io
import os
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from mbsvm.core.errors import DatasetParseError
from mbsvm.core.models import SweepRow, TraceRecord

TRACE_COLUMNS = ("iter", "epoch_equiv", "primal", "dual", "gap", "test_error", "beta_t", "elapsed_s")
SWEEP_COLUMNS = ("solver", "b", "sigma_sq", "beta_b", "beta_b_over_b", "iterations", "reached",
                 "final_subopt", "rejected_steps")

Cell = Union[None, bool, int, float, str]


def format_float(x: Cell) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _write_table(path: str, header: Dict[str, object], columns: Sequence[str], rows: Iterable[Sequence[Cell]]):
    buffer = io.StringIO()
    for key, value in header.items():
        buffer.write(f"# {key}: {value}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_float(cell) for cell in row])

    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(buffer.getvalue())
    except OSError:
        if os.path.exists(path):
            os.remove(path)
        raise


def write_trace(path: str, header: Dict[str, object], records: Sequence[TraceRecord]):
    _write_table(path, header, TRACE_COLUMNS,
                 ([getattr(record, column) for column in TRACE_COLUMNS] for record in records))


def write_sweep(path: str, header: Dict[str, object], rows: Sequence[SweepRow]):
    _write_table(path, header, SWEEP_COLUMNS, (
        [row.solver.value, row.b, row.sigma_sq, row.beta_b, row.beta_b_over_b, row.iterations,
         row.reached, row.final_subopt, row.rejected_steps]
        for row in rows))


def _read_table(path: str) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
    header: Dict[str, str] = {}
    body: List[str] = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                header[key.strip()] = value.strip()
            else:
                body.append(line)
    return header, list(csv.DictReader(body))


def _optional(value: str) -> Optional[str]:
    return value if value != "" else None


def read_trace(path: str) -> Tuple[Dict[str, str], List[TraceRecord]]:
    """Parses a trace written by ``write_trace`` back into its header and records."""
    header, rows = _read_table(path)
    records = []
    for line_number, row in enumerate(rows, start=len(header) + 2):
        try:
            records.append(TraceRecord(**{column: _optional(row[column]) for column in TRACE_COLUMNS}))
        except (KeyError, ValueError) as e:
            raise DatasetParseError(f"bad trace row: {e}", line_number) from None
    return header, records


def read_sweep(path: str) -> Tuple[Dict[str, str], List[SweepRow]]:
    header, rows = _read_table(path)
    parsed = []
    for row in rows:
        values = {column: _optional(row[column]) for column in SWEEP_COLUMNS if column != "reached"}
        parsed.append(SweepRow(**values))
    return header, parsed
