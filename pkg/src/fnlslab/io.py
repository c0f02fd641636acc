"""Checkpoint binary format, diagnostics CSV, and run manifests.

Checkpoint layout (little endian):
  magic "FNLS1" | d:u8 | n_per_dim:u32 | L:f64 | alpha:f64 | branch:u8 |
  t:f64 | payload: n^d complex samples as interleaved f64 (re, im),
  row-major axis order.
"""

import struct

import numpy as np

from .errors import CheckpointError
from .field import ComplexField
from .grid import SpectralGrid
from .model import HARTREE, POWER, ModelParams
from .diagnostics import CSV_COLUMNS

MAGIC = b"FNLS1"
_HEADER = struct.Struct("<5sBIddBd")
_BRANCH_CODE = {POWER: 0, HARTREE: 1}
_BRANCH_NAME = {0: POWER, 1: HARTREE}


def write_checkpoint(path, params: ModelParams, field: ComplexField, t: float) -> None:
    grid = field.grid
    header = _HEADER.pack(
        MAGIC,
        grid.d,
        grid.n_per_dim,
        grid.box_half_length,
        params.alpha,
        _BRANCH_CODE[params.branch],
        t,
    )
    payload = np.ascontiguousarray(field.physical_values, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_checkpoint(path):
    """Returns (params, field, t); every structural defect raises CheckpointError."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise CheckpointError(f"checkpoint {path} truncated before the header")
    magic, d, n, box_l, alpha, branch_code, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}; not a checkpoint file")
    if branch_code not in _BRANCH_NAME:
        raise CheckpointError(f"unknown branch code {branch_code}")
    if not 2 <= d <= 5:
        raise CheckpointError(f"dimension {d} out of range")
    expected = 16 * n**d
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise CheckpointError(
            f"payload holds {len(payload)} bytes, expected {expected} (= 16 * {n}^{d})"
        )
    params = ModelParams(int(d), float(alpha), _BRANCH_NAME[branch_code])
    grid = SpectralGrid(int(d), int(n), float(box_l))
    values = np.frombuffer(payload, dtype="<c16").reshape(grid.shape).astype(np.complex128)
    return params, ComplexField(grid, values), float(t)


# ---------------------------------------------------------------------------
# CSV and manifests
# ---------------------------------------------------------------------------

def format_csv_value(x) -> str:
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


class CsvRecordSink:
    """Writes DiagnosticsRecords as CSV rows in the schema column order."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w")
        self._fh.write(",".join(CSV_COLUMNS) + "\n")

    def on_record(self, record) -> None:
        row = [format_csv_value(getattr(record, name)) for name in CSV_COLUMNS]
        self._fh.write(",".join(row) + "\n")

    def on_sync(self, t, u) -> None:
        pass

    def on_checkpoint(self, t, u) -> None:
        pass

    def close(self) -> None:
        self._fh.close()


def write_records_csv(path, records) -> None:
    sink = CsvRecordSink(path)
    try:
        for rec in records:
            sink.on_record(rec)
    finally:
        sink.close()


def write_manifest(path, entries: dict) -> None:
    """Plain `key = value` manifest; floats at full precision."""
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key} = {format_csv_value(value)}\n")


def write_plot_data(path, columns: dict, comment: str = "") -> None:
    """Gnuplot-compatible whitespace-separated data block with a # header."""
    names = list(columns)
    arrays = [np.asarray(columns[name], dtype=float) for name in names]
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write("# " + " ".join(names) + "\n")
        for row in zip(*arrays):
            fh.write(" ".join("%.17g" % v for v in row) + "\n")
