"""CSV and time-tag text formats with a provenance header line."""

from __future__ import annotations

import io
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import __version__

__all__ = [
    "provenance_header", "format_number", "write_table", "read_table",
    "write_matrix", "read_matrix", "write_timetags", "read_timetags",
]


def provenance_header(config_hash: str, seed: Optional[int]) -> str:
    return f"# spdcsource {__version__} config_hash={config_hash} seed={seed}"


def format_number(x, digits: int = 10) -> str:
    x = float(x)
    if x == 0:
        return "0"
    return format(x, f".{digits}g")


def _write(path, text: str):
    # newline="\n" keeps files byte-identical across platforms
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def write_table(path, columns: dict, header: str, comments: Iterable[str] = ()) -> Path:
    """Columns of equal length; strings are written verbatim, numbers with 10 significant digits."""
    names = list(columns)
    data = [np.atleast_1d(np.asarray(columns[n], dtype=object)) for n in names]
    n = {len(d) for d in data}
    if len(n) > 1:
        raise ValueError("table columns must have equal length")
    buf = io.StringIO()
    buf.write(header + "\n")
    for c in comments:
        buf.write(f"# {c}\n")
    buf.write(",".join(names) + "\n")
    for row in zip(*data):
        buf.write(",".join(v if isinstance(v, str) else format_number(v) for v in row) + "\n")
    _write(path, buf.getvalue())
    return Path(path)


def read_table(path) -> dict:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    names = lines[0].split(",")
    cols = {n: [] for n in names}
    for ln in lines[1:]:
        for n, v in zip(names, ln.split(",")):
            cols[n].append(v)
    out = {}
    for n, vals in cols.items():
        try:
            out[n] = np.array([float(v) for v in vals])
        except ValueError:
            out[n] = vals
    return out


def write_matrix(path, matrix, row_axis, col_axis, header: str, row_name="signal_nm", col_name="idler_nm",
                 axis_digits: int = 6) -> Path:
    """Matrix CSV: one header row carrying the column axis, first column carrying the row axis."""
    m = np.asarray(matrix, dtype=float)
    if m.shape != (len(row_axis), len(col_axis)):
        raise ValueError("matrix shape does not match its axes")
    buf = io.StringIO()
    buf.write(header + "\n")
    buf.write(f"{row_name}\\{col_name}," + ",".join(format_number(v, axis_digits) for v in col_axis) + "\n")
    for r, row in zip(row_axis, m):
        buf.write(format_number(r, axis_digits) + "," + ",".join(format_number(v) for v in row) + "\n")
    _write(path, buf.getvalue())
    return Path(path)


def read_matrix(path):
    """Returns (row_axis, col_axis, matrix)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    cols = np.array([float(v) for v in lines[0].split(",")[1:]])
    rows, data = [], []
    for ln in lines[1:]:
        vals = [float(v) for v in ln.split(",")]
        rows.append(vals[0])
        data.append(vals[1:])
    return np.array(rows), cols, np.array(data)


def write_timetags(path, streams, header: str) -> Path:
    """One event per line, ``channel<TAB>time_ps``, merged in time order."""
    chans = np.concatenate([np.full(len(s.times), s.channel) for s in streams])
    times = np.concatenate([np.asarray(s.times) for s in streams])
    order = np.lexsort((chans, times))
    ps = np.rint(times[order] * 1e12).astype(np.int64)
    buf = io.StringIO()
    buf.write(header + "\n")
    for ch, t in zip(chans[order], ps):
        buf.write(f"{ch}\t{t}\n")
    _write(path, buf.getvalue())
    return Path(path)


def read_timetags(path) -> dict:
    """Channel -> times in seconds."""
    out: dict = {}
    for ln in Path(path).read_text().splitlines():
        if not ln or ln.startswith("#"):
            continue
        ch, t = ln.split("\t")
        out.setdefault(int(ch), []).append(int(t) * 1e-12)
    return {ch: np.array(v) for ch, v in out.items()}
