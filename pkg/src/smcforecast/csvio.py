"""CSV readers and writers for every artifact the CLI produces.

Files start with optional ``#`` comment lines (the resolved run
configuration), then a header row.  Floats are written with ``repr`` so
a file read back reproduces the in-memory values exactly.
"""
from __future__ import annotations

import csv
import datetime as dt
from pathlib import Path

import numpy as np

from .data import ReturnSeries
from .filters.core import FilterRecord

RECORD_COLUMNS = ("time_index", "log_cond_evidence", "filter_mean", "ess", "algorithm_id")
SAMPLE_COLUMNS = ("iteration", "mu", "phi", "sigma_sq", "rho", "avg_loglike", "accepted")
RETURN_COLUMNS = ("date", "return_pct")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    return str(v)


def _open_with_header(path, columns, comments):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fh = path.open("w", newline="")
    for line in comments or ():
        fh.write(line if line.startswith("#") else f"# {line}")
        fh.write("\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    return fh, w


def write_table(path, columns, rows, comments=None) -> None:
    fh, w = _open_with_header(path, columns, comments)
    with fh:
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_table(path) -> tuple[list[str], list[str], list[list[str]]]:
    """Return (comment lines, header, rows as strings)."""
    comments, rows, header = [], [], None
    with Path(path).open(newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                comments.append(line.rstrip("\n"))
                continue
            if not line.strip():
                continue
            fields = next(csv.reader([line]))
            if header is None:
                header = fields
            else:
                rows.append(fields)
    if header is None:
        raise ValueError(f"{path}: no header row")
    return comments, header, rows


def _columns(path, header, rows, wanted):
    missing = [c for c in wanted if c not in header]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    idx = [header.index(c) for c in wanted]
    return [[r[i] for r in rows] for i in idx]


class RecordWriter:
    """Appends FilterRecords to a CSV one row at a time."""

    def __init__(self, path, algorithm_id, comments=None):
        self.algorithm_id = algorithm_id
        self._fh, self._w = _open_with_header(path, RECORD_COLUMNS, comments)

    def write(self, rec: FilterRecord):
        self._w.writerow([rec.time_index, _fmt(rec.log_cond_evidence), _fmt(rec.filter_mean), _fmt(rec.ess),
                          self.algorithm_id])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_records(path) -> dict:
    _, header, rows = read_table(path)
    t, ev, mean, ess, alg = _columns(path, header, rows, RECORD_COLUMNS)
    return {
        "time_index": np.array(t, dtype=int),
        "log_cond_evidence": np.array(ev, dtype=float),
        "filter_mean": np.array(mean, dtype=float),
        "ess": np.array(ess, dtype=float),
        "algorithm_id": alg[0] if alg else Path(path).stem,
    }


def write_samples(path, output, comments=None) -> None:
    """Raw chain (no burn-in removed) with 1-based iteration numbers."""
    rows = (
        (i + 1, *theta, ll, acc)
        for i, (theta, ll, acc) in enumerate(zip(output.samples, output.avg_loglike, output.accepted))
    )
    write_table(path, SAMPLE_COLUMNS, rows, comments)


def read_samples(path) -> dict:
    _, header, rows = read_table(path)
    it, mu, phi, s2, rho, ll, acc = _columns(path, header, rows, SAMPLE_COLUMNS)
    theta = np.column_stack([np.array(c, dtype=float) for c in (mu, phi, s2, rho)]) if rows else np.empty((0, 4))
    return {
        "iteration": np.array(it, dtype=int),
        "theta": theta,
        "avg_loglike": np.array(ll, dtype=float),
        "accepted": np.array(acc, dtype=int).astype(bool),
    }


def write_returns(path, series: ReturnSeries, comments=None) -> None:
    write_table(path, RETURN_COLUMNS, zip((d.isoformat() for d in series.dates), series.returns), comments)


def read_returns(path) -> ReturnSeries:
    _, header, rows = read_table(path)
    d, r = _columns(path, header, rows, RETURN_COLUMNS)
    return ReturnSeries(tuple(dt.date.fromisoformat(x) for x in d), np.array(r, dtype=float))
