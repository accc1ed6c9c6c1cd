"""Price ingestion, percent log returns and the calendar-year train/test split.

A synthetic daily price file on the NYSE trading calendar from 2010-01-04
to 2022-07-29 ships as ``sample_prices.csv`` (see :func:`sample_prices_path`).
Real adjusted-close data in the same ``date,adj_close`` layout drops in
unchanged.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

SAMPLE_FILE = "sample_prices.csv"


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class PriceSeries:
    dates: tuple
    prices: np.ndarray

    def __post_init__(self):
        if len(self.dates) != len(self.prices):
            raise ValueError("dates and prices differ in length")
        if np.any(~(np.asarray(self.prices) > 0.0)):
            raise ValueError("prices must be positive")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")

    def __len__(self):
        return len(self.prices)


@dataclass(frozen=True)
class ReturnSeries:
    dates: tuple
    returns: np.ndarray

    def __len__(self):
        return len(self.returns)


@dataclass(frozen=True)
class SplitSpec:
    s: int
    T: int

    def __post_init__(self):
        if not 1 <= self.s < self.T:
            raise ValueError(f"need 1 <= s < T, got s={self.s}, T={self.T}")

    def train(self, y):
        return np.asarray(y)[: self.s]

    def test(self, y):
        return np.asarray(y)[self.s:]


def sample_prices_path() -> Path:
    return Path(str(resources.files(__name__).joinpath(SAMPLE_FILE)))


def _parse_price(text, where):
    try:
        v = float(text)
    except ValueError:
        raise DataFormatError(f"{where}: adj_close {text!r} is not a number") from None
    if not (v > 0.0 and math.isfinite(v)):
        raise DataFormatError(f"{where}: adj_close must be positive and finite, got {text!r}")
    return v


def load_prices(path) -> PriceSeries:
    """Read a ``date,adj_close`` CSV.

    Blank lines and ``#`` comments are skipped; extra columns are ignored.
    Rows out of date order are sorted with a warning; duplicate dates and
    malformed rows raise :class:`DataFormatError` naming the line.
    """
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        lines = ((i, ln) for i, ln in enumerate(fh, start=1) if ln.strip() and not ln.lstrip().startswith("#"))
        header = None
        for lineno, line in lines:
            fields = next(csv.reader([line]))
            if header is None:
                header = [f.strip().lower() for f in fields]
                missing = {"date", "adj_close"} - set(header)
                if missing:
                    raise DataFormatError(f"{path}:{lineno}: header lacks {sorted(missing)}")
                di, pi = header.index("date"), header.index("adj_close")
                continue
            where = f"{path}:{lineno}"
            if len(fields) < len(header):
                raise DataFormatError(f"{where}: expected {len(header)} fields, got {len(fields)}")
            try:
                day = dt.date.fromisoformat(fields[di].strip())
            except ValueError:
                raise DataFormatError(f"{where}: bad date {fields[di]!r}") from None
            rows.append((day, _parse_price(fields[pi].strip(), where), lineno))
    if header is None:
        raise DataFormatError(f"{path}: empty file")
    seen = {}
    for day, _, lineno in rows:
        if day in seen:
            raise DataFormatError(f"{path}:{lineno}: duplicate date {day} (first at line {seen[day]})")
        seen[day] = lineno
    if any(b[0] < a[0] for a, b in zip(rows, rows[1:])):
        warnings.warn(f"{path}: rows not in date order; sorting", stacklevel=2)
        rows.sort(key=lambda r: r[0])
    return PriceSeries(tuple(r[0] for r in rows), np.array([r[1] for r in rows], dtype=float))


def log_returns(prices) -> ReturnSeries:
    """Continuously compounded percent returns, 100 ln(P_t / P_{t-1})."""
    if isinstance(prices, PriceSeries):
        dates, p = prices.dates[1:], prices.prices
    else:
        p = np.asarray(prices, dtype=float)
        dates = ()
    if p.shape[0] < 2:
        raise ValueError("need at least 2 prices")
    if np.any(~(p > 0.0)):
        raise ValueError("prices must be positive")
    return ReturnSeries(tuple(dates), 100.0 * np.diff(np.log(p)))


def prices_from_returns(p0, returns) -> np.ndarray:
    """Invert :func:`log_returns` given the first price."""
    r = np.asarray(returns, dtype=float)
    return float(p0) * np.exp(np.concatenate([[0.0], np.cumsum(r)]) / 100.0)


def split_by_year(series: ReturnSeries, cutoff_year: int) -> SplitSpec:
    """Training window = returns dated in or before ``cutoff_year``."""
    if not series.dates:
        raise ValueError("series carries no dates")
    T = len(series)
    s = sum(1 for d in series.dates if d.year <= cutoff_year)
    if s == 0:
        raise ValueError(f"no returns dated in or before {cutoff_year}")
    if s >= T:
        raise ValueError(f"every return falls in or before {cutoff_year}; nothing left to test on")
    return SplitSpec(s, T)


__all__ = [
    "DataFormatError",
    "PriceSeries",
    "ReturnSeries",
    "SplitSpec",
    "load_prices",
    "log_returns",
    "prices_from_returns",
    "sample_prices_path",
    "split_by_year",
]
