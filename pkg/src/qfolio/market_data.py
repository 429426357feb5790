"""Price ingestion and per-asset return statistics.

Prices come from a CSV file with header ``date,T1,...,Tq``. Simple (arithmetic)
returns are computed between consecutive rows; mean returns and the sample
covariance use the per-period values, and :class:`AssetStats` can scale them to
annual figures with ``period_scale`` (250 trading days by default).
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    EmptySeries,
    InputError,
    InsufficientData,
    MalformedCsv,
    NonPositivePrice,
    ZeroVarianceWarning,
)

logger = logging.getLogger(__name__)

TRADING_DAYS = 250
MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none"})


@dataclass(frozen=True)
class PriceSeries:
    tickers: tuple[str, ...]
    dates: tuple[dt.date, ...]
    prices: np.ndarray = field(repr=False)

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        if prices.ndim != 2 or prices.shape != (len(self.dates), len(self.tickers)):
            raise InputError(
                f"prices shape {prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if len(set(self.tickers)) != len(self.tickers):
            raise InputError("duplicate tickers")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise InputError("dates must be strictly increasing")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            raise InputError("prices must be finite and positive")
        prices.setflags(write=False)
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "prices", prices)


@dataclass(frozen=True)
class ReturnSeries:
    tickers: tuple[str, ...]
    returns: np.ndarray = field(repr=False)

    @property
    def num_periods(self) -> int:
        return self.returns.shape[0]


@dataclass(frozen=True)
class AssetStats:
    """Mean returns, covariance and correlation for a set of assets.

    ``mu`` and ``cov`` are per period; multiply by ``period_scale`` (see
    :meth:`annual_mu` / :meth:`annual_cov`) for annual figures. Statistics
    taken directly from annual tables are stored with ``period_scale=1``.
    """

    tickers: tuple[str, ...]
    mu: np.ndarray
    cov: np.ndarray
    corr: np.ndarray
    period_scale: int = TRADING_DAYS

    @property
    def q(self) -> int:
        return len(self.tickers)

    def annual_mu(self) -> np.ndarray:
        return self.mu * self.period_scale

    def annual_cov(self) -> np.ndarray:
        return self.cov * self.period_scale

    def annual_vol(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov) * self.period_scale)

    def matrix(self, kind: str = "covariance") -> np.ndarray:
        """Annualized covariance, or the (scale-free) correlation matrix."""
        if kind == "covariance":
            return self.annual_cov()
        if kind == "correlation":
            return self.corr.copy()
        raise InputError(f"unknown matrix kind {kind!r}")

    def to_dict(self) -> dict:
        return {
            "tickers": list(self.tickers),
            "mu": self.mu.tolist(),
            "cov": self.cov.tolist(),
            "corr": self.corr.tolist(),
            "period_scale": int(self.period_scale),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AssetStats":
        try:
            tickers = tuple(data["tickers"])
            mu = np.asarray(data["mu"], dtype=float)
            cov = np.asarray(data["cov"], dtype=float)
            corr = data.get("corr")
            corr = correlation_from_covariance(cov) if corr is None else np.asarray(corr, dtype=float)
            period_scale = int(data.get("period_scale", TRADING_DAYS))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed stats document: {exc}") from exc
        q = len(tickers)
        if mu.shape != (q,) or cov.shape != (q, q) or corr.shape != (q, q):
            raise InputError("stats arrays do not match the ticker count")
        if period_scale < 1:
            raise InputError("period_scale must be a positive integer")
        return cls(tickers, mu, cov, corr, period_scale)


def _parse_date(text: str, line: int) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise MalformedCsv(line, f"bad ISO-8601 date {text!r}") from None


def load_prices(path, on_missing: str = "drop") -> PriceSeries:
    """Read a ``date,T1,...,Tq`` CSV into a :class:`PriceSeries`.

    Rows are sorted by date. A row with a missing cell is dropped whole (all
    tickers) so the return matrix stays rectangular; pass
    ``on_missing="error"`` to raise :class:`MalformedCsv` instead.
    """
    if on_missing not in ("drop", "error"):
        raise InputError(f"on_missing must be 'drop' or 'error', got {on_missing!r}")
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"price file not found: {path}")

    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MalformedCsv(1, "empty file")
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0].lower() != "date":
            raise MalformedCsv(1, "header must be 'date,<ticker1>,...'")
        tickers = header[1:]
        if any(not t for t in tickers):
            raise MalformedCsv(1, "empty ticker name")
        if len(set(tickers)) != len(tickers):
            raise MalformedCsv(1, "duplicate ticker in header")

        rows: dict[dt.date, list[float]] = {}
        dropped = 0
        for line, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise MalformedCsv(line, f"expected {len(header)} cells, got {len(record)}")
            date = _parse_date(record[0], line)
            values = []
            missing = False
            for ticker, cell in zip(tickers, record[1:]):
                cell = cell.strip()
                if cell.lower() in MISSING_TOKENS:
                    missing = True
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    raise MalformedCsv(line, f"non-numeric price {cell!r} for {ticker}") from None
                if not math.isfinite(value):
                    raise MalformedCsv(line, f"non-finite price {cell!r} for {ticker}")
                if value <= 0:
                    raise NonPositivePrice(line, ticker, value)
                values.append(value)
            if missing:
                if on_missing == "error":
                    raise MalformedCsv(line, "missing price")
                dropped += 1
                continue
            if date in rows:
                raise MalformedCsv(line, f"duplicate date {date.isoformat()}")
            rows[date] = values

    if dropped:
        logger.warning("dropped %d row(s) with missing prices from %s", dropped, path)
    if len(rows) < 2:
        raise EmptySeries(f"{path}: need at least 2 complete rows, got {len(rows)}")
    dates = sorted(rows)
    prices = np.array([rows[d] for d in dates], dtype=float)
    return PriceSeries(tuple(tickers), tuple(dates), prices)


def compute_returns(p: PriceSeries) -> ReturnSeries:
    """Simple returns ``(P[t+1] - P[t]) / P[t]`` for each asset."""
    if p.prices.shape[0] < 2:
        raise EmptySeries("need at least 2 prices to form a return")
    prices = p.prices
    returns = (prices[1:] - prices[:-1]) / prices[:-1]
    return ReturnSeries(p.tickers, returns)


def correlation_from_covariance(cov: np.ndarray, tickers: Sequence[str] | None = None) -> np.ndarray:
    """Correlation matrix from a covariance matrix.

    Zero-variance assets get correlation 0 with every other asset and 1 on the
    diagonal (a :class:`ZeroVarianceWarning` is emitted).
    """
    cov = np.asarray(cov, dtype=float)
    var = np.diag(cov).copy()
    zero = var <= 0.0
    if np.any(zero):
        names = [tickers[i] if tickers else str(i) for i in np.flatnonzero(zero)]
        warnings.warn(f"zero variance for {', '.join(names)}", ZeroVarianceWarning, stacklevel=2)
    sd = np.sqrt(np.where(zero, 1.0, var))
    corr = cov / np.outer(sd, sd)
    corr[zero, :] = 0.0
    corr[:, zero] = 0.0
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def compute_stats(r: ReturnSeries, period_scale: int = TRADING_DAYS) -> AssetStats:
    """Per-period mean returns and sample covariance (``1/(M-1)`` normalization)."""
    if period_scale < 1:
        raise InputError("period_scale must be a positive integer")
    returns = np.asarray(r.returns, dtype=float)
    m = returns.shape[0]
    if m < 2:
        raise InsufficientData(f"need at least 2 returns per asset, got {m}")
    mu = returns.sum(axis=0) / m
    centered = returns - mu
    cov = centered.T @ centered / (m - 1)
    cov = (cov + cov.T) / 2.0
    corr = correlation_from_covariance(cov, r.tickers)
    return AssetStats(tuple(r.tickers), mu, cov, corr, int(period_scale))


def load_stats(path) -> AssetStats:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"stats file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    return AssetStats.from_dict(data)


def bundled_path(name: str) -> Path:
    """Filesystem path of a data file shipped inside the package."""
    from importlib.resources import files

    return Path(str(files("qfolio") / "data" / name))


def example_stats() -> AssetStats:
    """Annual statistics for BRKM5, ITUB4, KLBN4 and VALE3 (2016-01 to 2021-09).

    Values are the published annual mean returns and the published unit-diagonal
    matrix, stored with ``period_scale=1`` since they are already annual.
    """
    return load_stats(bundled_path("example_stats.json"))
