"""Monte Carlo Markowitz baseline: random long-only portfolios and the frontier.

Weights are drawn as independent uniforms normalized by their sum. Sampling is
done in fixed-size blocks, each with its own counter-based RNG stream keyed by
(seed, block index), so a report is identical no matter how many worker threads
produced it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateFit,
    DimensionMismatch,
    InputError,
    InsufficientAssets,
    NegativeVariance,
    ZeroVolatility,
)
from .market_data import AssetStats
from .seeding import substream

DEFAULT_SAMPLES = 30000
DEFAULT_RISK_FREE = (0.015, 0.028, 0.10)
ENVELOPE_BINS = 50
BLOCK_SIZE = 4096


def rf_label(rf: float) -> str:
    return f"{rf:g}"


def portfolio_return(w, mu) -> float:
    w = np.asarray(w, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if w.shape != mu.shape or w.ndim != 1:
        raise DimensionMismatch(f"weights {w.shape} vs returns {mu.shape}")
    return float(mu @ w)


def portfolio_volatility(w, sigma) -> float:
    """``sqrt(w' Sigma w)``; tiny negative round-off is clamped to zero."""
    w = np.asarray(w, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if w.ndim != 1 or sigma.shape != (w.size, w.size):
        raise DimensionMismatch(f"weights {w.shape} vs matrix {sigma.shape}")
    var = float(w @ sigma @ w)
    if var < -1e-10:
        raise NegativeVariance(f"w' Sigma w = {var:.3e} < 0; matrix is not PSD")
    return math.sqrt(max(var, 0.0))


def sharpe_ratio(ret: float, vol: float, rf: float) -> float:
    if vol <= 0:
        raise ZeroVolatility("Sharpe ratio undefined for zero volatility")
    return (ret - rf) / vol


@dataclass(frozen=True)
class Portfolio:
    weights: np.ndarray
    ret: float
    vol: float
    sharpe_by_rf: dict[float, float] = field(default_factory=dict)

    def to_dict(self, tickers: Sequence[str] | None = None) -> dict:
        names = list(tickers) if tickers is not None else [str(i) for i in range(len(self.weights))]
        return {
            "weights": {name: float(x) for name, x in zip(names, self.weights)},
            "ret": self.ret,
            "vol": self.vol,
            "sharpe": {rf_label(rf): s for rf, s in self.sharpe_by_rf.items()},
        }


@dataclass
class FrontierReport:
    """Sampled portfolios (as arrays), named picks and the frontier fit.

    ``named`` maps ``min_risk``, ``max_return`` and ``max_sharpe@<rf>`` to
    sample indices; :meth:`pick` turns one into a :class:`Portfolio`.
    """

    tickers: tuple[str, ...]
    weights: np.ndarray
    rets: np.ndarray
    vols: np.ndarray
    risk_free: tuple[float, ...]
    named: dict[str, int]
    fit_coeffs: tuple[float, float, float] | None

    def __len__(self) -> int:
        return len(self.rets)

    def sharpe(self, rf: float) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.vols > 0, (self.rets - rf) / self.vols, -np.inf)

    def portfolio(self, i: int) -> Portfolio:
        vol = float(self.vols[i])
        ret = float(self.rets[i])
        sharpe = {rf: sharpe_ratio(ret, vol, rf) for rf in self.risk_free} if vol > 0 else {}
        return Portfolio(self.weights[i].copy(), ret, vol, sharpe)

    @property
    def samples(self) -> list[Portfolio]:
        return [self.portfolio(i) for i in range(len(self))]

    def pick(self, name: str) -> Portfolio:
        return self.portfolio(self.named[name])

    def named_dict(self) -> dict:
        out = {name: self.pick(name).to_dict(self.tickers) for name in self.named}
        return {
            "tickers": list(self.tickers),
            "risk_free": [float(rf) for rf in self.risk_free],
            "named": out,
            "fit_coeffs": None if self.fit_coeffs is None else list(self.fit_coeffs),
        }


def _sample_block(seed: int, block: int, size: int, q: int) -> np.ndarray:
    raw = substream(seed, "frontier-weights", block).random((size, q))
    return raw / raw.sum(axis=1, keepdims=True)


def random_weights(q: int, n: int, seed: int, threads: int = 1) -> np.ndarray:
    """``n`` long-only weight vectors summing to one; independent of ``threads``."""
    blocks = [(b, min(BLOCK_SIZE, n - b * BLOCK_SIZE)) for b in range(math.ceil(n / BLOCK_SIZE))]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda bs: _sample_block(seed, bs[0], bs[1], q), blocks))
    else:
        parts = [_sample_block(seed, b, size, q) for b, size in blocks]
    return np.concatenate(parts, axis=0)


def upper_envelope(rets, vols, n_bins: int = ENVELOPE_BINS) -> np.ndarray:
    """Efficient points among the per-bin maxima of ``n_bins`` equal volatility bins.

    Each bin contributes its max-return sample; a bin's pick survives only if
    its return beats every lower-volatility pick (the Pareto front).
    """
    rets = np.asarray(rets, dtype=float)
    vols = np.asarray(vols, dtype=float)
    if rets.size == 0:
        return np.empty(0, dtype=int)
    lo, hi = vols.min(), vols.max()
    if hi <= lo:
        return np.array([int(np.argmax(rets))])
    bins = np.minimum(((vols - lo) / (hi - lo) * n_bins).astype(int), n_bins - 1)
    keep = []
    best = -np.inf
    for b in range(n_bins):
        members = np.flatnonzero(bins == b)
        if members.size:
            top = int(members[np.argmax(rets[members])])
            if rets[top] > best:
                keep.append(top)
                best = rets[top]
    return np.array(keep, dtype=int)


def fit_frontier(rets, vols, n_bins: int = ENVELOPE_BINS) -> tuple[float, float, float]:
    """Least-squares fit ``vol = c0 + c1*ret + c2*ret**2`` over the upper envelope.

    Returns ``(c0, c1, c2)``. Raises :class:`DegenerateFit` when the envelope
    has fewer than three distinct return values.
    """
    rets = np.asarray(rets, dtype=float)
    vols = np.asarray(vols, dtype=float)
    if rets.shape != vols.shape:
        raise DimensionMismatch("rets and vols differ in length")
    idx = upper_envelope(rets, vols, n_bins)
    if idx.size < 3 or np.unique(rets[idx]).size < 3:
        raise DegenerateFit(f"upper envelope has {idx.size} point(s); need at least 3")
    coeffs = np.polynomial.polynomial.polyfit(rets[idx], vols[idx], 2)
    return tuple(float(c) for c in coeffs)


def frontier_residual_rms(rets, vols, coeffs, n_bins: int = ENVELOPE_BINS) -> float:
    idx = upper_envelope(rets, vols, n_bins)
    pred = np.polynomial.polynomial.polyval(np.asarray(rets)[idx], coeffs)
    return float(np.sqrt(np.mean((np.asarray(vols)[idx] - pred) ** 2)))


def sample_portfolios(
    stats: AssetStats,
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
    risk_free: Sequence[float] = DEFAULT_RISK_FREE,
    threads: int = 1,
) -> FrontierReport:
    """Sample ``n`` random portfolios on annualized stats and pick named ones."""
    if n < 1:
        raise InputError("need at least one sample")
    if stats.q < 2:
        raise InsufficientAssets("portfolio sampling needs at least 2 assets")
    mu = stats.annual_mu()
    sigma = stats.annual_cov()
    w = random_weights(stats.q, n, seed, threads)
    rets = w @ mu
    var = np.einsum("ij,jk,ik->i", w, sigma, w)
    if var.min() < -1e-10:
        raise NegativeVariance("covariance matrix is not PSD")
    vols = np.sqrt(np.maximum(var, 0.0))

    risk_free = tuple(float(rf) for rf in risk_free)
    named = {"min_risk": int(np.argmin(vols)), "max_return": int(np.argmax(rets))}
    report = FrontierReport(stats.tickers, w, rets, vols, risk_free, named, None)
    for rf in risk_free:
        named[f"max_sharpe@{rf_label(rf)}"] = int(np.argmax(report.sharpe(rf)))
    try:
        report.fit_coeffs = fit_frontier(rets, vols)
    except DegenerateFit:
        report.fit_coeffs = None
    return report
