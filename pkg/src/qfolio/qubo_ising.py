"""Budget-constrained asset selection as a QUBO, its brute-force oracle, and the Ising map.

The cost of a selection bitstring ``x`` is::

    C(x) = b * x' S x - mu' x + alpha * (B - sum(x))**2

with ``S`` the annualized covariance or the correlation matrix. It is stored as
``x' Q x + L' x + const`` with ``Q`` symmetric; the diagonal of ``Q`` is kept
explicit rather than folded into ``L``.

Bit ordering: variable ``i`` (0-based) is bit ``n - 1 - i`` of the state index,
so the string ``"1001"`` selects the first and last asset and has index 9.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import (
    BudgetOutOfRange,
    DimensionMismatch,
    InputError,
    NonPositiveRiskAversion,
    TooManyVariables,
)
from .market_data import AssetStats

MAX_VARIABLES = 24
_CHUNK = 1 << 16

DEFAULT_RISK_AVERSION = 0.5
DEFAULT_BUDGET = 2
DEFAULT_PENALTY = 1.0
DEFAULT_MATRIX = "correlation"


def bits_of(index: int, n: int) -> np.ndarray:
    return np.array([(index >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.int8)


def index_of(x) -> int:
    x = as_bits(x)
    out = 0
    for b in x:
        out = (out << 1) | int(b)
    return out


def bitstring(index: int, n: int) -> str:
    return format(index, f"0{n}b")


def as_bits(x) -> np.ndarray:
    """Accept ``"1001"``, ``[1, 0, 0, 1]`` or an array and return an int8 array."""
    if isinstance(x, str):
        if set(x) - {"0", "1"}:
            raise InputError(f"not a bitstring: {x!r}")
        return np.array([int(c) for c in x], dtype=np.int8)
    arr = np.asarray(x)
    if arr.ndim != 1 or not np.all((arr == 0) | (arr == 1)):
        raise InputError("bitstring entries must be 0 or 1")
    return arr.astype(np.int8)


def _bit_matrix(start: int, stop: int, n: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(float)


@dataclass(frozen=True)
class QuboProblem:
    n: int
    quad: np.ndarray
    lin: np.ndarray
    const_term: float = 0.0
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        quad = np.asarray(self.quad, dtype=float)
        lin = np.asarray(self.lin, dtype=float)
        if quad.shape != (self.n, self.n) or lin.shape != (self.n,):
            raise DimensionMismatch(f"quad {quad.shape} / lin {lin.shape} do not match n={self.n}")
        if not np.allclose(quad, quad.T, rtol=0.0, atol=1e-12):
            raise InputError("quadratic matrix must be symmetric")
        labels = tuple(self.labels) or tuple(f"x{i + 1}" for i in range(self.n))
        if len(labels) != self.n:
            raise DimensionMismatch("one label per variable required")
        object.__setattr__(self, "quad", quad)
        object.__setattr__(self, "lin", lin)
        object.__setattr__(self, "const_term", float(self.const_term))
        object.__setattr__(self, "labels", labels)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "quad": self.quad.tolist(),
            "lin": self.lin.tolist(),
            "const": self.const_term,
            "labels": list(self.labels),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuboProblem":
        try:
            return cls(int(data["n"]), data["quad"], data["lin"], data.get("const", 0.0), tuple(data.get("labels", ())))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed QUBO document: {exc}") from exc


@dataclass(frozen=True)
class IsingHamiltonian:
    """``H = sum_{i<j} zz[i,j] Z_i Z_j + sum_i z[i] Z_i + k``.

    ``zz`` is symmetric with a zero diagonal and each unordered pair is counted
    once (the ``ij`` and ``ji`` terms are already aggregated). ``Z_i`` has
    eigenvalue +1 on bit 0 and -1 on bit 1.
    """

    n: int
    zz: np.ndarray
    z: np.ndarray
    k: float = 0.0
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        zz = np.asarray(self.zz, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if zz.shape != (self.n, self.n) or z.shape != (self.n,):
            raise DimensionMismatch(f"zz {zz.shape} / z {z.shape} do not match n={self.n}")
        if not np.allclose(zz, zz.T, rtol=0.0, atol=1e-12) or np.any(np.diag(zz) != 0):
            raise InputError("zz must be symmetric with zero diagonal")
        labels = tuple(self.labels)
        if labels and len(labels) != self.n:
            raise DimensionMismatch("one label per qubit required")
        object.__setattr__(self, "zz", zz)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "labels", labels)

    def to_dict(self) -> dict:
        out = {"n": self.n, "zz": self.zz.tolist(), "z": self.z.tolist(), "k": self.k}
        if self.labels:
            out["labels"] = list(self.labels)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "IsingHamiltonian":
        try:
            return cls(int(data["n"]), data["zz"], data["z"], data.get("k", 0.0), tuple(data.get("labels", ())))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed Ising document: {exc}") from exc


def build_portfolio_qubo(
    stats: AssetStats,
    b: float = DEFAULT_RISK_AVERSION,
    budget: int = DEFAULT_BUDGET,
    alpha: float = DEFAULT_PENALTY,
    matrix_kind: str = DEFAULT_MATRIX,
) -> QuboProblem:
    """Expand ``b x'Sx - mu'x + alpha (B - 1'x)^2`` into quad/lin/const form."""
    n = stats.q
    if not b > 0:
        raise NonPositiveRiskAversion(f"risk aversion b must be > 0, got {b}")
    if int(budget) != budget or not 0 <= budget <= n:
        raise BudgetOutOfRange(f"budget B={budget} outside [0, {n}]")
    if alpha < 0:
        raise InputError(f"penalty alpha must be >= 0, got {alpha}")
    sigma = stats.matrix(matrix_kind)
    mu = stats.annual_mu()
    quad = b * sigma + alpha * np.ones((n, n))
    quad = (quad + quad.T) / 2.0
    lin = -mu - 2.0 * alpha * budget * np.ones(n)
    const = alpha * budget**2
    return QuboProblem(n, quad, lin, const, stats.tickers)


def evaluate(q: QuboProblem, x) -> float:
    x = as_bits(x)
    if x.size != q.n:
        raise DimensionMismatch(f"bitstring has {x.size} bits, problem has {q.n}")
    xf = x.astype(float)
    return float(xf @ q.quad @ xf + q.lin @ xf + q.const_term)


@dataclass(frozen=True)
class BruteForceResult:
    best_index: int
    best_value: float
    table: np.ndarray
    n: int

    @property
    def best_bits(self) -> np.ndarray:
        return bits_of(self.best_index, self.n)

    @property
    def best_bitstring(self) -> str:
        return bitstring(self.best_index, self.n)


def brute_force_solve(q: QuboProblem) -> BruteForceResult:
    """Evaluate all ``2**n`` bitstrings directly from the QUBO coefficients.

    Ties go to the smallest bitstring integer (``np.argmin`` keeps the first).
    """
    if q.n > MAX_VARIABLES:
        raise TooManyVariables(f"{q.n} variables exceeds the limit of {MAX_VARIABLES}")
    dim = 1 << q.n
    table = np.empty(dim)
    for start in range(0, dim, _CHUNK):
        stop = min(start + _CHUNK, dim)
        x = _bit_matrix(start, stop, q.n)
        table[start:stop] = np.einsum("ki,ij,kj->k", x, q.quad, x) + x @ q.lin + q.const_term
    best = int(np.argmin(table))
    return BruteForceResult(best, float(table[best]), table, q.n)


def qubo_to_ising(q: QuboProblem) -> IsingHamiltonian:
    """Substitute ``x_i = (1 - z_i) / 2`` and collect Z, ZZ and constant terms."""
    quad, lin = q.quad, q.lin
    diag = np.diag(quad)
    off = quad - np.diag(diag)
    pair = off + off.T  # Q_ij + Q_ji, aggregated per unordered pair
    zz = pair / 4.0
    np.fill_diagonal(zz, 0.0)
    z = -lin / 2.0 - diag / 2.0 - pair.sum(axis=1) / 4.0
    k = q.const_term + lin.sum() / 2.0 + diag.sum() / 2.0 + off.sum() / 4.0
    return IsingHamiltonian(q.n, zz, z, float(k), q.labels)


def diagonal_energies(h: IsingHamiltonian) -> np.ndarray:
    """Energy of every basis state, indexed by the bitstring integer."""
    if h.n > MAX_VARIABLES:
        raise TooManyVariables(f"{h.n} qubits exceeds the limit of {MAX_VARIABLES}")
    return _kernels.ising_energies(np.ascontiguousarray(h.zz), np.ascontiguousarray(h.z), h.k, h.n)


def ground_state(h: IsingHamiltonian) -> tuple[int, float]:
    """Index and energy of the lowest diagonal entry (smallest index on ties)."""
    e = diagonal_energies(h)
    best = int(np.argmin(e))
    return best, float(e[best])


def example_qubo(**overrides) -> QuboProblem:
    """The four-asset instance with default b, B, alpha and the correlation matrix."""
    from .market_data import example_stats

    return build_portfolio_qubo(example_stats(), **overrides)


def load_problem(path) -> QuboProblem | IsingHamiltonian:
    """Load either a QUBO (``quad``/``lin``) or an Ising (``zz``/``z``) JSON document."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"problem file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object")
    if "zz" in data:
        return IsingHamiltonian.from_dict(data)
    if "quad" in data:
        return QuboProblem.from_dict(data)
    raise InputError(f"{path}: neither a QUBO nor an Ising document")


def as_ising(problem: QuboProblem | IsingHamiltonian) -> IsingHamiltonian:
    return problem if isinstance(problem, IsingHamiltonian) else qubo_to_ising(problem)


def selected_labels(labels: Sequence[str], index: int, n: int) -> list[str]:
    bits = bits_of(index, n)
    return [lab for lab, bit in zip(labels, bits) if bit]
