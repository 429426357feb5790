"""QAOA on a diagonal cost Hamiltonian.

The ansatz is ``U_B(beta_p) U_C(gamma_p) ... U_B(beta_1) U_C(gamma_1) |+>^n``
with ``U_C(g) = exp(-i g H_C)`` and ``U_B(b) = prod_q RX_q(2b) = exp(-i b sum X)``.
Angles live in ``gamma in [0, 2pi)`` and ``beta in [0, pi)``; the energy is
exactly periodic in each beta with period pi (the mixer picks up only a global
sign), while gamma is simply confined to its box by wrap-around.

Three evaluation paths exist and are cross-checked in the tests:

* ``fused``      compiled kernel (default, used by the optimizer);
* ``diagonal``   generic gates with a DIAG_PHASE cost layer;
* ``decomposed`` cost layer as RZ and CNOT-RZ-CNOT gates.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from . import statevector as sv
from .errors import InputError, InvariantViolation
from .qubo_ising import IsingHamiltonian, bitstring, diagonal_energies
from .seeding import substream

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
EVALS_PER_PARAM = 200
RAMP_TIME_PER_LAYER = 0.7
SIMPLEX_STEP = 0.25
DEFAULT_RESTARTS = 10
DEFAULT_SEED = 0


@dataclass(frozen=True)
class QaoaParams:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        gammas = tuple(float(g) for g in self.gammas)
        betas = tuple(float(b) for b in self.betas)
        if len(gammas) != len(betas):
            raise InputError(f"{len(gammas)} gammas but {len(betas)} betas")
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "betas", betas)

    @property
    def p(self) -> int:
        return len(self.gammas)

    def wrapped(self) -> "QaoaParams":
        return QaoaParams(np.mod(self.gammas, TWO_PI), np.mod(self.betas, math.pi))

    def padded(self, layers: int = 1) -> "QaoaParams":
        """Append ``layers`` identity layers (gamma = beta = 0)."""
        return QaoaParams(self.gammas + (0.0,) * layers, self.betas + (0.0,) * layers)

    def to_vector(self) -> np.ndarray:
        return np.array(self.gammas + self.betas, dtype=float)

    @classmethod
    def from_vector(cls, x) -> "QaoaParams":
        x = np.asarray(x, dtype=float)
        p = x.size // 2
        return cls(x[:p], x[p:])

    def to_dict(self) -> dict:
        return {"p": self.p, "gammas": list(self.gammas), "betas": list(self.betas)}


def _wrap_vector(x: np.ndarray, p: int) -> np.ndarray:
    out = np.empty_like(x)
    out[:p] = np.mod(x[:p], TWO_PI)
    out[p:] = np.mod(x[p:], math.pi)
    return out


def prepare_initial(n: int) -> sv.StateVector:
    s = sv.init_zero(n)
    for q in range(n):
        sv.apply_gate(s, sv.H(q))
    return s


def ramp_schedule(p: int, total_time: float) -> tuple[np.ndarray, np.ndarray]:
    """Trotterized linear schedule: cost weight k/p and mixer weight 1 - k/p per step.

    Returns the raw step durations ``(gamma_k, beta_k)`` for ``k = 1..p``.
    """
    if p < 1:
        raise InputError("p must be >= 1")
    if not total_time > 0:
        raise InputError("total_time must be > 0")
    dt = total_time / p
    frac = np.arange(1, p + 1) / p
    return frac * dt, (1.0 - frac) * dt


def linear_ramp_params(p: int, total_time: float | None = None) -> QaoaParams:
    """Adiabatic warm start that anneals toward the *lowest* energy.

    The uniform superposition is the top eigenstate of ``sum X``, so the mixer
    steps run backward in time (``-beta_k``, wrapped into ``[0, pi)``); forward
    steps would follow the highest energy level instead. ``total_time``
    defaults to ``0.7 * p``.
    """
    if total_time is None:
        total_time = RAMP_TIME_PER_LAYER * p
    gammas, betas = ramp_schedule(p, total_time)
    return QaoaParams(gammas, -betas).wrapped()


def cost_layer_gates(h: IsingHamiltonian, gamma: float) -> list[sv.GateOp]:
    """``exp(-i gamma H_C)`` as gates, up to the global phase from the constant."""
    gates = []
    for i in range(h.n):
        for j in range(i + 1, h.n):
            c = h.zz[i, j]
            if c != 0.0:
                # exp(-i k Z_i Z_j) = CNOT_ij RZ_j(2k) CNOT_ij
                gates += [sv.CNOT(i, j), sv.RZ(2.0 * gamma * c, j), sv.CNOT(i, j)]
    for i in range(h.n):
        if h.z[i] != 0.0:
            gates.append(sv.RZ(2.0 * gamma * h.z[i], i))
    return gates


def mixer_layer_gates(n: int, beta: float) -> list[sv.GateOp]:
    return [sv.RX(2.0 * beta, q) for q in range(n)]


def ansatz_state(
    h: IsingHamiltonian,
    params: QaoaParams,
    energies: np.ndarray | None = None,
    method: str = "fused",
) -> sv.StateVector:
    if energies is None:
        energies = diagonal_energies(h)
    if method == "fused":
        amps = _kernels.qaoa_state(
            energies, np.asarray(params.gammas, dtype=float), np.asarray(params.betas, dtype=float), h.n
        )
        return sv.StateVector(h.n, amps)
    s = prepare_initial(h.n)
    for g, b in zip(params.gammas, params.betas):
        if method == "diagonal":
            sv.apply_gate(s, sv.DIAG_PHASE(g, energies))
        elif method == "decomposed":
            sv.apply_circuit(s, cost_layer_gates(h, g))
        else:
            raise InputError(f"unknown ansatz method {method!r}")
        sv.apply_circuit(s, mixer_layer_gates(h.n, b))
    return s


def evaluate_f(h: IsingHamiltonian, params: QaoaParams, energies: np.ndarray | None = None) -> float:
    """``<psi(beta, gamma)| H_C |psi(beta, gamma)>``."""
    if energies is None:
        energies = diagonal_energies(h)
    return float(
        _kernels.qaoa_energy(
            energies, np.asarray(params.gammas, dtype=float), np.asarray(params.betas, dtype=float), h.n
        )
    )


@dataclass(frozen=True)
class RestartOutcome:
    index: int
    params: QaoaParams
    energy: float
    ground_prob: float
    evals: int
    exhausted: bool


@dataclass(frozen=True)
class QaoaResult:
    params: QaoaParams
    energy: float
    state_probs: np.ndarray
    ground_index: int
    ground_energy: float
    ground_prob: float
    evals: int
    restart_energies: tuple[float, ...]
    restart_ground_probs: tuple[float, ...]
    energy_mean2: float
    ground_prob_mean2: float
    budget_exhausted: bool

    @property
    def n(self) -> int:
        return int(self.state_probs.size).bit_length() - 1

    @property
    def argmax_index(self) -> int:
        return int(np.argmax(self.state_probs))

    @property
    def argmax_bitstring(self) -> str:
        return bitstring(self.argmax_index, self.n)

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "params": self.params.to_dict(),
            "ground_bitstring": bitstring(self.ground_index, self.n),
            "ground_energy": self.ground_energy,
            "ground_prob": self.ground_prob,
            "argmax_bitstring": self.argmax_bitstring,
            "evals": self.evals,
            "restart_energies": list(self.restart_energies),
            "restart_ground_probs": list(self.restart_ground_probs),
            "energy_mean2": self.energy_mean2,
            "ground_prob_mean2": self.ground_prob_mean2,
            "budget_exhausted": self.budget_exhausted,
        }


class _BudgetExhausted(Exception):
    pass


class _CountedObjective:
    """Wrapped-angle energy with an evaluation budget and best-so-far tracking."""

    def __init__(self, energies, n, p, budget):
        self.energies = energies
        self.n = n
        self.p = p
        self.budget = budget
        self.evals = 0
        self.best_x = None
        self.best_f = math.inf

    def __call__(self, x):
        if self.evals >= self.budget:
            raise _BudgetExhausted
        w = _wrap_vector(np.asarray(x, dtype=float), self.p)
        f = _kernels.qaoa_energy(self.energies, w[: self.p], w[self.p :], self.n)
        self.evals += 1
        if f < self.best_f:
            self.best_f = f
            self.best_x = w
        return f


def _local_search(energies, n, x0: np.ndarray, budget: int, step: float):
    """Bounded Nelder-Mead from ``x0``; returns (wrapped x, f, evals, exhausted)."""
    p = x0.size // 2
    obj = _CountedObjective(energies, n, p, budget)
    simplex = np.vstack([x0, x0 + step * np.eye(x0.size)])
    exhausted = False
    try:
        minimize(
            obj,
            x0,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "maxfev": budget + x0.size + 2,
                "maxiter": 10 * budget,
                "xatol": 1e-7,
                "fatol": 1e-10,
                "adaptive": True,
            },
        )
    except _BudgetExhausted:
        exhausted = True
    return obj.best_x, obj.best_f, obj.evals, exhausted


def _starting_points(
    p: int, restarts: int, seed: int, init: str, warm_starts: Sequence[QaoaParams], total_time
) -> list[np.ndarray]:
    starts = []
    if init == "linear_ramp":
        starts.append(linear_ramp_params(p, total_time).to_vector())
    elif init != "random":
        raise InputError(f"init must be 'random' or 'linear_ramp', got {init!r}")
    for w in warm_starts:
        if w.p != p:
            raise InputError(f"warm start has p={w.p}, expected {p}")
        starts.append(w.wrapped().to_vector())
    starts = starts[:restarts]
    for r in range(len(starts), restarts):
        rng = substream(seed, "qaoa-start", p, r)
        starts.append(np.concatenate([rng.uniform(0.0, TWO_PI, p), rng.uniform(0.0, math.pi, p)]))
    return starts


def _ground(energies: np.ndarray) -> tuple[int, float]:
    i = int(np.argmin(energies))
    return i, float(energies[i])


def optimize(
    h: IsingHamiltonian,
    p: int,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = DEFAULT_SEED,
    budget: int | None = None,
    init: str = "linear_ramp",
    warm_starts: Sequence[QaoaParams] = (),
    total_time: float | None = None,
    threads: int = 1,
    step: float = SIMPLEX_STEP,
    energies: np.ndarray | None = None,
) -> QaoaResult:
    """Multi-restart derivative-free minimization of the QAOA energy.

    Restart 0 is the linear ramp (unless ``init="random"``), followed by any
    ``warm_starts``; the remaining restarts start uniformly at random inside
    the angle box. ``budget`` caps energy evaluations per restart (default
    ``200 * 2p``); a restart that hits it keeps its best point and sets
    ``budget_exhausted``. The result is independent of ``threads``.
    """
    if p < 1:
        raise InputError("p must be >= 1")
    if restarts < 1:
        raise InputError("restarts must be >= 1")
    if budget is None:
        budget = EVALS_PER_PARAM * 2 * p
    if budget < 1:
        raise InputError("budget must be >= 1")
    if energies is None:
        energies = diagonal_energies(h)
    ground_index, ground_energy = _ground(energies)
    starts = _starting_points(p, restarts, seed, init, warm_starts, total_time)

    def run(item):
        r, x0 = item
        x, f, evals, exhausted = _local_search(energies, h.n, x0, budget, step)
        probs = sv.probabilities(sv.StateVector(h.n, _kernels.qaoa_state(energies, x[:p], x[p:], h.n)))
        return RestartOutcome(r, QaoaParams.from_vector(x), float(f), float(probs[ground_index]), evals, exhausted)

    if threads > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, enumerate(starts)))
    else:
        outcomes = [run(item) for item in enumerate(starts)]

    ranked = sorted(outcomes, key=lambda o: (o.energy, o.index))
    best = ranked[0]
    top = ranked[:2]
    state = ansatz_state(h, best.params, energies)
    probs = sv.probabilities(state)
    # the optimizer's own value, so it compares exactly with evaluate_f
    energy = best.energy
    if energy < ground_energy - 1e-9:
        raise InvariantViolation(f"QAOA energy {energy} below the ground energy {ground_energy}")
    return QaoaResult(
        params=best.params,
        energy=energy,
        state_probs=probs,
        ground_index=ground_index,
        ground_energy=ground_energy,
        ground_prob=float(probs[ground_index]),
        evals=sum(o.evals for o in outcomes),
        restart_energies=tuple(o.energy for o in outcomes),
        restart_ground_probs=tuple(o.ground_prob for o in outcomes),
        energy_mean2=float(np.mean([o.energy for o in top])),
        ground_prob_mean2=float(np.mean([o.ground_prob for o in top])),
        budget_exhausted=any(o.exhausted for o in outcomes),
    )


@dataclass(frozen=True)
class SweepRow:
    p: int
    energy_mean2: float
    ground_prob_mean2: float
    energy_best: float
    ground_prob_best: float
    evals: int
    padded_energy: float | None
    padded_delta: float | None
    result: QaoaResult

    def csv_row(self) -> list:
        return [self.p, repr(self.energy_mean2), repr(self.ground_prob_mean2),
                repr(self.energy_best), repr(self.ground_prob_best), self.evals]


SWEEP_HEADER = ["p", "energy_mean2", "ground_prob_mean2", "energy_best", "ground_prob_best", "evals"]


def layer_sweep(
    h: IsingHamiltonian,
    p_range: Iterable[int],
    restarts: int = DEFAULT_RESTARTS,
    seed: int = DEFAULT_SEED,
    budget_per_param: int = EVALS_PER_PARAM,
    warm_start: bool = True,
    threads: int = 1,
) -> list[SweepRow]:
    """Optimize at each layer count and report mean-of-two-best statistics.

    With ``warm_start`` the best parameters of the previous layer count, padded
    with identity layers, join the restart set. Padding leaves the energy
    unchanged (``padded_delta`` records the check), so the best energy at the
    new depth can never exceed the previous best.
    """
    p_values = [int(p) for p in p_range]
    if not p_values:
        raise InputError("empty layer range")
    if any(p < 1 for p in p_values):
        raise InputError("all layer counts must be >= 1")
    energies = diagonal_energies(h)
    rows: list[SweepRow] = []
    prev: QaoaParams | None = None
    for p in p_values:
        warm = []
        padded_energy = padded_delta = None
        if prev is not None and p > prev.p:
            padded = prev.padded(p - prev.p)
            padded_energy = evaluate_f(h, padded, energies)
            padded_delta = abs(padded_energy - evaluate_f(h, prev, energies))
            if warm_start:
                warm.append(padded)
        res = optimize(
            h, p, restarts=restarts, seed=seed, budget=budget_per_param * 2 * p,
            warm_starts=warm, threads=threads, energies=energies,
        )
        logger.info("p=%d energy_mean2=%.6f ground_prob_mean2=%.4f", p, res.energy_mean2, res.ground_prob_mean2)
        rows.append(SweepRow(p, res.energy_mean2, res.ground_prob_mean2, res.energy, res.ground_prob,
                             res.evals, padded_energy, padded_delta, res))
        prev = res.params
    return rows
