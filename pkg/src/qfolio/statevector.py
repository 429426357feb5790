"""Dense state-vector simulator.

Amplitudes are stored with qubit 0 as the most significant bit of the index,
so the basis state ``|q0 q1 ... q_{n-1}>`` sits at ``int("q0q1...", 2)``.

Gate conventions (half-angle form of ``exp(-i theta n.sigma / 2)``)::

    RX(t)      = exp(-i t X / 2)
    RZ(t)      = exp(-i t Z / 2)
    ZZ(t, i, j) = exp(-i (t / 2) Z_i Z_j)
    DIAG_PHASE(g, E): amp[idx] *= exp(-i g E[idx])

Gates act in place on ``StateVector.amps``; :func:`apply_gate` also returns
the state for chaining.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, InputError, SelfControlledGate, TooManyQubits

MAX_QUBITS = 24

_SQRT1_2 = 1.0 / np.sqrt(2.0)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT1_2
CNOT_MATRIX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def rotation(theta: float, axis) -> np.ndarray:
    """``cos(theta/2) I - i sin(theta/2) (n . sigma)`` for a unit axis ``n``."""
    nx, ny, nz = np.asarray(axis, dtype=float) / np.linalg.norm(axis)
    ns = nx * PAULI_X + ny * PAULI_Y + nz * PAULI_Z
    return np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * ns


def rx_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]])


@dataclass
class StateVector:
    n: int
    amps: np.ndarray = field(repr=False)

    def copy(self) -> "StateVector":
        return StateVector(self.n, self.amps.copy())

    def norm_squared(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def overlap(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amps, other.amps))


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise TooManyQubits(f"qubit count {n} outside [1, {MAX_QUBITS}]")


def init_zero(n: int) -> StateVector:
    _check_n(n)
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1.0
    return StateVector(n, amps)


def basis_state(n: int, bits) -> StateVector:
    """``|bits>`` where ``bits`` is a string like ``"1001"`` or an integer index."""
    _check_n(n)
    index = int(bits, 2) if isinstance(bits, str) else int(bits)
    if not 0 <= index < (1 << n):
        raise IndexOutOfRange(f"basis index {index} out of range for {n} qubits")
    amps = np.zeros(1 << n, dtype=complex)
    amps[index] = 1.0
    return StateVector(n, amps)


@dataclass(frozen=True)
class GateOp:
    kind: str
    targets: tuple[int, ...]
    angle: float | None = None
    energies: np.ndarray | None = field(default=None, repr=False, compare=False)

    def adjoint(self) -> "GateOp":
        if self.kind in ("X", "Y", "Z", "H", "CNOT"):
            return self
        return GateOp(self.kind, self.targets, -self.angle, self.energies)

    def matrix(self) -> np.ndarray:
        """Local matrix for one- and two-qubit gates (not for DIAG_PHASE)."""
        if self.kind in _FIXED_1Q:
            return _FIXED_1Q[self.kind]
        if self.kind == "RX":
            return rx_matrix(self.angle)
        if self.kind == "RZ":
            return rz_matrix(self.angle)
        if self.kind == "CNOT":
            return CNOT_MATRIX
        if self.kind == "ZZ":
            ph = np.exp(-0.5j * self.angle * np.array([1, -1, -1, 1]))
            return np.diag(ph)
        raise InputError(f"{self.kind} has no local matrix")


_FIXED_1Q = {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z, "H": HADAMARD}


def X(q: int) -> GateOp:
    return GateOp("X", (q,))


def Y(q: int) -> GateOp:
    return GateOp("Y", (q,))


def Z(q: int) -> GateOp:
    return GateOp("Z", (q,))


def H(q: int) -> GateOp:
    return GateOp("H", (q,))


def RX(theta: float, q: int) -> GateOp:
    return GateOp("RX", (q,), float(theta))


def RZ(theta: float, q: int) -> GateOp:
    return GateOp("RZ", (q,), float(theta))


def CNOT(ctrl: int, tgt: int) -> GateOp:
    return GateOp("CNOT", (ctrl, tgt))


def ZZ(theta: float, i: int, j: int) -> GateOp:
    return GateOp("ZZ", (i, j), float(theta))


def DIAG_PHASE(gamma: float, energies) -> GateOp:
    return GateOp("DIAG_PHASE", (), float(gamma), np.asarray(energies, dtype=float))


def _apply_1q(amps: np.ndarray, n: int, q: int, m: np.ndarray) -> None:
    view = amps.reshape(1 << q, 2, 1 << (n - 1 - q))
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = m[0, 0] * a0 + m[0, 1] * a1
    view[:, 1, :] = m[1, 0] * a0 + m[1, 1] * a1


def _slot(n: int, assign: dict[int, int]) -> tuple:
    return tuple(assign.get(ax, slice(None)) for ax in range(n))


def _apply_cnot(amps: np.ndarray, n: int, ctrl: int, tgt: int) -> None:
    t = amps.reshape((2,) * n)
    s10 = _slot(n, {ctrl: 1, tgt: 0})
    s11 = _slot(n, {ctrl: 1, tgt: 1})
    tmp = t[s10].copy()
    t[s10] = t[s11]
    t[s11] = tmp


def _apply_zz(amps: np.ndarray, n: int, i: int, j: int, theta: float) -> None:
    t = amps.reshape((2,) * n)
    for a in (0, 1):
        for b in (0, 1):
            parity = 1 if a == b else -1
            t[_slot(n, {i: a, j: b})] *= np.exp(-0.5j * theta * parity)


def apply_gate(s: StateVector, g: GateOp) -> StateVector:
    n = s.n
    for q in g.targets:
        if not 0 <= q < n:
            raise IndexOutOfRange(f"qubit {q} out of range for {n} qubits")
    if g.kind in _FIXED_1Q or g.kind in ("RX", "RZ"):
        _apply_1q(s.amps, n, g.targets[0], g.matrix())
    elif g.kind == "CNOT":
        if g.targets[0] == g.targets[1]:
            raise SelfControlledGate("CNOT control and target must differ")
        _apply_cnot(s.amps, n, *g.targets)
    elif g.kind == "ZZ":
        if g.targets[0] == g.targets[1]:
            raise SelfControlledGate("ZZ needs two distinct qubits")
        _apply_zz(s.amps, n, g.targets[0], g.targets[1], g.angle)
    elif g.kind == "DIAG_PHASE":
        if g.energies is None or g.energies.shape != s.amps.shape:
            raise DimensionMismatch("DIAG_PHASE energies must have length 2**n")
        s.amps *= np.exp(-1j * g.angle * g.energies)
    else:
        raise InputError(f"unknown gate kind {g.kind!r}")
    return s


def apply_circuit(s: StateVector, gates) -> StateVector:
    for g in gates:
        apply_gate(s, g)
    return s


def expectation_diagonal(s: StateVector, energies) -> float:
    energies = np.asarray(energies, dtype=float)
    if energies.shape != s.amps.shape:
        raise DimensionMismatch(f"energies length {energies.size} != {s.amps.size}")
    return float(probabilities(s) @ energies)


def probabilities(s: StateVector) -> np.ndarray:
    a = s.amps
    return a.real**2 + a.imag**2


def sample(s: StateVector, shots: int, seed: int) -> dict[str, int]:
    """Multinomial measurement histogram ``{bitstring: count}`` (non-zero bins only)."""
    return sample_probabilities(probabilities(s), s.n, shots, seed)


def sample_probabilities(probs, n: int, shots: int, seed: int) -> dict[str, int]:
    if shots < 1:
        raise InputError("shots must be >= 1")
    p = np.asarray(probs, dtype=float)
    p = p / p.sum()
    counts = np.random.default_rng(seed).multinomial(shots, p)
    return {format(i, f"0{n}b"): int(c) for i, c in enumerate(counts) if c}


def histogram_csv(probs, n: int, counts: dict[str, int] | None = None) -> str:
    """``bitstring,probability[,count]`` rows, most probable first (ties by index)."""
    probs = np.asarray(probs, dtype=float)
    order = sorted(range(probs.size), key=lambda i: (-probs[i], i))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bitstring", "probability"] + (["count"] if counts is not None else []))
    for i in order:
        key = format(i, f"0{n}b")
        row = [key, repr(float(probs[i]))]
        if counts is not None:
            row.append(counts.get(key, 0))
        writer.writerow(row)
    return buf.getvalue()
