import numpy as np
import pytest

from qfolio.market_data import example_stats
from qfolio.qubo_ising import brute_force_solve, diagonal_energies, example_qubo, qubo_to_ising

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def stats():
    return example_stats()


@pytest.fixture(scope="session")
def qubo():
    return example_qubo()


@pytest.fixture(scope="session")
def ising(qubo):
    return qubo_to_ising(qubo)


@pytest.fixture(scope="session")
def oracle(qubo):
    return brute_force_solve(qubo)


@pytest.fixture(scope="session")
def energies(ising):
    return diagonal_energies(ising)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_state(n, rng):
    from qfolio.statevector import StateVector

    a = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, a / np.linalg.norm(a))


def embed(m, q, n):
    """Dense 2^n operator with the 2x2 ``m`` on qubit ``q`` (qubit 0 = leftmost factor)."""
    out = np.ones((1, 1))
    for k in range(n):
        out = np.kron(out, m if k == q else np.eye(2))
    return out


def ising_dense(h):
    """H_C assembled from Pauli-Z Kronecker products."""
    zm = np.diag([1.0, -1.0])
    dim = 1 << h.n
    m = h.k * np.eye(dim)
    for i in range(h.n):
        m += h.z[i] * embed(zm, i, h.n)
        for j in range(i + 1, h.n):
            m += h.zz[i, j] * embed(zm, i, h.n) @ embed(zm, j, h.n)
    return m


@pytest.fixture
def report():
    """Record one PASS/FAIL line for the acceptance summary."""

    def record(criterion, ok, detail=""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
        print(ACCEPTANCE_LINES[-1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
