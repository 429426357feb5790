"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is echoed in the pytest terminal
summary (section "acceptance criteria").
"""

import filecmp
import time

import numpy as np

import qfolio.statevector as sv
from qfolio.cli import main
from qfolio.market_data import bundled_path
from qfolio.markowitz import sample_portfolios
from qfolio.qaoa import QaoaParams, ansatz_state, evaluate_f, layer_sweep, linear_ramp_params, optimize
from qfolio.qubo_ising import QuboProblem, bitstring, brute_force_solve, diagonal_energies, evaluate, qubo_to_ising

from conftest import random_state

R2 = 1 / np.sqrt(2)
# single-qubit gates and CNOT written out entry by entry
H_MAT = np.array([[R2, R2], [R2, -R2]])
X_MAT = np.array([[0, 1], [1, 0]])
Z_MAT = np.array([[1, 0], [0, -1]])
CNOT_MAT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
IDX_1001 = 9


def test_c1_gate_algebra(report):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst_basis = 0.0
    for kind, m in (("H", H_MAT), ("X", X_MAT), ("Z", Z_MAT)):
        for idx in range(2):
            got = sv.apply_gate(sv.basis_state(1, idx), sv.GateOp(kind, (0,))).amps
            worst_basis = max(worst_basis, np.abs(got - m[:, idx]).max())
    for idx in range(4):
        got = sv.apply_gate(sv.basis_state(2, idx), sv.CNOT(0, 1)).amps
        worst_basis = max(worst_basis, np.abs(got - CNOT_MAT[:, idx]).max())
    cnot_10 = sv.apply_gate(sv.basis_state(2, "10"), sv.CNOT(0, 1))
    cnot_ok = np.array_equal(cnot_10.amps, sv.basis_state(2, "11").amps)

    s = random_state(5, rng)
    kinds = ["H", "X", "Z", "RX", "RZ", "CNOT", "ZZ"]
    for _ in range(1000):
        kind = kinds[rng.integers(len(kinds))]
        a, b = (int(v) for v in rng.choice(5, size=2, replace=False))
        theta = float(rng.uniform(-2 * np.pi, 2 * np.pi))
        g = {"CNOT": sv.CNOT(a, b), "ZZ": sv.ZZ(theta, a, b), "RX": sv.RX(theta, a),
             "RZ": sv.RZ(theta, a)}.get(kind) or sv.GateOp(kind, (a,))
        sv.apply_gate(s, g)
    drift = abs(s.norm_squared() - 1)

    worst_zz = 0.0
    for _ in range(100):
        s = random_state(3, rng)
        theta = float(rng.uniform(-2 * np.pi, 2 * np.pi))
        i, j = (int(v) for v in rng.choice(3, size=2, replace=False))
        a = sv.apply_gate(s.copy(), sv.ZZ(theta, i, j)).amps
        b = sv.apply_circuit(s.copy(), [sv.CNOT(i, j), sv.RZ(theta, j), sv.CNOT(i, j)]).amps
        worst_zz = max(worst_zz, np.abs(a - b).max())
    elapsed = time.perf_counter() - t0

    ok = worst_basis <= 1e-15 and cnot_ok and drift <= 1e-9 and worst_zz <= 1e-12 and elapsed < 1.0
    report("1 gate algebra", ok,
           f"basis err {worst_basis:.1e}, norm drift {drift:.1e}, ZZ err {worst_zz:.1e}, {elapsed:.2f}s")
    assert ok


def test_c2_ising_oracle_equivalence(report, qubo):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    problems = [qubo]
    for _ in range(100):
        n = int(rng.integers(1, 7))
        a = rng.normal(size=(n, n))
        problems.append(QuboProblem(n, (a + a.T) / 2, rng.normal(size=n), rng.normal()))
    worst = 0.0
    for q in problems:
        e = diagonal_energies(qubo_to_ising(q))
        for i in range(1 << q.n):
            worst = max(worst, abs(e[i] - evaluate(q, bitstring(i, q.n))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 5.0
    report("2 Ising oracle equivalence", ok, f"{len(problems)} problems, max err {worst:.1e}, {elapsed:.2f}s")
    assert ok


def test_c3_ground_state(report, qubo, ising):
    t0 = time.perf_counter()
    brute = brute_force_solve(qubo)
    res = optimize(ising, 20, restarts=10)
    elapsed = time.perf_counter() - t0
    ok = (brute.best_bitstring == "1001" and res.argmax_index == IDX_1001
          and res.ground_index == IDX_1001 and res.ground_prob >= 0.5 and elapsed < 60)
    report("3 ground state", ok,
           f"brute {brute.best_bitstring}, QAOA argmax {res.argmax_bitstring}, "
           f"ground_prob {res.ground_prob:.3f}, {elapsed:.1f}s")
    assert ok


def test_c4_variational_bound(report, ising, oracle):
    rng = np.random.default_rng(4)
    energies = diagonal_energies(ising)
    lowest = np.inf
    for _ in range(1000):
        p = int(rng.integers(1, 21))
        params = QaoaParams(rng.uniform(0, 2 * np.pi, p), rng.uniform(0, np.pi, p))
        lowest = min(lowest, evaluate_f(ising, params, energies))
    ok = lowest >= oracle.best_value - 1e-9
    report("4 variational bound", ok, f"min F {lowest:.6f} vs ground {oracle.best_value:.6f}")
    assert ok


def test_c5_padding_identity(report, ising):
    energies = diagonal_energies(ising)
    worst_state = worst_f = 0.0
    warm_ok = True
    for p in (1, 2, 3, 5, 8):
        res = optimize(ising, p, restarts=3, seed=p, energies=energies)
        padded = res.params.padded(1)
        a = ansatz_state(ising, res.params, energies).amps
        b = ansatz_state(ising, padded, energies).amps
        worst_state = max(worst_state, np.abs(a - b).max())
        f_pad = evaluate_f(ising, padded, energies)
        worst_f = max(worst_f, abs(f_pad - res.energy))
        nxt = optimize(ising, p + 1, restarts=3, seed=p, warm_starts=[padded], energies=energies)
        warm_ok &= nxt.energy <= f_pad
    ok = worst_state <= 1e-10 and worst_f <= 1e-10 and warm_ok
    report("5 padding identity", ok,
           f"state err {worst_state:.1e}, F err {worst_f:.1e}, warm-start never above padded: {warm_ok}")
    assert ok


def test_c6_layer_sweep_plateau(report, ising, oracle):
    t0 = time.perf_counter()
    rows = layer_sweep(ising, range(1, 21), restarts=10)
    elapsed = time.perf_counter() - t0
    tail = {r.p: r.energy_mean2 for r in rows if r.p >= 16}
    gaps = {p: e - oracle.best_value for p, e in tail.items()}
    ok = all(abs(g) <= 0.1 for g in gaps.values())
    detail = ", ".join(f"p={p}: {e:.4f}" for p, e in tail.items())
    report("6 layer-sweep plateau", ok, f"ground {oracle.best_value:.4f}; {detail}; {elapsed:.1f}s")
    assert ok


def test_c7_frontier(report, stats):
    t0 = time.perf_counter()
    rep = sample_portfolios(stats, n=30000, seed=0)
    elapsed = time.perf_counter() - t0
    min_risk = rep.pick("min_risk")
    min_ok = bool(np.all(min_risk.vol <= rep.vols))
    top = int(np.argmax(stats.annual_mu()))
    max_ret_share = rep.pick("max_return").weights[top]
    pair = [stats.tickers.index("BRKM5"), stats.tickers.index("VALE3")]
    shares = {rf: rep.pick(f"max_sharpe@{rf:g}").weights[pair].sum() for rf in (0.015, 0.028, 0.10)}
    ok = min_ok and max_ret_share > 0.5 and all(s > 0.7 for s in shares.values()) and elapsed < 10
    detail = ", ".join(f"rf {rf:g}: {s:.3f}" for rf, s in shares.items())
    report("7 frontier properties", ok,
           f"min-risk is minimal: {min_ok}, max-return top-asset share {max_ret_share:.3f}, "
           f"BRKM5+VALE3 Sharpe shares {detail}, {elapsed:.2f}s")
    assert ok


def test_c8_linear_ramp_trend(report, ising):
    t0 = time.perf_counter()
    ps = (1, 2, 4, 8, 16, 32)
    energies = [evaluate_f(ising, linear_ramp_params(p)) for p in ps]
    elapsed = time.perf_counter() - t0
    ok = all(b <= a for a, b in zip(energies, energies[1:])) and elapsed < 30
    report("8 linear-ramp trend", ok, " > ".join(f"{e:.4f}" for e in energies) + f", {elapsed:.2f}s")
    assert ok


def _run_all(threads):
    """Every subcommand, with relative paths so manifests match across run directories."""
    stats = str(bundled_path("example_stats.json"))
    t = ["--threads", str(threads)]
    ising = "qubo/ising.json"
    return [
        main(t + ["stats", str(bundled_path("prices_synthetic.csv")), "-o", "stats"]),
        main(t + ["frontier", stats, "--seed", "42", "-o", "frontier"]),
        main(t + ["qubo", stats, "-o", "qubo"]),
        main(t + ["solve", ising, "--method", "brute", "-o", "brute"]),
        main(t + ["solve", ising, "--seed", "7", "--shots", "1000", "-o", "qaoa"]),
        main(t + ["sweep", ising, "--layers", "1..4", "--seed", "7", "-o", "sweep"]),
    ]


def _tree_differences(a, b):
    diffs = []
    stack = [filecmp.dircmp(a, b)]
    while stack:
        c = stack.pop()
        diffs += [f"{c.left}/{n}" for n in c.left_only + c.right_only]
        _, mismatch, errors = filecmp.cmpfiles(c.left, c.right, c.common_files, shallow=False)
        diffs += [f"{c.left}/{n}" for n in mismatch + errors]
        stack.extend(c.subdirs.values())
    return diffs


def test_c9_cli_determinism(report, tmp_path, monkeypatch):
    for name, threads in (("a", 1), ("b", 3), ("c", 1)):
        (tmp_path / name).mkdir()
        monkeypatch.chdir(tmp_path / name)
        assert _run_all(threads) == [0] * 6
    files = sum(1 for f in (tmp_path / "a").rglob("*") if f.is_file())
    repeat = _tree_differences(tmp_path / "a", tmp_path / "c")
    threads = _tree_differences(tmp_path / "a", tmp_path / "b")
    ok = files == 16 and not repeat and not threads
    report("9 CLI determinism", ok,
           f"{files} files per run, repeat diffs {len(repeat)}, threads 1 vs 3 diffs {len(threads)}")
    assert ok, (repeat, threads)
