"""Shared fixtures and independent oracles."""

from __future__ import annotations

import numpy as np
import pytest

from certrand.protocol import ProtocolConfig

S = 1 / np.sqrt(2)
# textbook forms, written out independently of the package's constructor
ORACLE_GATES = {
    "sx": S * np.array([[1, -1j], [-1j, 1]]),
    "sy": S * np.array([[1, -1], [1, 1]], dtype=complex),
    "sw": S * np.array([[1, -np.sqrt(1j)], [np.sqrt(-1j), 1]]),
    "id": np.eye(2, dtype=complex),
}


def dense_probabilities(circuit) -> np.ndarray:
    """Full 2^n x 2^n operator per layer; qubit 0 is the most significant bit."""
    n = circuit.n_qubits
    state = np.zeros(2**n, dtype=complex)
    state[0] = 1
    for layer in circuit.layers:
        op = np.array([[1.0 + 0j]])
        for g in layer.single:
            op = np.kron(op, ORACLE_GATES[g])
        diag = np.ones(2**n, dtype=complex)
        for a, b in layer.pairs:
            for x in range(2**n):
                bits = format(x, f"0{n}b")
                if bits[a] == "1" and bits[b] == "1":
                    diag[x] *= -1
        state = diag * (op @ state)
    return np.abs(state) ** 2


def dense_gf2(matrix: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Plain integer matrix-vector product reduced mod 2."""
    return ((matrix.astype(np.int64) @ vec.astype(np.int64)) & 1).astype(np.uint8)


def toeplitz_matrix(seed_bits: np.ndarray, n_in: int, n_out: int) -> np.ndarray:
    i = np.arange(n_out)[:, None]
    j = np.arange(n_in)[None, :]
    return np.asarray(seed_bits, dtype=np.uint8)[i - j + n_in - 1]


def gf2_poly_mul(a: int, b: int, w: int, low: int) -> int:
    """Schoolbook multiply in GF(2)[x] / (x^w + low), reducing as we go."""
    result = 0
    for _ in range(w):
        if b & 1:
            result ^= a
        b >>= 1
        carry = a >> (w - 1) & 1
        a = (a << 1) & ((1 << w) - 1)
        if carry:
            a ^= low
    return result


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


@pytest.fixture
def small_config():
    return ProtocolConfig(rounds=6, n_qubits=5, depth=6, samples_per_round=60, extractor_epsilon=2.0**-8)


@pytest.fixture
def desk_config():
    return ProtocolConfig()


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
