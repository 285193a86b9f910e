"""Random circuits derived from challenge seeds, exact simulation, linear XEB.

Qubit ``q`` of an ``n``-qubit register is bit ``n-1-q`` of a basis-state
index, so the outcome string ``b0 b1 ... b(n-1)`` read left to right is the
big-endian binary form of the index.

Golden circuit text format (one gate per line, ``#`` starts a comment)::

    n_qubits <n>
    depth <d>
    <layer> <qubit> <gate_id>            single-qubit gate
    <layer> <qubit_a>,<qubit_b> cz       entangling gate
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import bits as bitops
from .digest import digest
from .errors import CapExceeded, EmptyBatch, ShapeMismatch

SIM_CAP = 14
SEED_WIDTH = 128


def _half_pi_rotation(axis_angle: float) -> np.ndarray:
    """exp(-i pi/4 n.sigma) for the in-plane axis n = (cos a, sin a, 0)."""
    off = -1j * np.exp(-1j * axis_angle)
    return np.sqrt(0.5) * np.array([[1, off], [-1j * np.exp(1j * axis_angle), 1]])


GATES: dict[str, np.ndarray] = {
    "sx": _half_pi_rotation(0.0),
    "sy": _half_pi_rotation(np.pi / 2),
    "sw": _half_pi_rotation(np.pi / 4),
    # not drawn by derive_circuit; available for hand-built circuits
    "id": np.eye(2, dtype=complex),
}
GATE_SET = ("sx", "sy", "sw")
ENTANGLER = "cz"


@dataclass(frozen=True)
class ChallengeSpec:
    round_index: int
    seed: bytes
    n_qubits: int
    depth: int
    samples_requested: int
    seed_width: int = SEED_WIDTH

    def __post_init__(self):
        if self.round_index < 0:
            raise ShapeMismatch("round_index must be non-negative")
        if self.n_qubits < 1 or self.depth < 1 or self.samples_requested < 1:
            raise ShapeMismatch("n_qubits, depth and samples_requested must be >= 1")
        if len(self.seed) != (self.seed_width + 7) // 8:
            raise ShapeMismatch(f"seed holds {len(self.seed)} bytes, width is {self.seed_width} bits")

    @classmethod
    def from_bits(cls, round_index: int, seed_bits, n_qubits: int, depth: int, samples_requested: int):
        b = bitops.as_bits(seed_bits)
        return cls(round_index, bitops.pack(b), n_qubits, depth, samples_requested, seed_width=b.size)

    @property
    def seed_bits(self) -> np.ndarray:
        return bitops.unpack(self.seed, self.seed_width)


@dataclass(frozen=True)
class Layer:
    single: tuple[str, ...]
    pairs: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    layers: tuple[Layer, ...]

    def __post_init__(self):
        for layer in self.layers:
            if len(layer.single) != self.n_qubits:
                raise ShapeMismatch("each layer needs one single-qubit gate per qubit")
            touched = [q for pair in layer.pairs for q in pair]
            if len(set(touched)) != len(touched):
                raise ShapeMismatch("entangling gates in a layer must act on distinct qubits")
            for a, b in layer.pairs:
                if abs(a - b) != 1 or not (0 <= min(a, b) and max(a, b) < self.n_qubits):
                    raise ShapeMismatch(f"pair ({a}, {b}) is not an adjacent in-range pair")

    @property
    def depth(self) -> int:
        return len(self.layers)


@dataclass(frozen=True)
class ProbabilityTable:
    n_qubits: int
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.probs.shape != (1 << self.n_qubits,):
            raise ShapeMismatch("table must hold 2^n probabilities")
        self.probs.setflags(write=False)

    def ideal_xeb(self) -> float:
        """Expected linear XEB of an ideal sampler: ``2^n * sum p^2 - 1``."""
        return float((1 << self.n_qubits) * np.dot(self.probs, self.probs) - 1.0)


@dataclass(frozen=True)
class XebScore:
    value: float
    sample_count: int
    standard_error: float


def _gate_index(seed: bytes, round_index: int, layer: int, qubit: int) -> int:
    counter = 0
    while True:
        # byte 255 is rejected so that byte % 3 is exactly uniform
        for byte in digest("certrand/circuit-gate", seed, round_index, layer, qubit, counter):
            if byte < 255:
                return byte % 3
        counter += 1


def brickwork_pairs(n_qubits: int, layer: int) -> tuple[tuple[int, int], ...]:
    return tuple((q, q + 1) for q in range(layer % 2, n_qubits - 1, 2))


def derive_circuit(challenge: ChallengeSpec, cap: int = SIM_CAP) -> Circuit:
    """Expand a challenge into its circuit. Verifier and prover get the same one."""
    if challenge.n_qubits > cap:
        raise CapExceeded(f"{challenge.n_qubits} qubits exceeds the simulation cap of {cap}")
    n = challenge.n_qubits
    layers = []
    for layer in range(challenge.depth):
        single = tuple(
            GATE_SET[_gate_index(challenge.seed, challenge.round_index, layer, q)] for q in range(n)
        )
        layers.append(Layer(single, brickwork_pairs(n, layer)))
    return Circuit(n, tuple(layers))


def _cz_phase(n: int, pairs) -> np.ndarray | None:
    if not pairs:
        return None
    idx = np.arange(1 << n)
    phase = np.ones(1 << n)
    for a, b in pairs:
        both = ((idx >> (n - 1 - a)) & 1) & ((idx >> (n - 1 - b)) & 1)
        phase[both == 1] *= -1.0
    return phase


def statevector(circuit: Circuit, cap: int = SIM_CAP) -> np.ndarray:
    n = circuit.n_qubits
    if n > cap:
        raise CapExceeded(f"{n} qubits exceeds the simulation cap of {cap}")
    state = np.zeros(1 << n, dtype=complex)
    state[0] = 1.0
    for layer in circuit.layers:
        for q, gate in enumerate(layer.single):
            if gate == "id":
                continue
            view = state.reshape(1 << q, 2, 1 << (n - q - 1))
            state = np.einsum("ij,ajb->aib", GATES[gate], view).reshape(-1)
        phase = _cz_phase(n, layer.pairs)
        if phase is not None:
            state = state * phase
    return state


@lru_cache(maxsize=512)
def simulate_probabilities(circuit: Circuit, cap: int = SIM_CAP) -> ProbabilityTable:
    """Exact output distribution of ``circuit`` on ``|0...0>``. Cached; pure."""
    amp = statevector(circuit, cap)
    probs = (amp.real**2 + amp.imag**2).astype(np.float64)
    return ProbabilityTable(circuit.n_qubits, probs)


def outcome_indices(samples, n_qubits: int) -> np.ndarray:
    """Basis-state indices for samples given as an (M, n) bit array or bit strings."""
    if isinstance(samples, np.ndarray) and samples.ndim == 2:
        if samples.shape[1] != n_qubits:
            raise ShapeMismatch(f"samples are {samples.shape[1]} bits wide, table has {n_qubits}")
        weights = 1 << np.arange(n_qubits - 1, -1, -1, dtype=np.int64)
        return samples.astype(np.int64) @ weights
    out = np.empty(len(samples), dtype=np.int64)
    for i, s in enumerate(samples):
        if len(s) != n_qubits:
            raise ShapeMismatch(f"sample {s!r} is not {n_qubits} bits wide")
        out[i] = int(s, 2) if isinstance(s, str) else bitops.to_int(s)
    return out


def indices_to_bits(indices, n_qubits: int) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64)
    shifts = np.arange(n_qubits - 1, -1, -1)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)


def xeb_score(table: ProbabilityTable, samples: Sequence | np.ndarray) -> XebScore:
    """Linear XEB ``2^n * mean p(x_i) - 1`` with its standard error."""
    if len(samples) == 0:
        raise EmptyBatch("xeb_score needs at least one sample")
    idx = outcome_indices(samples, table.n_qubits)
    per_sample = (1 << table.n_qubits) * table.probs[idx] - 1.0
    m = per_sample.size
    return XebScore(float(per_sample.mean()), m, float(per_sample.std() / np.sqrt(m)))


def circuit_to_text(circuit: Circuit) -> str:
    lines = [f"n_qubits {circuit.n_qubits}", f"depth {circuit.depth}"]
    for li, layer in enumerate(circuit.layers):
        lines += [f"{li} {q} {g}" for q, g in enumerate(layer.single)]
        lines += [f"{li} {a},{b} {ENTANGLER}" for a, b in layer.pairs]
    return "\n".join(lines) + "\n"


def circuit_from_text(text: str) -> Circuit:
    header: dict[str, int] = {}
    gates: dict[int, dict[int, str]] = {}
    pairs: dict[int, list[tuple[int, int]]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] in ("n_qubits", "depth"):
            header[parts[0]] = int(parts[1])
            continue
        layer, target, gate = int(parts[0]), parts[1], parts[2]
        if gate == ENTANGLER:
            a, b = (int(x) for x in target.split(","))
            pairs.setdefault(layer, []).append((a, b))
        elif gate in GATES:
            gates.setdefault(layer, {})[int(target)] = gate
        else:
            raise ShapeMismatch(f"unknown gate {gate!r}")
    n, d = header["n_qubits"], header["depth"]
    layers = tuple(
        Layer(tuple(gates.get(li, {}).get(q, "id") for q in range(n)), tuple(pairs.get(li, ())))
        for li in range(d)
    )
    return Circuit(n, layers)
