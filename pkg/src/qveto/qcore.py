"""Dense statevector and density-matrix simulation core.

Convention used throughout the package: qubit 0 is the most significant bit
of a basis label, so for state |q0 q1 ... q(n-1)> the amplitude index is
``int(label, 2)`` and printed bitstrings read left to right. Arrays are
complex128 and marked read-only once validated; operations return new values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

ATOL = 1e-9

__all__ = [
    "ATOL",
    "InvalidStateError",
    "StateVector",
    "DensityMatrix",
    "GateMatrix",
    "OutcomeDistribution",
    "ShotCounts",
    "I",
    "X",
    "Y",
    "IY",
    "Z",
    "H",
    "CNOT",
    "CZ",
    "bit_labels",
    "basis_state",
    "state_from_amplitudes",
    "apply_gate",
    "apply_gate_dm",
    "to_density",
    "measure_probs",
    "sample_shots",
    "fidelity",
    "equal_up_to_global_phase",
]


class InvalidStateError(ValueError):
    """A matrix that should describe a physical state does not."""


def bit_labels(n_qubits: int) -> list[str]:
    """All n-bit basis labels in index order ("000", "001", ...)."""
    return [format(i, f"0{n_qubits}b") for i in range(2 ** n_qubits)]


def _label_index(n_qubits: int, label: str) -> int:
    if len(label) != n_qubits or set(label) - {"0", "1"}:
        raise ValueError(f"label {label!r} is not a {n_qubits}-bit string")
    return int(label, 2)


def _own_complex(values, shape: tuple[int, ...], what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.shape != shape:
        raise ValueError(f"{what}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what}: non-finite entries")
    arr.setflags(write=False)
    return arr


def _check_qubit_count(n_qubits: int) -> None:
    if not 1 <= n_qubits <= 8:
        raise ValueError(f"n_qubits must be between 1 and 8, got {n_qubits}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure n-qubit state as a unit vector of 2**n amplitudes."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        _check_qubit_count(self.n_qubits)
        amps = _own_complex(self.amplitudes, (2 ** self.n_qubits,), "amplitudes")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > ATOL:
            raise ValueError(f"state norm {norm} is not 1")
        object.__setattr__(self, "amplitudes", amps)

    def amplitude(self, label: str) -> complex:
        return complex(self.amplitudes[_label_index(self.n_qubits, label)])


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Mixed n-qubit state; Hermitian, unit trace, eigenvalues >= -1e-9."""

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        _check_qubit_count(self.n_qubits)
        dim = 2 ** self.n_qubits
        m = _own_complex(self.matrix, (dim, dim), "density matrix")
        if float(np.max(np.abs(m - m.conj().T))) > ATOL:
            raise InvalidStateError("density matrix is not Hermitian")
        trace = complex(np.trace(m))
        if abs(trace - 1.0) > ATOL:
            raise InvalidStateError(f"density matrix trace {trace} is not 1")
        if float(np.linalg.eigvalsh(m)[0]) < -ATOL:
            raise InvalidStateError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True, eq=False)
class GateMatrix:
    """Unitary acting on one or two qubits."""

    name: str
    arity: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        if self.arity not in (1, 2):
            raise ValueError(f"gate arity must be 1 or 2, got {self.arity}")
        dim = 2 ** self.arity
        m = _own_complex(self.matrix, (dim, dim), f"gate {self.name!r}")
        if float(np.max(np.abs(m @ m.conj().T - np.eye(dim)))) > ATOL:
            raise ValueError(f"gate {self.name!r} is not unitary")
        object.__setattr__(self, "matrix", m)

    def dagger(self) -> "GateMatrix":
        return GateMatrix(self.name, self.arity, self.matrix.conj().T)


I = GateMatrix("i", 1, np.eye(2))
X = GateMatrix("x", 1, np.array([[0, 1], [1, 0]]))
Y = GateMatrix("y", 1, np.array([[0, -1j], [1j, 0]]))
# real form of i*Y; iY|0> = -|1>, iY|1> = |0>, and (iY)^2 = -I
IY = GateMatrix("iy", 1, np.array([[0, 1], [-1, 0]]))
Z = GateMatrix("z", 1, np.diag([1, -1]))
H = GateMatrix("h", 1, np.array([[1, 1], [1, -1]]) / math.sqrt(2))
# control is the first target
CNOT = GateMatrix("cnot", 2, np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]))
CZ = GateMatrix("cz", 2, np.diag([1, 1, 1, -1]))


def basis_state(n_qubits: int, label: str | None = None) -> StateVector:
    """Computational basis state; label defaults to all zeros."""
    _check_qubit_count(n_qubits)
    if label is None:
        label = "0" * n_qubits
    amps = np.zeros(2 ** n_qubits, dtype=np.complex128)
    amps[_label_index(n_qubits, label)] = 1.0
    return StateVector(n_qubits, amps)


def state_from_amplitudes(n_qubits: int, amplitudes: Mapping[str, complex]) -> StateVector:
    """Build a state from a label -> amplitude map; must be normalized."""
    _check_qubit_count(n_qubits)
    amps = np.zeros(2 ** n_qubits, dtype=np.complex128)
    for label, value in amplitudes.items():
        amps[_label_index(n_qubits, label)] = value
    return StateVector(n_qubits, amps)


def _check_targets(n_qubits: int, gate: GateMatrix, targets: Sequence[int]) -> tuple[int, ...]:
    targets = tuple(int(q) for q in targets)
    if len(targets) != gate.arity:
        raise ValueError(
            f"gate {gate.name!r} has arity {gate.arity}, got targets {targets}")
    if len(set(targets)) != len(targets):
        raise ValueError(f"targets must be distinct, got {targets}")
    for q in targets:
        if not 0 <= q < n_qubits:
            raise ValueError(f"target {q} out of range for {n_qubits} qubits")
    return targets


def _contract(tensor: np.ndarray, matrix: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    # multiply `matrix` into the given tensor axes, preserving axis order;
    # matrix input index i contracts against axes[i]
    k = len(axes)
    op = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(op, tensor, axes=(tuple(range(k, 2 * k)), tuple(axes)))
    return np.moveaxis(out, tuple(range(k)), tuple(axes))


def apply_gate(state: StateVector, gate: GateMatrix, targets: Sequence[int]) -> StateVector:
    """Apply a gate to the given qubits of a pure state."""
    targets = _check_targets(state.n_qubits, gate, targets)
    psi = state.amplitudes.reshape((2,) * state.n_qubits)
    psi = _contract(psi, gate.matrix, targets)
    return StateVector(state.n_qubits, psi.reshape(-1))


def to_density(state: StateVector) -> DensityMatrix:
    """|psi><psi| of a pure state."""
    return DensityMatrix(state.n_qubits, np.outer(state.amplitudes, state.amplitudes.conj()))


def apply_gate_dm(rho: DensityMatrix, gate: GateMatrix, targets: Sequence[int]) -> DensityMatrix:
    """Conjugate a density matrix by a gate: U rho U+."""
    targets = _check_targets(rho.n_qubits, gate, targets)
    n = rho.n_qubits
    out = _conjugate(rho.matrix, gate.matrix, targets, n)
    return DensityMatrix(n, out)


def _conjugate(matrix: np.ndarray, op: np.ndarray, targets: Sequence[int], n_qubits: int) -> np.ndarray:
    # K rho K+ on raw arrays; row axes are 0..n-1, column axes n..2n-1
    t = matrix.reshape((2,) * (2 * n_qubits))
    t = _contract(t, op, targets)
    t = _contract(t, op.conj(), tuple(n_qubits + q for q in targets))
    dim = 2 ** n_qubits
    return t.reshape(dim, dim)


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Probability of each computational-basis readout; full support."""

    n_qubits: int
    probabilities: dict[str, float]

    def __post_init__(self) -> None:
        _check_qubit_count(self.n_qubits)
        labels = bit_labels(self.n_qubits)
        extra = set(self.probabilities) - set(labels)
        if extra:
            raise ValueError(f"labels {sorted(extra)} do not fit {self.n_qubits} qubits")
        probs: dict[str, float] = {}
        for label in labels:
            p = float(self.probabilities.get(label, 0.0))
            if p < -ATOL or p > 1.0 + ATOL:
                raise ValueError(f"probability of {label!r} out of range: {p}")
            probs[label] = min(max(p, 0.0), 1.0)
        total = math.fsum(probs.values())
        if abs(total - 1.0) > ATOL:
            raise ValueError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "probabilities", probs)

    @classmethod
    def from_vector(cls, n_qubits: int, vector: np.ndarray) -> "OutcomeDistribution":
        return cls(n_qubits, dict(zip(bit_labels(n_qubits), map(float, vector))))

    def prob(self, label: str) -> float:
        _label_index(self.n_qubits, label)
        return self.probabilities[label]

    def to_vector(self) -> np.ndarray:
        return np.array([self.probabilities[b] for b in bit_labels(self.n_qubits)])

    def modal(self) -> str:
        """Most probable outcome; ties break to the smallest label."""
        return min(self.probabilities, key=lambda b: (-self.probabilities[b], b))


@dataclass(frozen=True, eq=False)
class ShotCounts:
    """Sampled readout counts; zero-count outcomes are dropped."""

    shots: int
    counts: dict[str, int]
    seed: int

    def __post_init__(self) -> None:
        if self.shots <= 0:
            raise ValueError(f"shots must be positive, got {self.shots}")
        clean: dict[str, int] = {}
        for label, c in sorted(self.counts.items()):
            c = int(c)
            if c < 0:
                raise ValueError(f"negative count for {label!r}")
            if c:
                clean[label] = c
        if sum(clean.values()) != self.shots:
            raise ValueError("counts do not add up to the shot total")
        object.__setattr__(self, "counts", clean)

    def frequency(self, label: str) -> float:
        return self.counts.get(label, 0) / self.shots

    def modal(self) -> str:
        """Most frequent outcome; ties break to the smallest label."""
        return min(self.counts, key=lambda b: (-self.counts[b], b))


def measure_probs(state: StateVector | DensityMatrix) -> OutcomeDistribution:
    """Computational-basis readout probabilities of a state."""
    if isinstance(state, StateVector):
        probs = np.abs(state.amplitudes) ** 2
    elif isinstance(state, DensityMatrix):
        probs = np.real(np.diag(state.matrix))
    else:
        raise TypeError(f"cannot measure {type(state).__name__}")
    return OutcomeDistribution.from_vector(state.n_qubits, probs)


def _multinomial_counts(rng: np.random.Generator, dist: OutcomeDistribution, shots: int) -> dict[str, int]:
    p = dist.to_vector()
    draws = rng.multinomial(shots, p / p.sum())
    return {b: int(c) for b, c in zip(bit_labels(dist.n_qubits), draws) if c}


def sample_shots(dist: OutcomeDistribution, shots: int, seed: int) -> ShotCounts:
    """Multinomial shot sampling with a PCG64 generator seeded by `seed`."""
    if shots <= 0:
        raise ValueError(f"shots must be positive, got {shots}")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    rng = np.random.default_rng(seed)
    return ShotCounts(shots, _multinomial_counts(rng, dist, shots), seed)


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(matrix)
    if float(w[0]) < -1e-6:
        raise InvalidStateError(f"eigenvalue {w[0]} below -1e-6")
    w = np.where(w > 0.0, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(state_a: StateVector | DensityMatrix, state_b: StateVector | DensityMatrix) -> float:
    """Uhlmann fidelity; 1 for identical states, 0 for orthogonal ones.

    Pure inputs take the shortcut forms |<a|b>|^2 and <psi|rho|psi>; the
    mixed-mixed case goes through the Hermitian square root
    (Tr sqrt(sqrt(a) b sqrt(a)))^2 with eigenvalue clamping at -1e-6.
    """
    if state_a.n_qubits != state_b.n_qubits:
        raise ValueError(
            f"qubit counts differ: {state_a.n_qubits} vs {state_b.n_qubits}")
    a_pure = isinstance(state_a, StateVector)
    b_pure = isinstance(state_b, StateVector)
    if a_pure and b_pure:
        return float(abs(np.vdot(state_a.amplitudes, state_b.amplitudes)) ** 2)
    if a_pure or b_pure:
        psi = (state_a if a_pure else state_b).amplitudes
        rho = (state_b if a_pure else state_a).matrix
        value = float(np.real(np.vdot(psi, rho @ psi)))
    else:
        root = _psd_sqrt(state_a.matrix)
        inner = root @ state_b.matrix @ root
        w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
        if float(w[0]) < -1e-6:
            raise InvalidStateError(f"eigenvalue {w[0]} below -1e-6")
        w = np.where(w > 0.0, w, 0.0)
        value = float(np.sum(np.sqrt(w)) ** 2)
    if value < 0.0:
        if value < -1e-6:
            raise InvalidStateError(f"fidelity {value} below -1e-6")
        value = 0.0
    return value


def equal_up_to_global_phase(a: StateVector, b: StateVector, tol: float = 1e-9) -> bool:
    """True iff a = c * b for some unit-modulus c, within tol per amplitude."""
    if a.n_qubits != b.n_qubits:
        return False
    overlap = np.vdot(b.amplitudes, a.amplitudes)
    if abs(overlap) < tol:
        return False
    c = overlap / abs(overlap)
    return bool(float(np.max(np.abs(a.amplitudes - c * b.amplitudes))) <= tol)
