"""Single-qubit Kraus channels, readout flips, and device noise models.

A NoiseModel holds three independent pieces: channels applied to travel
qubits once per transit between parties (hop placement), channels applied
after gates (gate placement), and per-qubit symmetric readout flips. A
calibration file of measured hardware errors can be turned into a gate-placed
model; coherence times and frequencies are parsed and kept but do not enter
that model.
"""

from __future__ import annotations

import heapq
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .qcore import ATOL, DensityMatrix, OutcomeDistribution, _conjugate

__all__ = [
    "CHANNEL_KINDS",
    "CalibrationError",
    "ConfigurationError",
    "KrausChannel",
    "HopNoise",
    "GateNoise",
    "NoiseModel",
    "CalibrationRecord",
    "amplitude_damping",
    "phase_damping",
    "depolarizing",
    "bit_flip",
    "channel_for",
    "apply_channel",
    "apply_readout_flip",
    "load_calibration",
    "bundled_calibration",
    "device_model_from_calibration",
]


class CalibrationError(ValueError):
    """A calibration document is missing or malformed."""


class ConfigurationError(ValueError):
    """A noise model cannot cover the operation it was asked about."""


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Single-qubit channel as a tuple of 2x2 Kraus operators."""

    kind: str
    strength: float
    operators: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError(f"strength must be within [0, 1], got {self.strength}")
        ops = []
        total = np.zeros((2, 2), dtype=np.complex128)
        for op in self.operators:
            op = np.array(op, dtype=np.complex128)
            if op.shape != (2, 2) or not np.all(np.isfinite(op)):
                raise ValueError(f"channel {self.kind!r}: bad Kraus operator")
            op.setflags(write=False)
            ops.append(op)
            total += op.conj().T @ op
        if float(np.max(np.abs(total - np.eye(2)))) > ATOL:
            raise ValueError(f"channel {self.kind!r}: Kraus operators not complete")
        object.__setattr__(self, "operators", tuple(ops))

    @property
    def is_identity(self) -> bool:
        return len(self.operators) == 1 and np.array_equal(self.operators[0], np.eye(2))


def _check_strength(strength: float) -> float:
    strength = float(strength)
    if not 0.0 <= strength <= 1.0:
        raise ValueError(f"strength must be within [0, 1], got {strength}")
    return strength


def _drop_zero(operators) -> tuple[np.ndarray, ...]:
    kept = tuple(op for op in operators if np.any(op))
    return kept if kept else (np.eye(2),)


def amplitude_damping(strength: float) -> KrausChannel:
    """Energy decay toward |0>: K0 = diag(1, sqrt(1-s)), K1 = sqrt(s)|0><1|."""
    s = _check_strength(strength)
    k0 = np.diag([1.0, math.sqrt(1.0 - s)])
    k1 = np.array([[0.0, math.sqrt(s)], [0.0, 0.0]])
    return KrausChannel("amplitude_damping", s, _drop_zero((k0, k1)))


def phase_damping(strength: float) -> KrausChannel:
    """Pure dephasing: K0 = diag(1, sqrt(1-s)), K1 = diag(0, sqrt(s))."""
    s = _check_strength(strength)
    k0 = np.diag([1.0, math.sqrt(1.0 - s)])
    k1 = np.diag([0.0, math.sqrt(s)])
    return KrausChannel("phase_damping", s, _drop_zero((k0, k1)))


def depolarizing(strength: float) -> KrausChannel:
    """rho -> (1-s) rho + s I/2, via Pauli operators weighted s/4."""
    s = _check_strength(strength)
    ops = (
        math.sqrt(1.0 - 3.0 * s / 4.0) * np.eye(2),
        math.sqrt(s / 4.0) * np.array([[0, 1], [1, 0]], dtype=float),
        math.sqrt(s / 4.0) * np.array([[0, -1j], [1j, 0]]),
        math.sqrt(s / 4.0) * np.diag([1.0, -1.0]),
    )
    return KrausChannel("depolarizing", s, _drop_zero(ops))


def bit_flip(strength: float) -> KrausChannel:
    """X applied with probability s."""
    s = _check_strength(strength)
    ops = (
        math.sqrt(1.0 - s) * np.eye(2),
        math.sqrt(s) * np.array([[0, 1], [1, 0]], dtype=float),
    )
    return KrausChannel("bit_flip", s, _drop_zero(ops))


CHANNEL_KINDS = ("amplitude_damping", "phase_damping", "depolarizing", "bit_flip")

_CHANNEL_MAKERS = {
    "amplitude_damping": amplitude_damping,
    "amplitude": amplitude_damping,
    "phase_damping": phase_damping,
    "phase": phase_damping,
    "depolarizing": depolarizing,
    "bit_flip": bit_flip,
    "bit": bit_flip,
}


def channel_for(kind: str, strength: float) -> KrausChannel:
    """Build a channel by kind name; short aliases are accepted."""
    maker = _CHANNEL_MAKERS.get(kind.lower())
    if maker is None:
        raise ValueError(
            f"unknown channel kind {kind!r}; expected one of {', '.join(CHANNEL_KINDS)}")
    return maker(strength)


def apply_channel(rho: DensityMatrix, channel: KrausChannel, qubit: int) -> DensityMatrix:
    """Sum of K rho K+ over the channel's operators, on one qubit."""
    if not 0 <= qubit < rho.n_qubits:
        raise ValueError(f"qubit {qubit} out of range for {rho.n_qubits} qubits")
    if channel.is_identity:
        return rho
    total = np.zeros_like(rho.matrix)
    for op in channel.operators:
        total = total + _conjugate(rho.matrix, op, (qubit,), rho.n_qubits)
    return DensityMatrix(rho.n_qubits, total)


def apply_readout_flip(dist: OutcomeDistribution,
                       flips: Mapping[int, float]) -> OutcomeDistribution:
    """Mix the distribution with independent symmetric bit flips per qubit."""
    n = dist.n_qubits
    for qubit, p in flips.items():
        if not 0 <= int(qubit) < n:
            raise ValueError(f"qubit {qubit} out of range for {n} qubits")
        if not 0.0 <= float(p) <= 1.0:
            raise ValueError(f"flip probability {p} out of range")
    if all(float(p) == 0.0 for p in flips.values()):
        return dist
    mixer = np.ones((1, 1))
    for qubit in range(n):
        f = float(flips.get(qubit, 0.0))
        mixer = np.kron(mixer, np.array([[1.0 - f, f], [f, 1.0 - f]]))
    return OutcomeDistribution.from_vector(n, mixer @ dist.to_vector())


@dataclass(frozen=True, eq=False)
class HopNoise:
    """Channel applied to travel qubits once per transit between parties.

    `qubits` restricts the rule to the listed travel qubits; None hits all.
    """

    channel: KrausChannel
    qubits: tuple[int, ...] | None = None


@dataclass(frozen=True, eq=False)
class GateNoise:
    """Channel applied to gate targets after a matching gate.

    arity restricts to one- or two-qubit gates (None matches both); qubits
    restricts to a specific target or unordered pair (None matches any).
    """

    channel: KrausChannel
    arity: int | None = None
    qubits: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.arity not in (None, 1, 2):
            raise ValueError(f"arity must be 1, 2 or None, got {self.arity}")
        if self.qubits is not None:
            object.__setattr__(self, "qubits", tuple(sorted(int(q) for q in self.qubits)))


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Hop channels, gate channels, and readout flips; default is noiseless."""

    hop_channels: tuple[HopNoise, ...] = ()
    gate_channels: tuple[GateNoise, ...] = ()
    readout_flip: Mapping[int, float] = field(default_factory=dict)
    strict_two_qubit_pairs: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "hop_channels", tuple(self.hop_channels))
        object.__setattr__(self, "gate_channels", tuple(self.gate_channels))
        object.__setattr__(self, "readout_flip",
                           {int(q): float(p) for q, p in self.readout_flip.items()})

    @property
    def is_identity(self) -> bool:
        return (all(h.channel.is_identity for h in self.hop_channels)
                and all(g.channel.is_identity for g in self.gate_channels)
                and all(p == 0.0 for p in self.readout_flip.values()))

    def hop_channels_for(self, qubit: int) -> list[KrausChannel]:
        """Channels to apply to one travel qubit for a single transit."""
        return [rule.channel for rule in self.hop_channels
                if rule.qubits is None or qubit in rule.qubits]

    def gate_noise_for(self, arity: int, targets: Sequence[int]) -> list[tuple[KrausChannel, int]]:
        """(channel, qubit) applications due after a gate on `targets`."""
        key = tuple(sorted(int(q) for q in targets))
        apps: list[tuple[KrausChannel, int]] = []
        pair_covered = False
        for rule in self.gate_channels:
            if rule.arity is not None and rule.arity != arity:
                continue
            if rule.qubits is not None and rule.qubits != key:
                continue
            if rule.arity == 2 and rule.qubits is not None:
                pair_covered = True
            apps.extend((rule.channel, q) for q in targets)
        if self.strict_two_qubit_pairs and arity == 2 and not pair_covered:
            raise ConfigurationError(
                f"no two-qubit error calibrated for qubit pair {key}")
        return apps

    def merged_with(self, other: "NoiseModel") -> "NoiseModel":
        """Union of the rules; readout flips compose as independent flips."""
        flips = dict(self.readout_flip)
        for qubit, p in other.readout_flip.items():
            mine = flips.get(qubit, 0.0)
            flips[qubit] = mine + p - 2.0 * mine * p
        return NoiseModel(
            hop_channels=self.hop_channels + other.hop_channels,
            gate_channels=self.gate_channels + other.gate_channels,
            readout_flip=flips,
            strict_two_qubit_pairs=self.strict_two_qubit_pairs or other.strict_two_qubit_pairs,
        )


@dataclass(frozen=True)
class CalibrationRecord:
    """Measured single-qubit figures plus two-qubit gate errors by pair."""

    qubit_id: int
    t1_us: float
    t2_us: float
    frequency_ghz: float
    readout_error: float
    pauli_x_error: float
    cnot_errors: Mapping[tuple[int, int], float]


_CNOT_KEY = re.compile(r"^cx(\d+)_(\d+)$")


def _require_number(entry: Mapping, key: str, path: str, low=None, high=None) -> float:
    if key not in entry:
        raise CalibrationError(f"{path}.{key} is missing")
    value = entry[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CalibrationError(f"{path}.{key} must be a number, got {value!r}")
    value = float(value)
    if low is not None and value < low:
        raise CalibrationError(f"{path}.{key} must be >= {low}, got {value}")
    if high is not None and value > high:
        raise CalibrationError(f"{path}.{key} must be <= {high}, got {value}")
    return value


def _parse_record(entry, path: str) -> CalibrationRecord:
    if not isinstance(entry, dict):
        raise CalibrationError(f"{path} must be an object")
    if "qubit_id" not in entry:
        raise CalibrationError(f"{path}.qubit_id is missing")
    cnot_raw = entry.get("cnot_errors", {})
    if not isinstance(cnot_raw, dict):
        raise CalibrationError(f"{path}.cnot_errors must be an object")
    cnot_errors: dict[tuple[int, int], float] = {}
    for key in cnot_raw:
        match = _CNOT_KEY.match(key)
        if not match:
            raise CalibrationError(
                f"{path}.cnot_errors key {key!r} is not of the form cx<i>_<j>")
        value = _require_number(cnot_raw, key, f"{path}.cnot_errors", low=0.0, high=1.0)
        cnot_errors[(int(match.group(1)), int(match.group(2)))] = value
    return CalibrationRecord(
        qubit_id=int(entry["qubit_id"]),
        t1_us=_require_number(entry, "t1_us", path, low=0.0),
        t2_us=_require_number(entry, "t2_us", path, low=0.0),
        frequency_ghz=_require_number(entry, "frequency_ghz", path, low=0.0),
        readout_error=_require_number(entry, "readout_error", path, low=0.0, high=1.0),
        pauli_x_error=_require_number(entry, "pauli_x_error", path, low=0.0, high=1.0),
        cnot_errors=cnot_errors,
    )


def _records_from_text(text: str, name: str) -> list[CalibrationRecord]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CalibrationError(f"{name}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("qubits"), list):
        raise CalibrationError(f"{name}: qubits must be a list")
    records = [_parse_record(entry, f"qubits[{i}]")
               for i, entry in enumerate(doc["qubits"])]
    if not records:
        raise CalibrationError(f"{name}: qubits is empty")
    return records


def load_calibration(path) -> list[CalibrationRecord]:
    """Parse a calibration JSON file into records, validating every field."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CalibrationError(f"cannot read calibration file {path}: {exc}") from exc
    return _records_from_text(text, path.name)


def bundled_calibration() -> list[CalibrationRecord]:
    """The transcription of the seven-qubit device data shipped with the package."""
    text = resources.files("qveto").joinpath("data/casablanca.json").read_text("utf-8")
    return _records_from_text(text, "casablanca.json")


def _cheapest_path_cost(edges: Mapping[frozenset, float], start: int, goal: int) -> float | None:
    adjacency: dict[int, list[tuple[int, float]]] = {}
    for pair, cost in edges.items():
        a, b = tuple(pair)
        adjacency.setdefault(a, []).append((b, cost))
        adjacency.setdefault(b, []).append((a, cost))
    heap = [(0.0, start)]
    seen: set[int] = set()
    while heap:
        cost, node = heapq.heappop(heap)
        if node == goal:
            return cost
        if node in seen:
            continue
        seen.add(node)
        for neighbor, step in adjacency.get(node, ()):
            if neighbor not in seen:
                heapq.heappush(heap, (cost + step, neighbor))
    return None


def device_model_from_calibration(records: Sequence[CalibrationRecord],
                                  mapping: Mapping[int, int] | None = None) -> NoiseModel:
    """Gate-placed depolarizing noise plus readout flips from measured errors.

    `mapping` sends simulation qubit indices (roles) to physical qubit ids;
    by default role i is the i-th record in qubit-id order. Every one-qubit
    gate on a role draws depolarizing noise at that qubit's X-gate error;
    every two-qubit gate draws it on both qubits at the pair's CNOT error.
    A pair without a direct entry falls back to the summed errors of the
    cheapest calibrated path between the qubits (the detour hardware would
    route through); a pair that cannot be reached at all raises
    ConfigurationError when a gate touches it. T1/T2 and frequency are
    carried on the records but unused here.
    """
    by_id = {record.qubit_id: record for record in records}
    if mapping is None:
        mapping = {role: qubit_id for role, qubit_id in enumerate(sorted(by_id))}
    for role, qubit_id in mapping.items():
        if qubit_id not in by_id:
            raise ConfigurationError(
                f"role {role} mapped to unknown qubit id {qubit_id}")

    edges: dict[frozenset, float] = {}
    for record in records:
        for (control, target), error in record.cnot_errors.items():
            edges[frozenset((control, target))] = float(error)

    gate_rules: list[GateNoise] = []
    flips: dict[int, float] = {}
    roles = sorted(mapping)
    for role in roles:
        record = by_id[mapping[role]]
        gate_rules.append(GateNoise(depolarizing(record.pauli_x_error),
                                    arity=1, qubits=(role,)))
        flips[role] = record.readout_error
    for i, role_a in enumerate(roles):
        for role_b in roles[i + 1:]:
            pair = frozenset((mapping[role_a], mapping[role_b]))
            cost = edges.get(pair)
            if cost is None:
                cost = _cheapest_path_cost(edges, mapping[role_a], mapping[role_b])
            if cost is None:
                continue  # left uncovered; strict lookup reports it on use
            gate_rules.append(GateNoise(depolarizing(min(cost, 1.0)),
                                        arity=2, qubits=(role_a, role_b)))
    return NoiseModel(gate_channels=tuple(gate_rules), readout_flip=flips,
                      strict_two_qubit_pairs=True)
