"""Noiseless veto protocols over entangled resources.

Two protocols are provided.  The iterative one distributes a Bell pair per
round and lets every vetoing voter rotate the travel qubit by a phase that
shrinks as rounds progress; a veto eventually flips the pair into the
orthogonal Bell state, which the tally station detects.  The single-round
one distributes two travel qubits of a GHZ or cluster resource, each voter
applies a fixed two-qubit gate pair for yes or for veto, and a single
readout separates the unanimous case from everything else.

Everything here is pure-state and deterministic.  Noisy execution lives in
qveto.election, which reuses the RoundCircuit layouts built here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .qcore import (
    CNOT,
    CZ,
    H,
    I,
    IY,
    X,
    Z,
    GateMatrix,
    OutcomeDistribution,
    StateVector,
    apply_gate,
    basis_state,
    measure_probs,
)

GateOp = tuple[GateMatrix, tuple[int, ...]]

MIN_VOTERS = 2
MAX_VOTERS = 8


@dataclass(frozen=True)
class VoteVector:
    """Ballot of one boolean per voter, True meaning veto."""

    votes: tuple[bool, ...]

    def __post_init__(self):
        if not MIN_VOTERS <= len(self.votes) <= MAX_VOTERS:
            raise ValueError(
                f"need between {MIN_VOTERS} and {MAX_VOTERS} voters, "
                f"got {len(self.votes)}")
        if any(not isinstance(v, bool) for v in self.votes):
            raise ValueError("votes must be booleans")

    @classmethod
    def from_bitstring(cls, bits: str) -> "VoteVector":
        if any(c not in "01" for c in bits):
            raise ValueError(f"vote string must be over 0/1, got {bits!r}")
        return cls(tuple(c == "1" for c in bits))

    @property
    def n_voters(self) -> int:
        return len(self.votes)

    @property
    def veto_count(self) -> int:
        return sum(self.votes)

    @property
    def vetoers(self) -> tuple[int, ...]:
        """1-based indices of the voters who veto."""
        return tuple(i for i, v in enumerate(self.votes, start=1) if v)

    def bitstring(self) -> str:
        return "".join("1" if v else "0" for v in self.votes)


class Decision(str, Enum):
    PASS = "Pass"
    REJECT = "Reject"
    UNANIMOUS = "Unanimous"
    NOT_UNANIMOUS = "NotUnanimous"


class BellOutcome(str, Enum):
    PHI_PLUS = "phi_plus"
    PHI_MINUS = "phi_minus"
    PSI_PLUS = "psi_plus"
    PSI_MINUS = "psi_minus"

    @classmethod
    def from_readout(cls, readout: str) -> "BellOutcome":
        try:
            return _BELL_BY_READOUT[readout]
        except KeyError:
            raise ValueError(f"not a two-qubit readout: {readout!r}") from None


_BELL_BY_READOUT = {
    "00": BellOutcome.PHI_PLUS,
    "10": BellOutcome.PHI_MINUS,
    "01": BellOutcome.PSI_PLUS,
    "11": BellOutcome.PSI_MINUS,
}


@dataclass(frozen=True)
class ProtocolAIteration:
    """Record of one Bell round: 0-based round index t and what came out."""

    t: int
    bell_outcome: BellOutcome
    readout: str
    conclusive: bool


@dataclass(frozen=True)
class RoundCircuit:
    """Gate layout of one protocol round.

    prep builds the resource, per_voter[i] holds voter i+1's gates in travel
    order, decode maps the entangled basis back to computational readout.
    The noisy engine walks the same structure, inserting channel
    applications between stages.
    """

    n_qubits: int
    travel_qubits: tuple[int, ...]
    prep: tuple[GateOp, ...]
    per_voter: tuple[tuple[GateOp, ...], ...]
    decode: tuple[GateOp, ...]


def max_iterations(n_voters: int) -> int:
    """Rounds after which an all-pass run may safely stop.

    Surviving round j inconclusively forces the veto count to be divisible
    by 2^j, so ceil(log2(n)) + 1 inconclusive rounds leave zero as the only
    possible count.
    """
    if n_voters < MIN_VOTERS:
        raise ValueError(f"need at least {MIN_VOTERS} voters, got {n_voters}")
    return 1 + (n_voters - 1).bit_length()


def sigma_z_t(t: int) -> GateMatrix:
    """Veto phase gate for round t: diag(1, exp(i pi / 2^t))."""
    if not isinstance(t, int) or t < 0:
        raise ValueError(f"round index must be a non-negative integer, got {t}")
    phase = np.exp(1j * np.pi / 2 ** t)
    return GateMatrix(f"sz{t}", 1, np.array([[1, 0], [0, phase]], dtype=complex))


def round_circuit_a(votes: VoteVector, t: int) -> RoundCircuit:
    """Bell-pair round: qubit 0 stays home, qubit 1 travels the ring."""
    veto_gate = sigma_z_t(t)
    per_voter = tuple(
        ((veto_gate, (1,)),) if veto else () for veto in votes.votes)
    return RoundCircuit(
        n_qubits=2,
        travel_qubits=(1,),
        prep=((H, (0,)), (CNOT, (0, 1))),
        per_voter=per_voter,
        decode=((CNOT, (0, 1)), (H, (0,))),
    )


@dataclass(frozen=True)
class ProtocolBVariant:
    """A single-round resource: prep circuit plus the per-voter gate pairs.

    encoding[i] is voter i+1's (first, second) gate pair for a veto; a yes
    vote applies nothing.  The first gate acts on travel_qubits[0], the
    second on travel_qubits[1].
    """

    name: str
    n_qubits: int
    travel_qubits: tuple[int, ...]
    prep: tuple[GateOp, ...]
    encoding: tuple[tuple[GateMatrix, GateMatrix], ...]

    def initial_state(self) -> StateVector:
        state = basis_state(self.n_qubits)
        for gate, targets in self.prep:
            state = apply_gate(state, gate, targets)
        return state

    def decode_ops(self) -> tuple[GateOp, ...]:
        return tuple(
            (gate.dagger(), targets) for gate, targets in reversed(self.prep))


GHZ3 = ProtocolBVariant(
    name="ghz3",
    n_qubits=3,
    travel_qubits=(1, 2),
    prep=((H, (0,)), (CNOT, (0, 1)), (CNOT, (0, 2))),
    encoding=((X, I), (X, X), (IY, X), (IY, I)),
)

CLUSTER4 = ProtocolBVariant(
    name="cluster4",
    n_qubits=4,
    travel_qubits=(1, 2),
    prep=((H, (0,)), (H, (2,)), (CNOT, (0, 1)), (CNOT, (2, 3)), (CZ, (0, 2))),
    encoding=((X, IY), (X, Z), (IY, Z), (IY, IY)),
)

_VARIANTS = {variant.name: variant for variant in (GHZ3, CLUSTER4)}


def variant_by_name(name: str) -> ProtocolBVariant:
    try:
        return _VARIANTS[name]
    except KeyError:
        raise ValueError(
            f"unknown variant {name!r}, expected one of {sorted(_VARIANTS)}"
        ) from None


def round_circuit_b(votes: VoteVector, variant: ProtocolBVariant) -> RoundCircuit:
    if votes.n_voters != len(variant.encoding):
        raise ValueError(
            f"variant {variant.name!r} fixes {len(variant.encoding)} voters, "
            f"got {votes.n_voters}")
    per_voter = []
    for veto, gates in zip(votes.votes, variant.encoding):
        if veto:
            # identity halves of a gate pair are no physical operation,
            # so they never enter the circuit (and attract no gate noise)
            per_voter.append(tuple(
                (gate, (qubit,))
                for gate, qubit in zip(gates, variant.travel_qubits)
                if gate is not I))
        else:
            per_voter.append(())
    return RoundCircuit(
        n_qubits=variant.n_qubits,
        travel_qubits=variant.travel_qubits,
        prep=variant.prep,
        per_voter=tuple(per_voter),
        decode=variant.decode_ops(),
    )


def _run_circuit_pure(circuit: RoundCircuit) -> tuple[StateVector, OutcomeDistribution]:
    state = basis_state(circuit.n_qubits)
    for gate, targets in circuit.prep:
        state = apply_gate(state, gate, targets)
    for ops in circuit.per_voter:
        for gate, targets in ops:
            state = apply_gate(state, gate, targets)
    pre_measure = state
    for gate, targets in circuit.decode:
        state = apply_gate(state, gate, targets)
    return pre_measure, measure_probs(state)


def protocol_a_round(
    votes: VoteVector, t: int
) -> tuple[StateVector, OutcomeDistribution]:
    """One noiseless Bell round; returns the pre-decode state and readout law.

    With k vetoes the pre-decode state is (|00> + e^{i k pi/2^t}|11>)/sqrt(2)
    and the conclusive readout "10" appears with probability
    sin^2(k pi / 2^(t+1)).
    """
    return _run_circuit_pure(round_circuit_a(votes, t))


def protocol_a_run(
    votes: VoteVector,
) -> tuple[tuple[ProtocolAIteration, ...], Decision]:
    """Full iterative run on the noiseless most-likely path.

    Every round actually reached is deterministic: surviving rounds
    1..j inconclusively forces the veto count k to be a multiple of 2^j,
    which makes round j+1's readout law degenerate.  Rejects on the first
    conclusive round, passes once the iteration bound is exhausted.
    """
    iterations = []
    for t in range(max_iterations(votes.n_voters)):
        _, dist = protocol_a_round(votes, t)
        readout = dist.modal()
        conclusive = readout != "00"
        iterations.append(ProtocolAIteration(
            t=t,
            bell_outcome=BellOutcome.from_readout(readout),
            readout=readout,
            conclusive=conclusive,
        ))
        if conclusive:
            return tuple(iterations), Decision.REJECT
    return tuple(iterations), Decision.PASS


def verdict_b(readout: str) -> Decision:
    """All-zeros readout certifies a unanimous pass."""
    if set(readout) <= {"0"}:
        return Decision.UNANIMOUS
    return Decision.NOT_UNANIMOUS


def protocol_b_run(
    votes: VoteVector, variant: ProtocolBVariant
) -> tuple[StateVector, OutcomeDistribution, Decision]:
    """One noiseless single-round vote; returns pre-decode state, readout
    law and the decision drawn from the most likely readout."""
    pre_measure, dist = _run_circuit_pure(round_circuit_b(votes, variant))
    return pre_measure, dist, verdict_b(dist.modal())
