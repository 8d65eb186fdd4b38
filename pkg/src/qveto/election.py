"""Noisy election runs: hop-by-hop qubit routing, shots, and fidelity.

The tally station (VA) prepares the resource state, sends the travel
qubit(s) around the voter ring VA -> V1 -> ... -> Vn -> VA, decodes and
measures.  Noise from a NoiseModel enters at three points: hop channels on
each travel qubit once per transit, gate channels after matching gates,
and readout flips on the final distribution.

Fidelity is always taken on the pre-measurement state, right before the
decode stage, against the ideal pure state of the same round; decode-stage
noise and readout flips therefore lower success probability but not
fidelity, mirroring how output-state quality and readout quality are
reported separately.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from .noise import (
    NoiseModel,
    GateNoise,
    HopNoise,
    apply_channel,
    apply_readout_flip,
    channel_for,
)
from .protocols import (
    Decision,
    RoundCircuit,
    VoteVector,
    max_iterations,
    protocol_a_round,
    protocol_a_run,
    protocol_b_run,
    round_circuit_a,
    round_circuit_b,
    variant_by_name,
    verdict_b,
)
from .qcore import (
    DensityMatrix,
    OutcomeDistribution,
    ShotCounts,
    StateVector,
    _multinomial_counts,
    apply_gate_dm,
    basis_state,
    fidelity,
    measure_probs,
    to_density,
)

PROTOCOLS = ("a", "b-ghz", "b-cluster")
PLACEMENTS = ("hop", "gate")

MAX_SEED = 2 ** 64 - 1

_VARIANT_NAMES = {"b-ghz": "ghz3", "b-cluster": "cluster4"}


def _variant_for(protocol: str):
    return variant_by_name(_VARIANT_NAMES[protocol])


@dataclass(frozen=True, eq=False)
class ElectionConfig:
    """Everything an election run needs besides the ballot itself."""

    protocol: str
    n_voters: int
    shots: int = 8192
    seed: int = 0
    noise: NoiseModel = field(default_factory=NoiseModel)
    repeats: int = 1

    def __post_init__(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ValueError(
                f"unknown protocol {self.protocol!r}, expected one of {PROTOCOLS}")
        if self.protocol != "a":
            fixed = len(_variant_for(self.protocol).encoding)
            if self.n_voters != fixed:
                raise ValueError(
                    f"protocol {self.protocol!r} fixes {fixed} voters, "
                    f"got {self.n_voters}")
        if self.shots < 1:
            raise ValueError(f"shots must be positive, got {self.shots}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be positive, got {self.repeats}")
        if not 0 <= self.seed <= MAX_SEED:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if not isinstance(self.noise, NoiseModel):
            raise ValueError("noise must be a NoiseModel")


@dataclass(frozen=True)
class TransferEvent:
    """One payload movement between parties during one iteration."""

    party_from: str
    party_to: str
    kind: str  # "qubit-transfer" or "classical-announcement"
    iteration: int


@dataclass(frozen=True, eq=False)
class Transcript:
    """Ordered event log plus the sampled counts of every iteration."""

    events: tuple[TransferEvent, ...]
    readout_counts: tuple[ShotCounts, ...]

    def qubit_hops(self, iteration: int) -> list[tuple[str, str]]:
        return [
            (e.party_from, e.party_to)
            for e in self.events
            if e.iteration == iteration and e.kind == "qubit-transfer"
        ]

    def to_dict(self) -> dict:
        return {
            "events": [
                {
                    "party_from": e.party_from,
                    "party_to": e.party_to,
                    "kind": e.kind,
                    "iteration": e.iteration,
                }
                for e in self.events
            ],
            "readout_counts": [dict(c.counts) for c in self.readout_counts],
        }


@dataclass(frozen=True, eq=False)
class IterationResult:
    """Sampled and exact figures for one protocol round."""

    iteration: int  # 1-based
    t: int          # 0-based round index; fixes the veto phase gate
    counts: ShotCounts
    modal_outcome: str
    expected_outcome: str
    success_probability: float
    fidelity_vs_ideal: float
    conclusive: bool

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "modal_outcome": self.modal_outcome,
            "expected_outcome": self.expected_outcome,
            "success_probability": self.success_probability,
            "fidelity_vs_ideal": self.fidelity_vs_ideal,
            "conclusive": self.conclusive,
            "counts": dict(self.counts.counts),
        }


@dataclass(frozen=True)
class RepeatsSummary:
    """Final-iteration fidelity and success statistics across repeats."""

    fidelity_mean: float
    fidelity_std: float
    fidelities: tuple[float, ...]
    success_probabilities: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "fidelity_mean": self.fidelity_mean,
            "fidelity_std": self.fidelity_std,
            "fidelities": list(self.fidelities),
            "success_probabilities": list(self.success_probabilities),
        }


@dataclass(frozen=True, eq=False)
class ElectionReport:
    """Full result of run_election; counts and transcript are repeat 1's."""

    protocol: str
    votes: str
    n_voters: int
    shots: int
    seed: int
    repeats: int
    decision: Decision
    iterations: tuple[IterationResult, ...]
    repeats_summary: RepeatsSummary
    transcript: Transcript

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "votes": self.votes,
            "n_voters": self.n_voters,
            "shots": self.shots,
            "seed": self.seed,
            "repeats": self.repeats,
            "decision": self.decision.value,
            "iterations": [it.to_dict() for it in self.iterations],
            "repeats_summary": self.repeats_summary.to_dict(),
            "transcript": self.transcript.to_dict(),
        }


def fidelity_vs_ideal(noisy_pre_measure: DensityMatrix, ideal: StateVector) -> float:
    """Overlap of the noisy pre-measurement state with the ideal pure one."""
    if noisy_pre_measure.n_qubits != ideal.n_qubits:
        raise ValueError(
            f"qubit counts differ: {noisy_pre_measure.n_qubits} vs {ideal.n_qubits}")
    return fidelity(ideal, noisy_pre_measure)


# ---------------------------------------------------------------------------
# noisy round execution


def _apply_ops(rho: DensityMatrix, ops, noise: NoiseModel) -> DensityMatrix:
    for gate, targets in ops:
        rho = apply_gate_dm(rho, gate, targets)
        for channel, qubit in noise.gate_noise_for(gate.arity, targets):
            rho = apply_channel(rho, channel, qubit)
    return rho


def _transit(rho: DensityMatrix, noise: NoiseModel,
             travel_qubits: tuple[int, ...]) -> DensityMatrix:
    for qubit in travel_qubits:
        for channel in noise.hop_channels_for(qubit):
            rho = apply_channel(rho, channel, qubit)
    return rho


def _run_round(
    circuit: RoundCircuit, noise: NoiseModel
) -> tuple[DensityMatrix, OutcomeDistribution]:
    """Density-matrix execution of one round; returns the pre-measurement
    state and the readout distribution after decode and readout flips."""
    rho = to_density(basis_state(circuit.n_qubits))
    rho = _apply_ops(rho, circuit.prep, noise)
    for voter_ops in circuit.per_voter:
        rho = _transit(rho, noise, circuit.travel_qubits)
        rho = _apply_ops(rho, voter_ops, noise)
    rho = _transit(rho, noise, circuit.travel_qubits)
    pre_measure = rho
    rho = _apply_ops(rho, circuit.decode, noise)
    dist = measure_probs(rho)
    flips = {q: p for q, p in noise.readout_flip.items() if q < circuit.n_qubits}
    if flips:
        dist = apply_readout_flip(dist, flips)
    return pre_measure, dist


def _ideal_round(protocol: str, votes: VoteVector,
                 t: int) -> tuple[StateVector, OutcomeDistribution]:
    if protocol == "a":
        return protocol_a_round(votes, t)
    pre, dist, _ = protocol_b_run(votes, _variant_for(protocol))
    return pre, dist


def _round_circuit(protocol: str, votes: VoteVector, t: int) -> RoundCircuit:
    if protocol == "a":
        return round_circuit_a(votes, t)
    return round_circuit_b(votes, _variant_for(protocol))


def _ring_events(n_voters: int, iteration: int) -> list[TransferEvent]:
    parties = ["VA"] + [f"V{i}" for i in range(1, n_voters + 1)] + ["VA"]
    events = [
        TransferEvent(a, b, "qubit-transfer", iteration)
        for a, b in zip(parties, parties[1:])
    ]
    events.append(TransferEvent("VA", "all", "classical-announcement", iteration))
    return events


def _execute_iteration(
    protocol: str,
    votes: VoteVector,
    t: int,
    config: ElectionConfig,
    rng: np.random.Generator,
    repeat_seed: int,
) -> IterationResult:
    circuit = _round_circuit(protocol, votes, t)
    pre_measure, dist = _run_round(circuit, config.noise)
    ideal_pre, ideal_dist = _ideal_round(protocol, votes, t)
    expected = ideal_dist.modal()
    counts = ShotCounts(
        config.shots, _multinomial_counts(rng, dist, config.shots), repeat_seed)
    modal = counts.modal()
    if protocol == "a":
        conclusive = modal == "10"
    else:
        conclusive = modal != "0" * circuit.n_qubits
    return IterationResult(
        iteration=t + 1,
        t=t,
        counts=counts,
        modal_outcome=modal,
        expected_outcome=expected,
        success_probability=counts.frequency(expected),
        fidelity_vs_ideal=fidelity_vs_ideal(pre_measure, ideal_pre),
        conclusive=conclusive,
    )


def _run_once(
    config: ElectionConfig, votes: VoteVector, repeat_seed: int
) -> tuple[tuple[IterationResult, ...], Decision, tuple[TransferEvent, ...]]:
    rng = np.random.default_rng(repeat_seed)
    iterations: list[IterationResult] = []
    events: list[TransferEvent] = []
    if config.protocol == "a":
        decision = Decision.PASS
        for t in range(max_iterations(config.n_voters)):
            result = _execute_iteration(
                config.protocol, votes, t, config, rng, repeat_seed)
            iterations.append(result)
            events.extend(_ring_events(config.n_voters, result.iteration))
            if result.conclusive:
                decision = Decision.REJECT
                break
    else:
        result = _execute_iteration(config.protocol, votes, 0, config, rng, repeat_seed)
        iterations.append(result)
        events.extend(_ring_events(config.n_voters, 1))
        decision = verdict_b(result.modal_outcome)
    return tuple(iterations), decision, tuple(events)


def run_election(config: ElectionConfig, votes: VoteVector) -> ElectionReport:
    """Run the configured protocol under noise, `repeats` times.

    Repeat r is seeded with config.seed + r and re-samples the shot noise;
    the exact density-matrix evolution does not depend on the seed.  The
    returned counts, transcript and decision are the first repeat's, while
    repeats_summary aggregates final-iteration figures over all repeats.
    """
    if votes.n_voters != config.n_voters:
        raise ValueError(
            f"ballot has {votes.n_voters} votes but the election expects "
            f"{config.n_voters}")
    fidelities: list[float] = []
    successes: list[float] = []
    first: tuple | None = None
    for r in range(config.repeats):
        iterations, decision, events = _run_once(config, votes, config.seed + r)
        fidelities.append(iterations[-1].fidelity_vs_ideal)
        successes.append(iterations[-1].success_probability)
        if r == 0:
            first = (iterations, decision, events)
    iterations, decision, events = first
    summary = RepeatsSummary(
        fidelity_mean=math.fsum(fidelities) / len(fidelities),
        fidelity_std=statistics.pstdev(fidelities),
        fidelities=tuple(fidelities),
        success_probabilities=tuple(successes),
    )
    transcript = Transcript(
        events=events,
        readout_counts=tuple(it.counts for it in iterations),
    )
    return ElectionReport(
        protocol=config.protocol,
        votes=votes.bitstring(),
        n_voters=config.n_voters,
        shots=config.shots,
        seed=config.seed,
        repeats=config.repeats,
        decision=decision,
        iterations=iterations,
        repeats_summary=summary,
        transcript=transcript,
    )


# ---------------------------------------------------------------------------
# noise sweeps


@dataclass(frozen=True)
class SweepRow:
    protocol: str
    noise_kind: str
    strength: float
    placement: str
    fidelity: float
    success_probability: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "noise_kind": self.noise_kind,
            "strength": self.strength,
            "placement": self.placement,
            "fidelity": self.fidelity,
            "success_probability": self.success_probability,
            "seed": self.seed,
        }


def _final_round_index(protocol: str, votes: VoteVector) -> int:
    """Last round the noiseless run visits; sweeps pin their schedule to it
    so a row measures state degradation, not decision dynamics."""
    if protocol == "a":
        iterations, _ = protocol_a_run(votes)
        return iterations[-1].t
    return 0


def noise_sweep(
    protocol: str,
    votes: VoteVector,
    kind: str,
    strengths,
    placement: str = "hop",
    seed: int = 0,
    shots: int = 8192,
) -> tuple[SweepRow, ...]:
    """One row of (fidelity, success probability) per channel strength.

    Row i samples its counts with seed + i so rows are independent and the
    whole table is reproducible.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(
            f"unknown protocol {protocol!r}, expected one of {PROTOCOLS}")
    if placement not in PLACEMENTS:
        raise ValueError(
            f"unknown placement {placement!r}, expected one of {PLACEMENTS}")
    values = [float(s) for s in strengths]
    for s in values:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"strength {s} out of [0, 1]")
    t_final = _final_round_index(protocol, votes)
    circuit = _round_circuit(protocol, votes, t_final)
    ideal_pre, ideal_dist = _ideal_round(protocol, votes, t_final)
    expected = ideal_dist.modal()
    rows = []
    for i, s in enumerate(values):
        channel = channel_for(kind, s)
        if placement == "hop":
            model = NoiseModel(hop_channels=(HopNoise(channel),))
        else:
            model = NoiseModel(gate_channels=(GateNoise(channel),))
        pre_measure, dist = _run_round(circuit, model)
        rng = np.random.default_rng(seed + i)
        counts = ShotCounts(shots, _multinomial_counts(rng, dist, shots), seed + i)
        rows.append(SweepRow(
            protocol=protocol,
            noise_kind=channel.kind,
            strength=s,
            placement=placement,
            fidelity=fidelity_vs_ideal(pre_measure, ideal_pre),
            success_probability=counts.frequency(expected),
            seed=seed + i,
        ))
    return tuple(rows)
