"""Tests for the noisy election engine.

Closed-form oracles, all derived by hand for votes = all-pass and hop
placement on the travel qubits (every iteration has n+1 = 5 transits for 4
voters, so a per-hop factor q compounds to q^5):

  phase damping, strength s, u = (1-s)^(5/2):
      bell pair F = (1+u)/2,  ghz F = (1+u^2)/2,  cluster F = ((1+u)^2)/4
  amplitude damping, strength g, v = (1-g)^(5/2):
      bell pair F = ((1+v)^2)/4
  bit flip, strength p:
      bell pair F = (1+(1-2p)^5)/2

Gate placement oracle: bit-flip gate noise on the bell protocol leaves the
H output invariant and hits both CNOT targets once, so F = (1-p)^2 + p^2.
"""

import itertools
import json
import math

import numpy as np
import pytest

from qveto.election import (
    ElectionConfig,
    ElectionReport,
    IterationResult,
    Transcript,
    fidelity_vs_ideal,
    noise_sweep,
    run_election,
)
from qveto.noise import (
    GateNoise,
    HopNoise,
    NoiseModel,
    bit_flip,
    bundled_calibration,
    channel_for,
    depolarizing,
    device_model_from_calibration,
    phase_damping,
)
from qveto.protocols import (
    Decision,
    VoteVector,
    protocol_a_round,
    protocol_a_run,
    protocol_b_run,
    variant_by_name,
)
from qveto.qcore import DensityMatrix, basis_state, to_density
from qveto.reference import SINGLE_ROUND_ROWS, vetoers_to_bitstring

TRANSITS = 5  # station -> v1 -> v2 -> v3 -> v4 -> station
VARIANTS = {"b-ghz": "ghz3", "b-cluster": "cluster4"}


def hop_model(kind: str, strength: float) -> NoiseModel:
    return NoiseModel(hop_channels=(HopNoise(channel_for(kind, strength)),))


def config(protocol, *, noise=None, shots=8192, seed=11, repeats=1, n_voters=4):
    return ElectionConfig(
        protocol=protocol, n_voters=n_voters, shots=shots, seed=seed,
        noise=noise if noise is not None else NoiseModel(), repeats=repeats)


class TestConfig:
    def test_defaults(self):
        cfg = ElectionConfig(protocol="a", n_voters=4)
        assert cfg.shots == 8192
        assert cfg.repeats == 1
        assert cfg.noise.is_identity

    def test_protocol_names(self):
        for name in ("a", "b-ghz", "b-cluster"):
            ElectionConfig(protocol=name, n_voters=4)
        with pytest.raises(ValueError):
            ElectionConfig(protocol="c", n_voters=4)

    def test_single_round_protocols_fix_four_voters(self):
        with pytest.raises(ValueError):
            ElectionConfig(protocol="b-ghz", n_voters=3)
        ElectionConfig(protocol="a", n_voters=6)

    def test_positive_shots_and_repeats(self):
        with pytest.raises(ValueError):
            ElectionConfig(protocol="a", n_voters=4, shots=0)
        with pytest.raises(ValueError):
            ElectionConfig(protocol="a", n_voters=4, repeats=0)
        with pytest.raises(ValueError):
            ElectionConfig(protocol="a", n_voters=4, seed=-1)

    def test_votes_must_match_voter_count(self):
        with pytest.raises(ValueError):
            run_election(config("a", n_voters=5), VoteVector.from_bitstring("0000"))


class TestZeroNoise:
    def test_bell_protocol_three_vetoes_rejects_immediately(self):
        report = run_election(config("a"), VoteVector.from_bitstring("1101"))
        assert report.decision is Decision.REJECT
        assert len(report.iterations) == 1
        first = report.iterations[0]
        assert first.modal_outcome == "10"
        assert first.success_probability == pytest.approx(1.0, abs=1e-6)
        assert first.fidelity_vs_ideal == pytest.approx(1.0, abs=1e-9)

    def test_cluster_no_vetoes_unanimous(self):
        report = run_election(config("b-cluster"), VoteVector.from_bitstring("0000"))
        assert report.decision is Decision.UNANIMOUS
        assert report.iterations[0].modal_outcome == "0000"
        assert report.iterations[0].fidelity_vs_ideal == pytest.approx(1.0, abs=1e-9)

    def test_bell_decisions_all_sixteen(self):
        for bits in itertools.product("01", repeat=4):
            votes = VoteVector.from_bitstring("".join(bits))
            report = run_election(config("a"), votes)
            if votes.veto_count == 0:
                assert report.decision is Decision.PASS
                assert len(report.iterations) == 3
            else:
                assert report.decision is Decision.REJECT
                assert report.iterations[-1].modal_outcome == "10"

    @pytest.mark.parametrize("protocol", ["b-ghz", "b-cluster"])
    def test_single_round_modal_matches_reference(self, protocol):
        variant = variant_by_name(VARIANTS[protocol])
        for row in SINGLE_ROUND_ROWS[variant.name]:
            votes = VoteVector.from_bitstring(vetoers_to_bitstring(row.vetoers))
            report = run_election(config(protocol), votes)
            result = report.iterations[0]
            assert result.modal_outcome == row.readout
            assert result.expected_outcome == row.readout
            assert result.success_probability == pytest.approx(1.0, abs=1e-6)
            assert result.fidelity_vs_ideal == pytest.approx(1.0, abs=1e-9)
            expected = (
                Decision.NOT_UNANIMOUS if row.conclusive else Decision.UNANIMOUS)
            assert report.decision is expected


class TestTranscript:
    @pytest.mark.parametrize("protocol", ["a", "b-ghz", "b-cluster"])
    def test_hop_sequence_is_a_ring(self, protocol):
        report = run_election(config(protocol), VoteVector.from_bitstring("0000"))
        assert isinstance(report.transcript, Transcript)
        for i, result in enumerate(report.iterations, start=1):
            hops = report.transcript.qubit_hops(i)
            assert hops == [("VA", "V1"), ("V1", "V2"), ("V2", "V3"),
                            ("V3", "V4"), ("V4", "VA")]

    def test_announcement_closes_each_iteration(self):
        report = run_election(config("a"), VoteVector.from_bitstring("0000"))
        for i in range(1, len(report.iterations) + 1):
            events = [e for e in report.transcript.events if e.iteration == i]
            assert len(events) == TRANSITS + 1
            assert all(e.kind == "qubit-transfer" for e in events[:-1])
            assert events[-1].kind == "classical-announcement"
            assert events[-1].party_from == "VA"

    def test_counts_recorded_per_iteration(self):
        report = run_election(config("a"), VoteVector.from_bitstring("0000"))
        assert len(report.transcript.readout_counts) == 3
        for counts, result in zip(report.transcript.readout_counts, report.iterations):
            assert counts.counts == result.counts.counts


class TestFidelityVsIdeal:
    def test_identity_is_one(self):
        ideal, _ = protocol_a_round(VoteVector.from_bitstring("0000"), 0)
        assert fidelity_vs_ideal(to_density(ideal), ideal) == pytest.approx(1.0, abs=1e-12)

    def test_full_dephasing_leaves_half(self):
        report = run_election(
            config("a", noise=hop_model("phase_damping", 1.0)),
            VoteVector.from_bitstring("0000"))
        assert report.iterations[0].fidelity_vs_ideal == pytest.approx(0.5, abs=1e-9)
        assert report.iterations[0].fidelity_vs_ideal < 0.6

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            fidelity_vs_ideal(to_density(basis_state(2)), basis_state(3))

    def test_accepts_density_matrix_only_as_first_argument(self):
        ideal = basis_state(2)
        rho = to_density(ideal)
        assert isinstance(rho, DensityMatrix)
        assert fidelity_vs_ideal(rho, ideal) == pytest.approx(1.0)


class TestHopNoiseClosedForms:
    def test_phase_damping_bell(self):
        s = 0.3
        u = (1 - s) ** (TRANSITS / 2)
        report = run_election(
            config("a", noise=hop_model("phase_damping", s)),
            VoteVector.from_bitstring("0000"))
        for result in report.iterations:
            assert result.fidelity_vs_ideal == pytest.approx((1 + u) / 2, abs=1e-9)

    def test_phase_damping_ghz_and_cluster(self):
        s = 0.25
        u = (1 - s) ** (TRANSITS / 2)
        ghz = run_election(
            config("b-ghz", noise=hop_model("phase_damping", s)),
            VoteVector.from_bitstring("0000"))
        cluster = run_election(
            config("b-cluster", noise=hop_model("phase_damping", s)),
            VoteVector.from_bitstring("0000"))
        assert ghz.iterations[0].fidelity_vs_ideal == pytest.approx(
            (1 + u ** 2) / 2, abs=1e-9)
        assert cluster.iterations[0].fidelity_vs_ideal == pytest.approx(
            (1 + u) ** 2 / 4, abs=1e-9)

    def test_amplitude_damping_bell(self):
        g = 0.2
        v = (1 - g) ** (TRANSITS / 2)
        report = run_election(
            config("a", noise=hop_model("amplitude_damping", g)),
            VoteVector.from_bitstring("0000"))
        assert report.iterations[-1].fidelity_vs_ideal == pytest.approx(
            (1 + v) ** 2 / 4, abs=1e-9)

    def test_bit_flip_bell(self):
        p = 0.1
        report = run_election(
            config("a", noise=hop_model("bit_flip", p)),
            VoteVector.from_bitstring("0000"))
        assert report.iterations[-1].fidelity_vs_ideal == pytest.approx(
            (1 + (1 - 2 * p) ** TRANSITS) / 2, abs=1e-9)


class TestGateNoise:
    def test_bit_flip_after_gates_closed_form(self):
        p = 0.1
        noise = NoiseModel(gate_channels=(GateNoise(bit_flip(p)),))
        report = run_election(config("a", noise=noise), VoteVector.from_bitstring("0000"))
        assert report.iterations[0].fidelity_vs_ideal == pytest.approx(
            (1 - p) ** 2 + p ** 2, abs=1e-9)

    def test_two_qubit_restriction(self):
        # noise keyed to 2-qubit gates only: the lone H leaves no mark
        noise = NoiseModel(gate_channels=(GateNoise(depolarizing(0.2), arity=2),))
        plain = NoiseModel(gate_channels=(GateNoise(depolarizing(0.2)),))
        restricted = run_election(
            config("b-ghz", noise=noise), VoteVector.from_bitstring("0000"))
        full = run_election(
            config("b-ghz", noise=plain), VoteVector.from_bitstring("0000"))
        assert restricted.iterations[0].fidelity_vs_ideal > \
            full.iterations[0].fidelity_vs_ideal


class TestReadoutFlipPlacement:
    def test_flips_damage_counts_but_not_fidelity(self):
        noise = NoiseModel(readout_flip={0: 0.1, 1: 0.1})
        report = run_election(config("a", noise=noise), VoteVector.from_bitstring("0000"))
        result = report.iterations[0]
        assert result.fidelity_vs_ideal == pytest.approx(1.0, abs=1e-9)
        assert result.success_probability == pytest.approx(0.81, abs=0.02)


class TestDeterminism:
    def test_identical_runs_are_bit_identical(self):
        noisy = hop_model("depolarizing", 0.3)
        votes = VoteVector.from_bitstring("0010")
        a = run_election(config("b-cluster", noise=noisy, seed=42), votes)
        b = run_election(config("b-cluster", noise=noisy, seed=42), votes)
        assert a.to_dict() == b.to_dict()
        assert json.dumps(a.to_dict(), sort_keys=True) == \
            json.dumps(b.to_dict(), sort_keys=True)

    def test_seed_changes_counts(self):
        noisy = hop_model("depolarizing", 0.3)
        votes = VoteVector.from_bitstring("0010")
        a = run_election(config("b-cluster", noise=noisy, seed=1), votes)
        b = run_election(config("b-cluster", noise=noisy, seed=2), votes)
        assert a.iterations[0].counts.counts != b.iterations[0].counts.counts

    def test_repeats_advance_the_seed(self):
        noisy = hop_model("depolarizing", 0.2)
        votes = VoteVector.from_bitstring("0000")
        two = run_election(config("a", noise=noisy, seed=5, repeats=2), votes)
        follow = run_election(config("a", noise=noisy, seed=6), votes)
        assert two.repeats_summary.success_probabilities[1] == \
            follow.repeats_summary.success_probabilities[0]
        assert len(two.repeats_summary.fidelities) == 2

    def test_fidelity_dispersion_across_repeats(self):
        noisy = hop_model("depolarizing", 0.2)
        report = run_election(
            config("a", noise=noisy, seed=9, repeats=4), VoteVector.from_bitstring("0000"))
        summary = report.repeats_summary
        assert summary.fidelity_mean == pytest.approx(summary.fidelities[0], abs=1e-12)
        assert summary.fidelity_std == pytest.approx(0.0, abs=1e-12)
        assert len(summary.fidelities) == 4


class TestDecisionRobustness:
    @pytest.mark.parametrize(
        "kind", ["amplitude_damping", "phase_damping", "depolarizing", "bit_flip"])
    def test_small_noise_preserves_all_verdicts(self, kind):
        noise = hop_model(kind, 0.01)
        for bits in itertools.product("01", repeat=4):
            votes = VoteVector.from_bitstring("".join(bits))
            noiseless_iters, noiseless_decision = protocol_a_run(votes)
            report = run_election(config("a", noise=noise, shots=1024), votes)
            assert report.decision is noiseless_decision
            assert len(report.iterations) == len(noiseless_iters)
            for got, want in zip(report.iterations, noiseless_iters):
                assert got.modal_outcome == want.readout
            for protocol in ("b-ghz", "b-cluster"):
                variant = variant_by_name(VARIANTS[protocol])
                _, ideal_dist, ideal_decision = protocol_b_run(votes, variant)
                rep = run_election(config(protocol, noise=noise, shots=1024), votes)
                assert rep.iterations[0].modal_outcome == ideal_dist.modal()
                assert rep.decision is ideal_decision


class TestNoiseSweep:
    def test_zero_strength_row(self):
        rows = noise_sweep("a", VoteVector.from_bitstring("0000"),
                           "depolarizing", [0.0], placement="hop", seed=3)
        assert len(rows) == 1
        assert rows[0].strength == 0.0
        assert rows[0].fidelity == pytest.approx(1.0, abs=1e-9)
        assert rows[0].success_probability == pytest.approx(1.0, abs=1e-6)

    def test_phase_damping_ordering_and_values(self):
        strengths = [round(0.05 * i, 2) for i in range(11)]
        votes = VoteVector.from_bitstring("0000")
        table = {
            protocol: noise_sweep(protocol, votes, "phase_damping", strengths,
                                  placement="hop", seed=0)
            for protocol in ("a", "b-ghz", "b-cluster")
        }
        for i, s in enumerate(strengths):
            u = (1 - s) ** (TRANSITS / 2)
            assert table["a"][i].fidelity == pytest.approx((1 + u) / 2, abs=1e-9)
            assert table["b-ghz"][i].fidelity == pytest.approx(
                (1 + u ** 2) / 2, abs=1e-9)
            assert table["b-cluster"][i].fidelity == pytest.approx(
                (1 + u) ** 2 / 4, abs=1e-9)
            assert table["a"][i].fidelity >= table["b-ghz"][i].fidelity >= \
                table["b-cluster"][i].fidelity

    @pytest.mark.parametrize(
        "kind", ["amplitude_damping", "phase_damping", "depolarizing", "bit_flip"])
    @pytest.mark.parametrize("protocol", ["a", "b-ghz", "b-cluster"])
    def test_monotone_fidelity(self, kind, protocol):
        strengths = [round(0.05 * i, 2) for i in range(11)]
        rows = noise_sweep(protocol, VoteVector.from_bitstring("0000"),
                           kind, strengths, placement="hop", seed=0)
        fidelities = [r.fidelity for r in rows]
        assert all(a >= b - 1e-12 for a, b in zip(fidelities, fidelities[1:]))

    def test_gate_placement_closed_form(self):
        rows = noise_sweep("a", VoteVector.from_bitstring("0000"),
                           "bit_flip", [0.0, 0.1, 0.3], placement="gate", seed=0)
        expected = [1.0, 0.82, 0.58]
        for row, want in zip(rows, expected):
            assert row.fidelity == pytest.approx(want, abs=1e-9)

    def test_vetoed_schedule_is_pinned_to_noiseless_trace(self):
        # 1 veto stops round one noiselessly; heavy noise must not stretch it
        rows = noise_sweep("a", VoteVector.from_bitstring("1000"),
                           "depolarizing", [0.0, 0.4], placement="hop", seed=0)
        assert rows[0].fidelity == pytest.approx(1.0, abs=1e-9)
        assert rows[1].fidelity < 1.0

    def test_row_metadata(self):
        rows = noise_sweep("b-ghz", VoteVector.from_bitstring("0000"),
                           "bit_flip", [0.2], placement="hop", seed=17)
        row = rows[0]
        assert row.protocol == "b-ghz"
        assert row.noise_kind == "bit_flip"
        assert row.placement == "hop"
        assert row.seed == 17
        assert 0.0 <= row.success_probability <= 1.0

    def test_determinism(self):
        args = ("a", VoteVector.from_bitstring("0000"), "depolarizing",
                [0.1, 0.2])
        assert noise_sweep(*args, placement="hop", seed=4) == \
            noise_sweep(*args, placement="hop", seed=4)

    def test_bad_strength_rejected(self):
        with pytest.raises(ValueError):
            noise_sweep("a", VoteVector.from_bitstring("0000"),
                        "bit_flip", [0.2, 1.2], placement="hop", seed=0)
        with pytest.raises(ValueError):
            noise_sweep("a", VoteVector.from_bitstring("0000"),
                        "bit_flip", [0.2], placement="teleport", seed=0)


class TestCalibratedModel:
    def test_cluster_case_lands_in_hardware_band(self):
        model = device_model_from_calibration(bundled_calibration())
        report = run_election(
            config("b-cluster", noise=model, seed=21),
            VoteVector.from_bitstring("0000"))
        result = report.iterations[0]
        assert 0.75 <= result.success_probability <= 1.0
        assert 0.80 <= result.fidelity_vs_ideal <= 1.0

    def test_three_veto_bell_case_still_rejects(self):
        model = device_model_from_calibration(bundled_calibration())
        report = run_election(
            config("a", noise=model, seed=21, repeats=10),
            VoteVector.from_bitstring("1101"))
        assert report.decision is Decision.REJECT
        assert float(np.std(report.repeats_summary.fidelities)) < 0.03


class TestReportShape:
    def test_to_dict_round_trips_through_json(self):
        report = run_election(config("a"), VoteVector.from_bitstring("0100"))
        blob = json.dumps(report.to_dict())
        data = json.loads(blob)
        assert data["protocol"] == "a"
        assert data["votes"] == "0100"
        assert data["decision"] == "Reject"
        assert data["iterations"][0]["modal_outcome"] == "10"
        assert data["repeats_summary"]["fidelity_mean"] == pytest.approx(1.0)
        kinds = {e["kind"] for e in data["transcript"]["events"]}
        assert kinds == {"qubit-transfer", "classical-announcement"}

    def test_iteration_result_fields(self):
        report = run_election(config("a"), VoteVector.from_bitstring("0100"))
        result = report.iterations[0]
        assert isinstance(result, IterationResult)
        assert result.iteration == 1
        assert result.t == 0
        assert result.conclusive
        assert isinstance(report, ElectionReport)
