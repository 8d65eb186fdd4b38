"""Command-line front end for the veto-voting simulator.

Subcommands:
  run          one election under configurable noise
  tables       noiseless reference outcomes for every ballot
  sweep        fidelity and success probability versus channel strength
  device-info  parsed calibration data and the noise model derived from it

Machine output is requested with --out json or --out csv; both carry the
same row fields.  Every invocation is deterministic given identical flags,
including --seed, so repeated runs emit byte-identical documents.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import statistics
import sys
from dataclasses import dataclass, replace

import numpy as np

from .election import (
    PLACEMENTS,
    PROTOCOLS,
    ElectionConfig,
    ElectionReport,
    RepeatsSummary,
    noise_sweep,
    run_election,
)
from .noise import (
    GateNoise,
    HopNoise,
    NoiseModel,
    bundled_calibration,
    channel_for,
    device_model_from_calibration,
    load_calibration,
)
from .protocols import (
    VoteVector,
    protocol_a_round,
    protocol_a_run,
    protocol_b_run,
    variant_by_name,
)
from .qcore import (
    StateVector,
    bit_labels,
    equal_up_to_global_phase,
    state_from_amplitudes,
)
from .reference import (
    BELL_ITERATION_ROWS,
    SINGLE_ROUND_ROWS,
    vetoers_to_bitstring,
)

RUN_FIELDS = ("protocol", "votes", "iteration", "modal_outcome",
              "success_probability", "fidelity", "noise_kind",
              "noise_strength", "seed")
SWEEP_FIELDS = ("protocol", "noise_kind", "strength", "placement",
                "fidelity", "success_probability", "seed")
TABLE_FIELDS = ("table", "votes", "iteration", "state", "readout",
                "conclusive", "decision", "status")

R = 1 / math.sqrt(2)
_BELL_KETS = {
    "phi_plus": state_from_amplitudes(2, {"00": R, "11": R}),
    "phi_minus": state_from_amplitudes(2, {"00": R, "11": -R}),
}
_TABLE_VARIANTS = {"4": "cluster4", "5": "ghz3"}


@dataclass(frozen=True)
class ResultRow:
    """One (iteration, repeat) line of a run's machine output."""

    protocol: str
    votes: str
    iteration: int
    modal_outcome: str
    success_probability: float
    fidelity: float
    noise_kind: str
    noise_strength: str
    seed: int

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "votes": self.votes,
            "iteration": self.iteration,
            "modal_outcome": self.modal_outcome,
            "success_probability": self.success_probability,
            "fidelity": self.fidelity,
            "noise_kind": self.noise_kind,
            "noise_strength": self.noise_strength,
            "seed": self.seed,
        }


# ---------------------------------------------------------------------------
# flag parsing helpers


def _parse_noise_spec(spec: str) -> tuple[str, float, str]:
    """Parse one --noise value: kind=K,strength=S[,placement=hop|gate]."""
    fields: dict[str, str] = {}
    for part in spec.split(","):
        if "=" not in part:
            raise ValueError(f"noise spec fields must be key=value, got {part!r}")
        key, value = part.split("=", 1)
        fields[key.strip()] = value.strip()
    unknown = set(fields) - {"kind", "strength", "placement"}
    if unknown:
        raise ValueError(f"unknown noise spec fields: {sorted(unknown)}")
    if "kind" not in fields or "strength" not in fields:
        raise ValueError(f"noise spec needs kind= and strength=, got {spec!r}")
    placement = fields.get("placement", "hop")
    if placement not in PLACEMENTS:
        raise ValueError(
            f"placement must be one of {PLACEMENTS}, got {placement!r}")
    return fields["kind"], float(fields["strength"]), placement


def _parse_strengths(spec: str) -> list[float]:
    """Parse a min:max:step range into an inclusive list of strengths."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"strengths must be min:max:step, got {spec!r}")
    low, high, step = (float(p) for p in parts)
    if not 0.0 <= low <= high <= 1.0:
        raise ValueError(f"strength range must satisfy 0 <= min <= max <= 1, got {spec!r}")
    if step < 0.0:
        raise ValueError(f"step must be non-negative, got {step}")
    if step == 0.0:
        if low != high:
            raise ValueError(f"zero step needs min == max, got {spec!r}")
        return [low]
    values = []
    i = 0
    while True:
        v = low + i * step
        if v > high + 1e-9:
            break
        values.append(round(v, 10))
        i += 1
    return values


def _build_noise(specs, calibration) -> tuple[NoiseModel, str, str]:
    """Compose the run's NoiseModel; returns (model, kind label, strength label)."""
    model = NoiseModel()
    kinds: list[str] = []
    strengths: list[str] = []
    if calibration:
        records = (bundled_calibration() if calibration == "bundled"
                   else load_calibration(calibration))
        model = model.merged_with(device_model_from_calibration(records))
        kinds.append(f"calibrated:{calibration}")
        strengths.append("device")
    for spec in specs:
        kind, strength, placement = _parse_noise_spec(spec)
        channel = channel_for(kind, strength)
        if placement == "hop":
            extra = NoiseModel(hop_channels=(HopNoise(channel),))
        else:
            extra = NoiseModel(gate_channels=(GateNoise(channel),))
        model = model.merged_with(extra)
        kinds.append(f"{channel.kind}@{placement}")
        strengths.append(str(strength))
    return model, "+".join(kinds) or "none", "+".join(strengths) or "0"


def _csv_document(fieldnames, rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _format_ket(state: StateVector) -> str:
    parts = []
    for label, amp in zip(bit_labels(state.n_qubits), state.amplitudes):
        if abs(amp) < 5e-5:
            continue
        re, im = float(amp.real), float(amp.imag)
        if abs(im) < 5e-5:
            coeff = f"{re:.4f}"
        elif abs(re) < 5e-5:
            coeff = f"{im:.4f}i"
        else:
            coeff = f"({re:.4f}{im:+.4f}i)"
        term = f"|{label}>"
        if not parts:
            parts.append(coeff + term)
        elif coeff.startswith("-"):
            parts.append("- " + coeff[1:] + term)
        else:
            parts.append("+ " + coeff + term)
    return " ".join(parts) or "0"


def _aligned(state: StateVector, reference: StateVector) -> StateVector:
    """Rotate a global phase so the state displays in the reference's sign
    convention; returns the state untouched when they do not overlap."""
    overlap = np.vdot(reference.amplitudes, state.amplitudes)
    if abs(overlap) < 1e-9:
        return state
    phase = overlap / abs(overlap)
    return StateVector(state.n_qubits, state.amplitudes * np.conj(phase))


# ---------------------------------------------------------------------------
# run


def _render_report(report: ElectionReport, noise_label: str) -> list[str]:
    lines = [
        f"protocol: {report.protocol}",
        f"votes: {report.votes}",
        f"decision: {report.decision.value}",
        f"shots: {report.shots}",
        f"seed: {report.seed}",
        f"repeats: {report.repeats}",
        f"noise: {noise_label}",
    ]
    for it in report.iterations:
        lines.append(f"iteration {it.iteration}:")
        lines.append(f"  modal outcome: {it.modal_outcome}")
        lines.append(f"  expected outcome: {it.expected_outcome}")
        lines.append(f"  success probability: {it.success_probability * 100:.2f}%")
        lines.append(f"  fidelity vs ideal: {it.fidelity_vs_ideal * 100:.2f}%")
        counts = " ".join(f"{k}={v}" for k, v in sorted(it.counts.counts.items()))
        lines.append(f"  counts: {counts}")
    summary = report.repeats_summary
    lines.append("repeats summary:")
    lines.append(f"  fidelity mean: {summary.fidelity_mean * 100:.2f}%")
    lines.append(f"  fidelity std: {summary.fidelity_std:.6f}")
    lines.append("transcript:")
    for i in range(1, len(report.iterations) + 1):
        hops = report.transcript.qubit_hops(i)
        path = " -> ".join([hops[0][0]] + [b for _, b in hops])
        lines.append(f"  iteration {i}: {path}; readout announced by VA")
    return lines


def cmd_run(args) -> int:
    votes = VoteVector.from_bitstring(args.votes)
    noise, kind_label, strength_label = _build_noise(
        args.noise or [], args.calibration)
    reports = []
    for r in range(args.repeats):
        cfg = ElectionConfig(
            protocol=args.protocol, n_voters=votes.n_voters, shots=args.shots,
            seed=args.seed + r, noise=noise, repeats=1)
        reports.append(run_election(cfg, votes))
    fidelities = [rep.repeats_summary.fidelities[0] for rep in reports]
    successes = [rep.repeats_summary.success_probabilities[0] for rep in reports]
    summary = RepeatsSummary(
        fidelity_mean=math.fsum(fidelities) / len(fidelities),
        fidelity_std=statistics.pstdev(fidelities),
        fidelities=tuple(fidelities),
        success_probabilities=tuple(successes),
    )
    display = replace(reports[0], seed=args.seed, repeats=args.repeats,
                      repeats_summary=summary)
    rows = [
        ResultRow(
            protocol=args.protocol,
            votes=votes.bitstring(),
            iteration=it.iteration,
            modal_outcome=it.modal_outcome,
            success_probability=it.success_probability,
            fidelity=it.fidelity_vs_ideal,
            noise_kind=kind_label,
            noise_strength=strength_label,
            seed=rep.seed,
        )
        for rep in reports
        for it in rep.iterations
    ]
    if args.out == "json":
        document = {"report": display.to_dict(),
                    "rows": [row.to_dict() for row in rows]}
        print(json.dumps(document, indent=2))
    elif args.out == "csv":
        print(_csv_document(RUN_FIELDS, [row.to_dict() for row in rows]), end="")
    else:
        print("\n".join(_render_report(display, kind_label)))
    return 0


# ---------------------------------------------------------------------------
# tables


def _bell_table_rows() -> list[dict]:
    rows = []
    for i, row in enumerate(BELL_ITERATION_ROWS):
        votes = VoteVector.from_bitstring(vetoers_to_bitstring(row.vetoers))
        iterations, decision = protocol_a_run(votes)
        expected_state = _BELL_KETS[row.bell_state]
        pre, _ = protocol_a_round(votes, row.iteration - 1)
        ok = equal_up_to_global_phase(pre, expected_state)
        if row.iteration <= len(iterations):
            it = iterations[row.iteration - 1]
            readout, conclusive = it.readout, it.conclusive
            ok = ok and readout == row.readout and conclusive == row.conclusive
        else:
            readout, conclusive, ok = "", False, False
        case_ends = (i + 1 == len(BELL_ITERATION_ROWS)
                     or BELL_ITERATION_ROWS[i + 1].vetoers != row.vetoers)
        rows.append({
            "table": "3",
            "votes": votes.bitstring(),
            "iteration": row.iteration,
            "state": _format_ket(_aligned(pre, expected_state)),
            "readout": readout,
            "conclusive": str(conclusive).lower(),
            "decision": decision.value if case_ends else "",
            "status": "ok" if ok else "mismatch",
        })
    return rows


def _single_round_table_rows(table: str) -> list[dict]:
    variant = variant_by_name(_TABLE_VARIANTS[table])
    rows = []
    for row in SINGLE_ROUND_ROWS[variant.name]:
        votes = VoteVector.from_bitstring(vetoers_to_bitstring(row.vetoers))
        final, dist, decision = protocol_b_run(votes, variant)
        embedded = state_from_amplitudes(variant.n_qubits, row.amplitudes)
        readout = dist.modal()
        conclusive = readout != "0" * variant.n_qubits
        ok = (equal_up_to_global_phase(final, embedded)
              and readout == row.readout
              and conclusive == row.conclusive
              and dist.prob(readout) > 1 - 1e-9)
        rows.append({
            "table": table,
            "votes": votes.bitstring(),
            "iteration": 1,
            "state": _format_ket(_aligned(final, embedded)),
            "readout": readout,
            "conclusive": str(conclusive).lower(),
            "decision": decision.value,
            "status": "ok" if ok else "mismatch",
        })
    return rows


_TABLE_TITLES = {
    "3": "iterative veto over Bell pairs",
    "4": "single-round veto over the 4-qubit cluster state",
    "5": "single-round veto over the 3-qubit GHZ state",
}


def cmd_tables(args) -> int:
    which = [args.which] if args.which else ["3", "4", "5"]
    rows: list[dict] = []
    for table in which:
        if table == "3":
            rows.extend(_bell_table_rows())
        else:
            rows.extend(_single_round_table_rows(table))
    if args.out == "json":
        print(json.dumps(rows, indent=2))
    elif args.out == "csv":
        print(_csv_document(TABLE_FIELDS, rows), end="")
    else:
        lines = []
        for table in which:
            lines.append(f"table {table}: {_TABLE_TITLES[table]}")
            for row in rows:
                if row["table"] != table:
                    continue
                decision = f"; decision {row['decision']}" if row["decision"] else ""
                lines.append(
                    f"  votes {row['votes']} iteration {row['iteration']}: "
                    f"state {row['state']}; readout {row['readout']}; "
                    f"conclusive {row['conclusive']}{decision} [{row['status']}]")
        print("\n".join(lines))
    bad = [row for row in rows if row["status"] != "ok"]
    if args.check and bad:
        for row in bad:
            print(f"mismatch: table {row['table']} votes {row['votes']} "
                  f"iteration {row['iteration']}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# sweep


def cmd_sweep(args) -> int:
    votes = VoteVector.from_bitstring(args.votes)
    strengths = _parse_strengths(args.strengths)
    protocols = PROTOCOLS if args.protocol == "all" else (args.protocol,)
    rows = []
    for protocol in protocols:
        for kind in args.noise:
            rows.extend(noise_sweep(
                protocol, votes, kind, strengths, placement=args.placement,
                seed=args.seed, shots=args.shots))
    if args.out == "json":
        print(json.dumps([row.to_dict() for row in rows], indent=2))
    else:
        print(_csv_document(SWEEP_FIELDS, [row.to_dict() for row in rows]), end="")
    return 0


# ---------------------------------------------------------------------------
# device-info


def _cx_key(pair: tuple[int, int]) -> str:
    return f"cx{pair[0]}_{pair[1]}"


def cmd_device_info(args) -> int:
    source = args.calibration or "bundled"
    records = (bundled_calibration() if source == "bundled"
               else load_calibration(source))
    model = device_model_from_calibration(records)
    direct_pairs = {
        frozenset(pair) for record in records for pair in record.cnot_errors}
    ids = sorted(record.qubit_id for record in records)
    mapping = {role: qubit_id for role, qubit_id in enumerate(ids)}

    one_qubit: dict[str, float] = {}
    two_qubit: dict[str, float] = {}
    origins: dict[str, str] = {}
    for rule in model.gate_channels:
        if rule.arity == 1:
            one_qubit[str(rule.qubits[0])] = rule.channel.strength
        else:
            key = "-".join(str(q) for q in rule.qubits)
            two_qubit[key] = rule.channel.strength
            physical = frozenset(mapping[q] for q in rule.qubits)
            origins[key] = "direct" if physical in direct_pairs else "routed"
    flips = {str(q): p for q, p in sorted(model.readout_flip.items())}

    if args.out == "json":
        document = {
            "source": source,
            "records": [
                {
                    "qubit_id": record.qubit_id,
                    "t1_us": record.t1_us,
                    "t2_us": record.t2_us,
                    "frequency_ghz": record.frequency_ghz,
                    "readout_error": record.readout_error,
                    "pauli_x_error": record.pauli_x_error,
                    "cnot_errors": {
                        _cx_key(pair): error
                        for pair, error in sorted(record.cnot_errors.items())
                    },
                }
                for record in records
            ],
            "model": {
                "one_qubit": one_qubit,
                "two_qubit": two_qubit,
                "pair_origin": origins,
                "readout_flip": flips,
                "is_identity": model.is_identity,
            },
        }
        print(json.dumps(document, indent=2))
        return 0

    lines = [f"calibration: {source}", "qubits:"]
    for record in records:
        cnots = " ".join(
            f"{_cx_key(pair)}={error}"
            for pair, error in sorted(record.cnot_errors.items())) or "none"
        lines.append(
            f"  Q{record.qubit_id}: t1_us={record.t1_us} t2_us={record.t2_us} "
            f"frequency_ghz={record.frequency_ghz} "
            f"readout_error={record.readout_error} "
            f"pauli_x_error={record.pauli_x_error}")
        lines.append(f"      cnot_errors: {cnots}")
    if model.is_identity:
        lines.append("derived noise model: identity (all error rates zero)")
    else:
        lines.append("derived noise model (gate-placed depolarizing + readout flips):")
        lines.append("  one-qubit: " + " ".join(
            f"q{q}={s}" for q, s in one_qubit.items()))
        lines.append("  two-qubit: " + " ".join(
            f"q{key}={s} ({origins[key]})" for key, s in two_qubit.items()))
        lines.append("  readout flips: " + " ".join(
            f"q{q}={p}" for q, p in flips.items()))
    print("\n".join(lines))
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qveto",
        description="Simulate anonymous veto voting over Bell, GHZ and "
                    "cluster states, with configurable noise.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one election")
    run.add_argument("--protocol", required=True, choices=PROTOCOLS)
    run.add_argument("--votes", required=True,
                     help="bitstring, voter 1 leftmost, 1 = veto")
    run.add_argument("--shots", type=int, default=8192)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--repeats", type=int, default=1)
    run.add_argument("--noise", action="append", metavar="SPEC",
                     help="kind=K,strength=S[,placement=hop|gate]; repeatable")
    run.add_argument("--calibration", metavar="PATH",
                     help="calibration file, or the word 'bundled'")
    run.add_argument("--out", choices=("json", "csv"))
    run.set_defaults(func=cmd_run)

    tables = sub.add_parser("tables",
                            help="print the noiseless outcome tables")
    tables.add_argument("--which", choices=("3", "4", "5"))
    tables.add_argument("--check", action="store_true",
                        help="exit 1 if any simulated row deviates from the "
                             "embedded expectations")
    tables.add_argument("--out", choices=("json", "csv"))
    tables.set_defaults(func=cmd_tables)

    sweep = sub.add_parser("sweep",
                           help="tabulate fidelity against channel strength")
    sweep.add_argument("--protocol", choices=PROTOCOLS + ("all",),
                       default="all")
    sweep.add_argument("--votes", default="0000")
    sweep.add_argument("--noise", action="append", required=True,
                       metavar="KIND", help="channel kind; repeatable")
    sweep.add_argument("--strengths", default="0:0.5:0.05",
                       metavar="MIN:MAX:STEP")
    sweep.add_argument("--placement", choices=PLACEMENTS, default="hop")
    sweep.add_argument("--shots", type=int, default=8192)
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--out", choices=("json", "csv"), default="csv")
    sweep.set_defaults(func=cmd_sweep)

    device = sub.add_parser("device-info",
                            help="show calibration data and its noise model")
    device.add_argument("--calibration", metavar="PATH", default="bundled",
                        help="calibration file, or the word 'bundled'")
    device.add_argument("--out", choices=("json",))
    device.set_defaults(func=cmd_device_info)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
