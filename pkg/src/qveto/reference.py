"""Expected noiseless outcomes for every voting pattern of four voters.

Each row freezes the final pre-decode state, the deterministic readout, and
whether that readout is conclusive. The single-round rows cover all sixteen
veto subsets for both entangled resources; the iteration rows cover the five
veto counts of the iterative Bell protocol, one row per round it takes.
These rows are the oracle behind ``qveto tables --check`` and the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

R = 1 / math.sqrt(2)


@dataclass(frozen=True)
class BellIterationRow:
    case: int
    vetoers: tuple[int, ...]      # 1-based voter numbers
    iteration: int                # 1-based round number
    bell_state: str               # "phi_plus" | "phi_minus"
    readout: str
    conclusive: bool


@dataclass(frozen=True)
class SingleRoundRow:
    vetoers: tuple[int, ...]
    amplitudes: dict[str, float]  # final pre-decode state
    readout: str
    conclusive: bool


BELL_ITERATION_ROWS: tuple[BellIterationRow, ...] = (
    BellIterationRow(1, (), 1, "phi_plus", "00", False),
    BellIterationRow(2, (1,), 1, "phi_minus", "10", True),
    BellIterationRow(3, (3, 4), 1, "phi_plus", "00", False),
    BellIterationRow(3, (3, 4), 2, "phi_minus", "10", True),
    BellIterationRow(4, (1, 2, 4), 1, "phi_minus", "10", True),
    BellIterationRow(5, (1, 2, 3, 4), 1, "phi_plus", "00", False),
    BellIterationRow(5, (1, 2, 3, 4), 2, "phi_plus", "00", False),
    BellIterationRow(5, (1, 2, 3, 4), 3, "phi_minus", "10", True),
)


CLUSTER_ROWS: tuple[SingleRoundRow, ...] = (
    SingleRoundRow((), {"0000": 0.5, "0011": 0.5, "1100": 0.5, "1111": -0.5},
                   "0000", False),
    SingleRoundRow((1,), {"0101": 0.5, "0110": -0.5, "1001": -0.5, "1010": -0.5},
                   "1111", True),
    SingleRoundRow((2,), {"0100": 0.5, "0111": -0.5, "1000": 0.5, "1011": 0.5},
                   "0110", True),
    SingleRoundRow((3,), {"0100": -0.5, "0111": 0.5, "1000": 0.5, "1011": 0.5},
                   "1110", True),
    SingleRoundRow((4,), {"0101": -0.5, "0110": 0.5, "1001": -0.5, "1010": -0.5},
                   "0111", True),
    SingleRoundRow((1, 2), {"0001": -0.5, "0010": -0.5, "1101": 0.5, "1110": -0.5},
                   "1001", True),
    SingleRoundRow((1, 3), {"0001": 0.5, "0010": 0.5, "1101": 0.5, "1110": -0.5},
                   "0001", True),
    SingleRoundRow((1, 4), {"0000": 0.5, "0011": 0.5, "1100": -0.5, "1111": 0.5},
                   "1000", True),
    SingleRoundRow((2, 3), {"0000": -0.5, "0011": -0.5, "1100": 0.5, "1111": -0.5},
                   "1000", True),
    SingleRoundRow((2, 4), {"0001": -0.5, "0010": -0.5, "1101": -0.5, "1110": 0.5},
                   "0001", True),
    SingleRoundRow((3, 4), {"0001": -0.5, "0010": -0.5, "1101": 0.5, "1110": -0.5},
                   "1001", True),
    SingleRoundRow((1, 2, 3), {"0101": -0.5, "0110": 0.5, "1001": -0.5, "1010": -0.5},
                   "0111", True),
    SingleRoundRow((1, 2, 4), {"0100": -0.5, "0111": 0.5, "1000": 0.5, "1011": 0.5},
                   "1110", True),
    SingleRoundRow((1, 3, 4), {"0100": -0.5, "0111": 0.5, "1000": -0.5, "1011": -0.5},
                   "0110", True),
    SingleRoundRow((2, 3, 4), {"0101": -0.5, "0110": 0.5, "1001": 0.5, "1010": 0.5},
                   "1111", True),
    SingleRoundRow((1, 2, 3, 4), {"0000": 0.5, "0011": 0.5, "1100": 0.5, "1111": -0.5},
                   "0000", False),
)


GHZ_ROWS: tuple[SingleRoundRow, ...] = (
    SingleRoundRow((), {"000": R, "111": R}, "000", False),
    SingleRoundRow((1,), {"010": R, "101": R}, "010", True),
    SingleRoundRow((2,), {"011": R, "100": R}, "011", True),
    SingleRoundRow((3,), {"011": -R, "100": R}, "111", True),
    SingleRoundRow((4,), {"010": -R, "101": R}, "110", True),
    SingleRoundRow((1, 2), {"001": R, "110": R}, "001", True),
    SingleRoundRow((1, 3), {"001": -R, "110": R}, "101", True),
    SingleRoundRow((1, 4), {"000": -R, "111": R}, "100", True),
    SingleRoundRow((2, 3), {"000": -R, "111": R}, "100", True),
    SingleRoundRow((2, 4), {"001": -R, "110": R}, "101", True),
    SingleRoundRow((3, 4), {"001": -R, "110": -R}, "001", True),
    SingleRoundRow((1, 2, 3), {"010": -R, "101": R}, "110", True),
    SingleRoundRow((1, 2, 4), {"011": -R, "100": R}, "111", True),
    SingleRoundRow((1, 3, 4), {"011": -R, "100": -R}, "011", True),
    SingleRoundRow((2, 3, 4), {"010": -R, "101": -R}, "010", True),
    SingleRoundRow((1, 2, 3, 4), {"000": -R, "111": -R}, "000", False),
)


SINGLE_ROUND_ROWS = {"ghz3": GHZ_ROWS, "cluster4": CLUSTER_ROWS}


def vetoers_to_bitstring(vetoers: tuple[int, ...], n_voters: int = 4) -> str:
    """Vote bitstring with voter 1 leftmost; '1' marks a veto."""
    return "".join("1" if v + 1 in vetoers else "0" for v in range(n_voters))
