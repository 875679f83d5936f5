"""Outcome classification shared by the ring and complete-graph engines."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional


class Outcome(Enum):
    ALL_COOPERATE = "all_cooperate"
    ALL_DEFECT = "all_defect"
    MIXED_STEADY = "mixed_steady"
    TIMED_OUT = "timed_out"


@dataclass
class AbsorptionReport:
    """Result of running one trajectory to a steady state or a cap.

    ``generations`` is the generation at which steadiness was first
    detected (or the cap, for TIMED_OUT).  ``final_state_summary`` is a
    run decomposition for ring states and None for complete-graph runs.
    ``band_entry_generation`` is only populated by the complete-graph
    engine when a target band around the critical count was requested.
    """

    outcome: Outcome
    generations: int
    final_coop_fraction: float
    final_state_summary: object = None
    band_entry_generation: Optional[int] = None

    @property
    def absorbed(self) -> bool:
        return self.outcome is not Outcome.TIMED_OUT
