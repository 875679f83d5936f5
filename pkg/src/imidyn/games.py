"""Payoff parameterisation and switching kernel for symmetric 2x2 games.

The payoff matrix is normalised to R=1 (mutual cooperation) and P=0
(mutual defection), leaving two free payoffs: S (sucker) in [-1, 1] and
T (temptation) in [0, 2].  Every switching probability is a positive
payoff difference divided by 2*alpha, where alpha = max{T,1} - min{S,0}
guarantees the result lies in [0, 1].

The (S, T) square splits into six dynamical zones A..F separated by the
four lines T = S+1, T = (S+1)/2, T = 2S and T = S.  Zone membership, not
the classical game quadrant, is what determines the qualitative behaviour
of the imitation process on the ring.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# Points within this distance of a zone-border line are treated as lying
# exactly on it; sweep grids must be able to place cells on the lines.
BORDER_TOL = 1e-12

# Payoff differences of smaller magnitude are treated as exact ties, so
# border configurations freeze instead of drifting on float rounding
# (e.g. T - (S+1) evaluates to ~1 ulp for S=0.2, T=1.2).
PAYOFF_TIE_TOL = 1e-12


class Zone(Enum):
    """Dynamical zone of the (S, T) square, including the border lines."""

    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"
    F = "F"
    BORDER_AB = "AB"  # T = S + 1
    BORDER_BD = "BD"  # T = (S + 1)/2
    BORDER_ED = "ED"  # T = 2S
    BORDER_FE = "FE"  # T = S
    CORNER = "corner"  # two border lines meet, or the quadrant corner (0, 1)

    @property
    def is_border(self) -> bool:
        return self in (Zone.BORDER_AB, Zone.BORDER_BD, Zone.BORDER_ED,
                        Zone.BORDER_FE, Zone.CORNER)


class Quadrant(Enum):
    """Classical game quadrant; Boundary where strict ordinality fails."""

    PD = "PD"  # S < 0, T > 1: Prisoner's Dilemma
    SH = "SH"  # S < 0, T < 1: Stag Hunt (R>T>P>S ordering only)
    SG = "SG"  # S > 0, T > 1: Snowdrift
    HG = "HG"  # S > 0, T < 1: Harmony
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class GameParams:
    """Payoff point (S, T) with the derived scaling factor alpha.

    R = 1 and P = 0 are implicit everywhere.  alpha is recomputed on
    construction and is strictly positive on the whole domain.
    """

    S: float
    T: float
    alpha: float

    def __post_init__(self) -> None:
        if not (-1.0 <= self.S <= 1.0):
            raise ValueError(f"S must lie in [-1, 1], got {self.S}")
        if not (0.0 <= self.T <= 2.0):
            raise ValueError(f"T must lie in [0, 2], got {self.T}")
        expected = max(self.T, 1.0) - min(self.S, 0.0)
        if abs(self.alpha - expected) > 1e-15:
            raise ValueError("alpha inconsistent with S, T; use make_params")


def make_params(S: float, T: float) -> GameParams:
    """Build GameParams, rejecting payoffs outside the normalised square."""
    S = float(S)
    T = float(T)
    return GameParams(S=S, T=T, alpha=max(T, 1.0) - min(S, 0.0))


@dataclass(frozen=True)
class Region:
    zone: Zone
    quadrant: Quadrant


def classify(params: GameParams) -> Region:
    """Assign the unique zone (or border/corner) and game quadrant.

    A point within BORDER_TOL of k >= 2 border lines, or at the quadrant
    corner (0, 1) where both branches of the alpha formula switch, is
    reported as CORNER.
    """
    S, T = params.S, params.T
    line_gaps = {
        Zone.BORDER_AB: T - (S + 1.0),
        Zone.BORDER_BD: T - (S + 1.0) / 2.0,
        Zone.BORDER_ED: T - 2.0 * S,
        Zone.BORDER_FE: T - S,
    }
    hits = [z for z, gap in line_gaps.items() if abs(gap) <= BORDER_TOL]

    on_s_axis = abs(S) <= BORDER_TOL
    on_t_line = abs(T - 1.0) <= BORDER_TOL
    if on_s_axis and on_t_line:
        zone = Zone.CORNER
    elif len(hits) >= 2:
        zone = Zone.CORNER
    elif len(hits) == 1:
        zone = hits[0]
    elif T > S + 1.0:
        zone = Zone.A
    elif T < S:
        zone = Zone.F
    elif T > (S + 1.0) / 2.0:
        zone = Zone.B if T > 2.0 * S else Zone.C
    else:
        zone = Zone.D if T > 2.0 * S else Zone.E

    if on_s_axis or on_t_line:
        quadrant = Quadrant.BOUNDARY
    elif S < 0.0:
        quadrant = Quadrant.PD if T > 1.0 else Quadrant.SH
    else:
        quadrant = Quadrant.SG if T > 1.0 else Quadrant.HG
    return Region(zone=zone, quadrant=quadrant)


def cycle_payoff(s_left: int, s_self: int, s_right: int,
                 params: GameParams) -> float:
    """Accrued payoff of a ring vertex: sum of both pairwise games."""
    coop_nb = s_left + s_right
    if s_self:
        return coop_nb * 1.0 + (2 - coop_nb) * params.S
    return coop_nb * params.T


def switch_prob_cycle(s_prev: int, s_self: int, s_chosen: int, s_beyond: int,
                      params: GameParams) -> float:
    """Probability that a vertex copies its chosen neighbour's strategy.

    s_prev is the vertex's other (non-chosen) neighbour and s_beyond is
    the chosen neighbour's far neighbour.  Copying an identical strategy
    is a no-op, so the probability is 0 whenever s_self == s_chosen.
    """
    if s_self == s_chosen:
        return 0.0
    p_self = cycle_payoff(s_prev, s_self, s_chosen, params)
    p_chosen = cycle_payoff(s_self, s_chosen, s_beyond, params)
    p = (p_chosen - p_self) / (2.0 * params.alpha)
    if p <= PAYOFF_TIE_TOL:
        return 0.0
    return min(p, 1.0)


@dataclass(frozen=True)
class SwitchTables:
    """The eight one-sided switching probabilities as two 2x2 tables.

    ``to_coop[prev, beyond]`` is the probability that a defector copies a
    chosen cooperator, given the defector's other neighbour ``prev`` and
    the cooperator's far neighbour ``beyond``; ``to_defect`` is the mirror
    case of a cooperator copying a chosen defector.  The ``*_raw`` tables
    hold the signed pre-clip values: ``to_defect_raw[p, b]`` equals
    ``-to_coop_raw[b, p]``, so at most one entry of each mirrored pair is
    positive, and both vanish exactly on the corresponding border line.
    """

    to_coop: np.ndarray
    to_defect: np.ndarray
    to_coop_raw: np.ndarray
    to_defect_raw: np.ndarray


def switch_tables(params: GameParams) -> SwitchTables:
    """Tabulate switch_prob_cycle over all neighbour configurations."""
    to_coop_raw = np.empty((2, 2))
    to_defect_raw = np.empty((2, 2))
    two_alpha = 2.0 * params.alpha
    S, T = params.S, params.T
    for prev in (0, 1):
        for beyond in (0, 1):
            to_coop_raw[prev, beyond] = (
                (2 * S - T) + beyond * (1 - S) - prev * T) / two_alpha
            to_defect_raw[prev, beyond] = (
                (T - 2 * S) + beyond * T - prev * (1 - S)) / two_alpha

    def clip(raw: np.ndarray) -> np.ndarray:
        return np.where(raw > PAYOFF_TIE_TOL, np.minimum(raw, 1.0), 0.0)

    return SwitchTables(to_coop=clip(to_coop_raw),
                        to_defect=clip(to_defect_raw),
                        to_coop_raw=to_coop_raw,
                        to_defect_raw=to_defect_raw)
