"""Imitation on the complete graph via the cooperator-count chain.

On K_n every cooperator earns (delta-1) + (n-delta)S and every defector
earns delta*T, so the cooperator count delta is a sufficient statistic.
Whichever side envies the other flips independently, giving exact
binomial transitions: delta decreases by Bin(delta, p) when cooperators
envy defectors and increases by Bin(n-delta, rho) in the mirror case.
Payoffs are equal exactly at delta* = (nS-1)/(S+T-1); an integer delta*
is a frozen state, a non-integer one the centre of a metastable band.

Binomial variates come from numpy's Generator.binomial (exact BTPE /
inversion, never a normal approximation) - metastability measurements
are sensitive to the tails.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .games import GameParams
from .outcomes import AbsorptionReport, Outcome

# Payoff gaps are O(n); differences at most this size count as the exact
# tie of the frozen state (matches the delta* integrality tolerance).
FREEZE_TOL = 1e-9


@dataclass
class CompleteState:
    delta: int  # cooperator count in [0, n]
    n: int
    generation: int = 0

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("population must have at least two players")
        if not 0 <= self.delta <= self.n:
            raise ValueError(f"delta must lie in [0, {self.n}]")

    @property
    def coop_fraction(self) -> float:
        return self.delta / self.n


@dataclass(frozen=True)
class CriticalPoint:
    """Cooperator count at which both strategies earn the same payoff."""

    delta_star: float
    is_integer: bool
    theta_star: float


def payoffs(delta: int, n: int, params: GameParams) -> tuple:
    """Accrued payoffs (cooperator, defector) at cooperator count delta."""
    payoff_c = (delta - 1.0) + (n - delta) * params.S
    payoff_d = delta * params.T
    return payoff_c, payoff_d


def payoff_gap(delta, n: int, params: GameParams):
    """Cooperator payoff minus defector payoff; vectorises over delta."""
    delta = np.asarray(delta, dtype=np.float64)
    return (delta - 1.0) + (n - delta) * params.S - delta * params.T


def critical_point(n: int, params: GameParams) -> Optional[CriticalPoint]:
    """The equal-payoff count (nS-1)/(S+T-1), or None when S+T = 1.

    In the degenerate S+T = 1 case the payoff gap nS-1 does not depend on
    delta at all, so there is no crossing point and the engine drifts
    uniformly in one direction instead.
    """
    denom = params.S + params.T - 1.0
    if abs(denom) <= 1e-12:
        return None
    delta_star = (n * params.S - 1.0) / denom
    return CriticalPoint(delta_star=delta_star,
                         is_integer=abs(delta_star - round(delta_star)) <= FREEZE_TOL,
                         theta_star=delta_star / n)


def flip_probabilities(delta: int, n: int, params: GameParams) -> tuple:
    """Per-player flip probabilities (cooperator down-flip, defector up-flip).

    Exactly one of the two is positive away from the frozen count: a flip
    needs a strictly envied opposite-strategy partner to be drawn, which
    happens with probability (#opposite)/(n-1), times the payoff-gap coin.
    """
    gap = float(payoff_gap(delta, n, params))
    scale = (n - 1.0) * params.alpha
    p_down = 0.0
    p_up = 0.0
    if gap < -FREEZE_TOL:
        p_down = ((n - delta) / (n - 1.0)) * (-gap) / scale
    elif gap > FREEZE_TOL:
        p_up = (delta / (n - 1.0)) * gap / scale
    if p_down > 1.0 + 1e-12 or p_up > 1.0 + 1e-12:
        raise RuntimeError("flip probability left [0, 1]; alpha scaling bug")
    return min(p_down, 1.0), min(p_up, 1.0)


def is_frozen(delta: int, n: int, params: GameParams) -> bool:
    """True when no player can change strategy (absorbing or equal-payoff)."""
    p_down, p_up = flip_probabilities(delta, n, params)
    if delta == 0 or delta == n:
        return True
    return p_down == 0.0 and p_up == 0.0


def step_aggregate(state: CompleteState, params: GameParams,
                   rng: np.random.Generator) -> CompleteState:
    """One generation of the aggregate chain (one binomial draw at most)."""
    delta, n = state.delta, state.n
    p_down, p_up = flip_probabilities(delta, n, params)
    if p_down > 0.0 and delta > 0:
        delta -= int(rng.binomial(delta, p_down))
    elif p_up > 0.0 and delta < n:
        delta += int(rng.binomial(n - delta, p_up))
    return CompleteState(delta, n, state.generation + 1)


def step_per_vertex(state: CompleteState, params: GameParams,
                    rng: np.random.Generator) -> CompleteState:
    """Reference implementation walking every player individually.

    Each player draws one of the other n-1 players uniformly and copies
    it with the payoff-gap probability.  One-step distribution matches
    step_aggregate; used as an independent cross-check, not for speed.
    """
    delta, n = state.delta, state.n
    gap = float(payoff_gap(delta, n, params))
    scale = (n - 1.0) * params.alpha
    picks = rng.random(n)
    coins = rng.random(n)
    new_delta = delta
    for i in range(n):
        is_coop = i < delta  # identities are exchangeable
        if is_coop and gap < -FREEZE_TOL:
            # drew a defector, then the copy coin
            if picks[i] < (n - delta) / (n - 1.0) and coins[i] < -gap / scale:
                new_delta -= 1
        elif not is_coop and gap > FREEZE_TOL:
            if picks[i] < delta / (n - 1.0) and coins[i] < gap / scale:
                new_delta += 1
    return CompleteState(new_delta, n, state.generation + 1)


def _classify(delta: int, n: int) -> Outcome:
    if delta == n:
        return Outcome.ALL_COOPERATE
    if delta == 0:
        return Outcome.ALL_DEFECT
    return Outcome.MIXED_STEADY


def run_complete(initial_delta: int, n: int, params: GameParams,
                 max_generations: int, rng: np.random.Generator,
                 band_epsilon: Optional[float] = None,
                 trace: Optional[list] = None) -> AbsorptionReport:
    """Iterate step_aggregate until frozen or the cap.

    With ``band_epsilon`` set, also records the first generation at which
    delta enters delta* +- n**(1/2 + band_epsilon).
    """
    if max_generations < 1:
        raise ValueError("max_generations must be >= 1")
    state = CompleteState(initial_delta, n)
    band_entry = None
    band = None
    if band_epsilon is not None:
        cp = critical_point(n, params)
        if cp is not None:
            band = (cp.delta_star - n ** (0.5 + band_epsilon),
                    cp.delta_star + n ** (0.5 + band_epsilon))
    if trace is not None:
        trace.append((state.generation, state.delta))
    while True:
        if band is not None and band_entry is None \
                and band[0] <= state.delta <= band[1]:
            band_entry = state.generation
        if is_frozen(state.delta, n, params):
            return AbsorptionReport(outcome=_classify(state.delta, n),
                                    generations=state.generation,
                                    final_coop_fraction=state.coop_fraction,
                                    band_entry_generation=band_entry)
        if state.generation >= max_generations:
            return AbsorptionReport(outcome=Outcome.TIMED_OUT,
                                    generations=state.generation,
                                    final_coop_fraction=state.coop_fraction,
                                    band_entry_generation=band_entry)
        state = step_aggregate(state, params, rng)
        if trace is not None:
            trace.append((state.generation, state.delta))


@dataclass
class CompleteBatchResult:
    outcomes: np.ndarray     # codes as in cycle.OUTCOME_CODES
    generations: np.ndarray
    final_deltas: np.ndarray


def run_complete_batch(initial_deltas: np.ndarray, n: int, params: GameParams,
                       max_generations: int,
                       rng: np.random.Generator) -> CompleteBatchResult:
    """Vectorised aggregate chain over many runs sharing one Generator.

    The batch is deterministic for a given seed and batch composition;
    individual runs are not isolated from each other's draws (use
    run_complete for that).
    """
    deltas = np.array(initial_deltas, dtype=np.int64, copy=True)
    reps = deltas.size
    out_codes = np.empty(reps, dtype=np.int64)
    out_gens = np.empty(reps, dtype=np.int64)
    out_deltas = np.empty(reps, dtype=np.int64)
    active = np.arange(reps)

    scale = (n - 1.0) * params.alpha
    gen = 0
    while active.size:
        gap = payoff_gap(deltas, n, params)
        frozen = (np.abs(gap) <= FREEZE_TOL) | (deltas == 0) | (deltas == n)
        if frozen.any():
            done = active[frozen]
            fin = deltas[frozen]
            codes = np.full(done.size, 2, dtype=np.int64)
            codes[fin == n] = 0
            codes[fin == 0] = 1
            out_codes[done] = codes
            out_gens[done] = gen
            out_deltas[done] = fin
            keep = ~frozen
            deltas = deltas[keep]
            gap = gap[keep]
            active = active[keep]
            if not active.size:
                break
        if gen >= max_generations:
            out_codes[active] = 3
            out_gens[active] = gen
            out_deltas[active] = deltas
            break
        down = gap < -FREEZE_TOL
        up = gap > FREEZE_TOL
        moves = np.zeros_like(deltas)
        if down.any():
            p = ((n - deltas[down]) / (n - 1.0)) * (-gap[down]) / scale
            moves[down] = -rng.binomial(deltas[down], p)
        if up.any():
            rho = (deltas[up] / (n - 1.0)) * gap[up] / scale
            moves[up] = rng.binomial(n - deltas[up], rho)
        deltas = deltas + moves
        gen += 1

    return CompleteBatchResult(outcomes=out_codes, generations=out_gens,
                               final_deltas=out_deltas)
