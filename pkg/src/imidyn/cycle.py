"""Synchronous proportional imitation on the n-cycle.

Every generation each vertex picks its left or right neighbour with
probability 1/2 and copies that neighbour's strategy with probability
max{0, (P_nb - P_self) / (2 alpha)}, all decisions reading the previous
generation's state.  States are numpy uint8 vectors; the stepping kernel
is vectorised over vertices and, in the batch runner, over replicates.

Randomness contract: a trajectory consumes exactly two uniform draws per
vertex per generation - draws[i, 0] selects the neighbour (< 0.5 means
left), draws[i, 1] is the copy coin - taken in vertex order from the
run's own numpy Generator.  A run is therefore reproducible from its
seed alone, no matter how runs are batched or distributed over workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .games import GameParams, Region, Zone, PAYOFF_TIE_TOL
from .outcomes import AbsorptionReport, Outcome

# Steadiness is checked every generation up to this size and every 16
# generations above it; delayed detection only inflates the reported
# absorption time by < 16 because steady states are closed under step.
STEADY_CHECK_DENSE_LIMIT = 4096
STEADY_CHECK_STRIDE = 16


@dataclass
class CycleState:
    """Ring of n binary strategies (1 = cooperate) plus a generation count."""

    strategies: np.ndarray
    generation: int = 0

    def __post_init__(self) -> None:
        s = np.asarray(self.strategies, dtype=np.uint8)
        if s.ndim != 1 or s.size < 3:
            raise ValueError("a ring needs at least three vertices")
        if not np.all((s == 0) | (s == 1)):
            raise ValueError("strategies must be 0/1 bits")
        self.strategies = s

    @property
    def n(self) -> int:
        return self.strategies.size

    @property
    def coop_fraction(self) -> float:
        return float(self.strategies.mean())

    @classmethod
    def from_string(cls, bits: str, generation: int = 0) -> "CycleState":
        if set(bits) - {"0", "1"}:
            raise ValueError(f"not a bitstring: {bits!r}")
        return cls(np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0"),
                   generation)

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.strategies)


@dataclass(frozen=True)
class Run:
    kind: str  # "c" or "d"
    start: int
    length: int


@dataclass
class RunDecomposition:
    """Canonical maximal-run decomposition of a ring state.

    Runs are listed in ring order starting from the run containing vertex
    0; a uniform state yields a single run of length n.  The non-barrier
    length is the longest stretch of d-runs glued by singleton
    cooperators between two c-runs of length >= 2, wrapping around the
    ring; it is n when no such c-run exists and 0 for uniform states.
    """

    runs: list = field(default_factory=list)
    longest_c_run: int = 0
    longest_d_run: int = 0
    longest_alternating: int = 0
    longest_nonbarrier: int = 0


def decompose(state: CycleState) -> RunDecomposition:
    s = state.strategies
    n = s.size
    breaks = np.flatnonzero(s != np.roll(s, 1))  # i where run starts at i

    if breaks.size == 0:
        kind = "c" if s[0] else "d"
        longest = {"c": 0, "d": 0}
        longest[kind] = n
        return RunDecomposition(runs=[Run(kind, 0, n)],
                                longest_c_run=longest["c"],
                                longest_d_run=longest["d"],
                                longest_alternating=1,
                                longest_nonbarrier=0)

    starts = breaks
    lengths = np.diff(np.append(starts, starts[0] + n))
    runs = [Run("c" if s[st] else "d", int(st), int(ln))
            for st, ln in zip(starts, lengths)]
    # rotate so the run containing vertex 0 comes first
    if runs[0].start != 0:
        runs = runs[-1:] + runs[:-1]

    c_lengths = [r.length for r in runs if r.kind == "c"]
    d_lengths = [r.length for r in runs if r.kind == "d"]

    return RunDecomposition(
        runs=runs,
        longest_c_run=max(c_lengths, default=0),
        longest_d_run=max(d_lengths, default=0),
        longest_alternating=_longest_alternating(s),
        longest_nonbarrier=_longest_nonbarrier(runs, n),
    )


def _longest_alternating(s: np.ndarray) -> int:
    """Longest arc of strictly alternating bits (n if the whole ring is)."""
    diff = s != np.roll(s, -1)  # diff[i]: s[i] != s[i+1]
    if diff.all():
        return s.size
    if not diff.any():
        return 1
    # longest circular stretch of consecutive True in diff, plus one vertex
    ext = np.concatenate([diff, diff])
    best = cur = 0
    for v in ext[: 2 * s.size - 1]:
        cur = cur + 1 if v else 0
        best = max(best, cur)
    return min(best + 1, s.size)


def _longest_nonbarrier(runs: Sequence[Run], n: int) -> int:
    anchor_idx = [i for i, r in enumerate(runs)
                  if r.kind == "c" and r.length >= 2]
    if not anchor_idx:
        return n
    anchored = sum(runs[i].length for i in anchor_idx)
    if len(anchor_idx) == 1:
        return n - anchored
    best = 0
    for a, b in zip(anchor_idx, anchor_idx[1:] + [anchor_idx[0] + len(runs)]):
        gap = sum(runs[i % len(runs)].length for i in range(a + 1, b))
        best = max(best, gap)
    return best


# ---------------------------------------------------------------------------
# stepping kernel
# ---------------------------------------------------------------------------

def _payoffs(states: np.ndarray, params: GameParams) -> np.ndarray:
    """Per-vertex accrued payoff; works on (..., n) stacks of ring states."""
    left = np.roll(states, 1, axis=-1)
    right = np.roll(states, -1, axis=-1)
    coop_nb = (left + right).astype(np.float64)
    return np.where(states == 1, coop_nb + (2.0 - coop_nb) * params.S,
                    coop_nb * params.T)


def flip_prob_table(params: GameParams) -> np.ndarray:
    """One-sided flip probabilities for all 16 neighbourhood patterns.

    Index layout: prev*8 + self*4 + chosen*2 + beyond, where prev is the
    non-chosen neighbour and beyond the chosen one's far neighbour.  The
    hot kernels gather from this table with uint8 index arithmetic, which
    also pins the border tie-handling in exactly one place.
    """
    from .games import switch_prob_cycle
    lut = np.zeros(16)
    for prev in (0, 1):
        for own in (0, 1):
            for chosen in (0, 1):
                for beyond in (0, 1):
                    lut[prev * 8 + own * 4 + chosen * 2 + beyond] = \
                        switch_prob_cycle(prev, own, chosen, beyond, params)
    return lut


def _neighbour_rolls(states: np.ndarray):
    left = np.roll(states, 1, axis=-1)
    right = np.roll(states, -1, axis=-1)
    left2 = np.roll(states, 2, axis=-1)
    right2 = np.roll(states, -2, axis=-1)
    return left, right, left2, right2


def step_with_draws(strategies: np.ndarray, params: GameParams,
                    draws: np.ndarray, lut: np.ndarray = None) -> np.ndarray:
    """Advance one generation using explicit uniforms of shape (..., n, 2)."""
    if lut is None:
        lut = flip_prob_table(params)
    left, right, left2, right2 = _neighbour_rolls(strategies)
    choose_left = draws[..., 0] < 0.5
    prev = np.where(choose_left, right, left)
    chosen = np.where(choose_left, left, right)
    beyond = np.where(choose_left, left2, right2)
    idx = (prev << 3) | (strategies << 2) | (chosen << 1) | beyond
    p = lut[idx]
    return np.where(draws[..., 1] < p, chosen, strategies)


def step(state: CycleState, params: GameParams,
         rng: np.random.Generator) -> CycleState:
    """One synchronous generation; consumes 2n uniforms in vertex order."""
    draws = rng.random((state.n, 2))
    return CycleState(step_with_draws(state.strategies, params, draws),
                      state.generation + 1)


def _steady_mask(states: np.ndarray, can_flip: np.ndarray) -> np.ndarray:
    """True per ring where every vertex has zero switch probability
    against both neighbours (the state is then fixed with probability 1).

    ``can_flip`` is the boolean view of a flip-probability table.
    """
    left, right, left2, right2 = _neighbour_rolls(states)
    idx_l = (right << 3) | (states << 2) | (left << 1) | left2
    idx_r = (left << 3) | (states << 2) | (right << 1) | right2
    return ~np.any(can_flip[idx_l] | can_flip[idx_r], axis=-1)


def is_steady(state: CycleState, params: GameParams) -> bool:
    can_flip = flip_prob_table(params) > 0.0
    return bool(_steady_mask(state.strategies[None, :], can_flip)[0])


def classify_outcome(strategies: np.ndarray) -> Outcome:
    total = int(strategies.sum())
    if total == strategies.size:
        return Outcome.ALL_COOPERATE
    if total == 0:
        return Outcome.ALL_DEFECT
    return Outcome.MIXED_STEADY


def run_to_absorption(initial: CycleState, params: GameParams,
                      max_generations: int,
                      rng: np.random.Generator,
                      trace: Optional[list] = None) -> AbsorptionReport:
    """Iterate until every switch probability is zero, or the cap.

    Steadiness is tested before drawing any randomness for a generation,
    so an absorbed run stops consuming its stream; the trajectory is a
    pure function of (initial, params, seed).
    """
    if max_generations < 1:
        raise ValueError("max_generations must be >= 1")
    n = initial.n
    stride = 1 if n <= STEADY_CHECK_DENSE_LIMIT else STEADY_CHECK_STRIDE
    lut = flip_prob_table(params)
    can_flip = lut > 0.0
    state = initial
    if trace is not None:
        trace.append((state.generation, state.to_string()))
    while True:
        check_now = stride == 1 or state.generation % stride == 0
        if check_now and _steady_mask(state.strategies[None, :], can_flip)[0]:
            return AbsorptionReport(outcome=classify_outcome(state.strategies),
                                    generations=state.generation,
                                    final_coop_fraction=state.coop_fraction,
                                    final_state_summary=decompose(state))
        if state.generation >= max_generations:
            return AbsorptionReport(outcome=Outcome.TIMED_OUT,
                                    generations=state.generation,
                                    final_coop_fraction=state.coop_fraction,
                                    final_state_summary=decompose(state))
        draws = rng.random((n, 2))
        state = CycleState(step_with_draws(state.strategies, params, draws,
                                           lut),
                           state.generation + 1)
        if trace is not None:
            trace.append((state.generation, state.to_string()))


def barrier_threshold(region: Region) -> Optional[int]:
    """Minimum c-run length that can never be eliminated, per zone."""
    if region.zone in (Zone.B, Zone.C):
        return 4
    if region.zone in (Zone.D, Zone.E):
        return 2
    return None


# ---------------------------------------------------------------------------
# batch runner
# ---------------------------------------------------------------------------

@dataclass
class BatchResult:
    """Per-replicate outcomes of a vectorised batch of ring runs."""

    outcomes: np.ndarray        # Outcome codes, see OUTCOME_CODES
    generations: np.ndarray     # int64, generation of first steadiness / cap
    final_states: np.ndarray    # uint8 (reps, n)

    def final_fractions(self) -> np.ndarray:
        return self.final_states.mean(axis=1)

    def reports(self) -> list:
        out = []
        for code, gen, fs in zip(self.outcomes, self.generations,
                                 self.final_states):
            outcome = OUTCOME_CODES[int(code)]
            out.append(AbsorptionReport(
                outcome=outcome, generations=int(gen),
                final_coop_fraction=float(fs.mean())))
        return out


OUTCOME_CODES = {0: Outcome.ALL_COOPERATE, 1: Outcome.ALL_DEFECT,
                 2: Outcome.MIXED_STEADY, 3: Outcome.TIMED_OUT}


def _encode_outcomes(states: np.ndarray) -> np.ndarray:
    totals = states.sum(axis=1)
    codes = np.full(states.shape[0], 2, dtype=np.int64)
    codes[totals == states.shape[1]] = 0
    codes[totals == 0] = 1
    return codes


def run_batch(initials: np.ndarray, params: GameParams, max_generations: int,
              rngs, check_stride: Optional[int] = None) -> BatchResult:
    """Run many replicates of the same (n, params) in lock step.

    ``rngs`` is either a list of per-replicate Generators (each replicate
    then consumes draws exactly as a standalone run_to_absorption would,
    making any single replicate reproducible in isolation) or a single
    Generator shared by the whole batch for bulk statistical work.
    """
    states = np.array(initials, dtype=np.uint8, copy=True)
    if states.ndim != 2:
        raise ValueError("initials must be a (reps, n) array")
    reps, n = states.shape
    shared = isinstance(rngs, np.random.Generator)
    if not shared and len(rngs) != reps:
        raise ValueError("need one Generator per replicate")
    if check_stride is None:
        check_stride = 1 if n <= STEADY_CHECK_DENSE_LIMIT else STEADY_CHECK_STRIDE

    out_codes = np.empty(reps, dtype=np.int64)
    out_gens = np.empty(reps, dtype=np.int64)
    out_states = np.empty((reps, n), dtype=np.uint8)

    # pair tables over idx_left*16 + idx_right: one gather answers "can
    # this vertex flip at all" and one (doubled by the neighbour-choice
    # bit) gives the flip probability of the chosen side
    lut = flip_prob_table(params)
    pair = np.arange(256)
    movable_tbl = (lut[pair >> 4] > 0.0) | (lut[pair & 15] > 0.0)
    p_tbl = np.empty(512)
    p_tbl[0::2] = lut[pair & 15]   # choice bit 0: copy the right neighbour
    p_tbl[1::2] = lut[pair >> 4]   # choice bit 1: copy the left neighbour

    active = np.arange(reps)
    gen = 0
    draws = np.empty((reps, n, 2))
    while active.size:
        left, right, left2, right2 = _neighbour_rolls(states)
        pair_idx = ((right << 3) | (states << 2) | (left << 1) | left2) << 4 \
            | ((left << 3) | (states << 2) | (right << 1) | right2)
        if check_stride == 1 or gen % check_stride == 0:
            steady = ~np.any(movable_tbl[pair_idx], axis=1)
            if steady.any():
                done = active[steady]
                out_codes[done] = _encode_outcomes(states[steady])
                out_gens[done] = gen
                out_states[done] = states[steady]
                keep = ~steady
                states, left, right = states[keep], left[keep], right[keep]
                left2, right2 = left2[keep], right2[keep]
                pair_idx = pair_idx[keep]
                active = active[keep]
                if shared:
                    draws = draws[: active.size]
                else:
                    draws = np.empty((active.size, n, 2))
                if not active.size:
                    break
        if gen >= max_generations:
            out_codes[active] = 3
            out_gens[active] = gen
            out_states[active] = states
            break
        buf = draws[: active.size]
        if shared:
            rngs.random(out=buf.reshape(-1))
        else:
            for k, rep in enumerate(active):
                rngs[rep].random(out=buf[k].reshape(-1))
        m8 = (buf[..., 0] < 0.5).view(np.uint8)  # 1: copy left neighbour
        p = p_tbl[(pair_idx.astype(np.uint16) << 1) | m8]
        flip8 = (buf[..., 1] < p).view(np.uint8)
        chosen = right ^ ((left ^ right) & -m8)
        states = states ^ ((states ^ chosen) & -flip8)
        gen += 1

    return BatchResult(outcomes=out_codes, generations=out_gens,
                       final_states=out_states)
