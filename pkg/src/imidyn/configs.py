"""Random initial ring configurations and their run statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable

import numpy as np

from .cycle import CycleState, decompose


@dataclass(frozen=True)
class InitialSpec:
    """I.i.d. Bernoulli initial condition: cooperate with probability coop_p."""

    n: int
    coop_p: float
    seed: object = None

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ValueError("a ring needs at least three vertices")
        if not 0.0 <= self.coop_p <= 1.0:
            raise ValueError("coop_p must be a probability")


def sample_bits(n: int, coop_p: float, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. Bernoulli(coop_p) bits, one uniform per vertex."""
    return (rng.random(n) < coop_p).astype(np.uint8)


def sample(spec: InitialSpec, rng: np.random.Generator = None) -> CycleState:
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    return CycleState(sample_bits(spec.n, spec.coop_p, rng))


@dataclass
class ConfigStats:
    longest_c_run: int
    longest_d_run: int
    longest_alternating: int
    longest_nonbarrier: int
    # count of all-cooperator windows per requested length, overlapping,
    # wrapping around the ring (the window count whose mean is n * p^len)
    window_counts: Dict[int, int] = field(default_factory=dict)


def count_coop_windows(state: CycleState, length: int) -> int:
    if length < 1:
        raise ValueError("window length must be >= 1")
    s = state.strategies
    n = s.size
    if length > n:
        return 0
    ext = np.concatenate([s, s[: length - 1]]).astype(np.int64)
    sums = np.convolve(ext, np.ones(length, dtype=np.int64), mode="valid")
    return int(np.count_nonzero(sums == length))


def config_stats(state: CycleState,
                 window_lengths: Iterable[int] = ()) -> ConfigStats:
    dec = decompose(state)
    return ConfigStats(
        longest_c_run=dec.longest_c_run,
        longest_d_run=dec.longest_d_run,
        longest_alternating=dec.longest_alternating,
        longest_nonbarrier=dec.longest_nonbarrier,
        window_counts={ln: count_coop_windows(state, ln)
                       for ln in window_lengths},
    )
