"""Parameter sweeps over the (S, T) square and absorption-time scaling runs.

Grid convention: S is horizontal in [-1, 1], T vertical in [0, 2], with
grid points at cell centres.  Centres of a square grid still land exactly
on the T = S+1 diagonal (and on T = S for even step counts); such cells
classify as border cells and region-based consumers must filter them by
zone.  With ``include_borders`` the sweep additionally evaluates, for
every S column, one point snapped onto each of the four border lines,
since border dynamics differ qualitatively from both adjacent regions.

Reproducibility: ring cells derive one seed per replicate from
SeedSequence((master, s_index, t_index, rep)), so any cell - or any
single replicate - can be recomputed in isolation and the CSV is
byte-identical for a given spec and master seed regardless of the number
of workers.  Complete-graph cells use one SeedSequence((master, s_index,
t_index)) stream for the whole vectorised cell.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import complete as km
from . import cycle as ring
from .configs import sample_bits
from .games import GameParams, make_params

BORDER_LINES = (
    ("AB", lambda s: s + 1.0),
    ("BD", lambda s: (s + 1.0) / 2.0),
    ("ED", lambda s: 2.0 * s),
    ("FE", lambda s: s),
)

CSV_HEADER = "S,T,mean_frac,std,n_allc,n_alld,n_mixed,n_timeout,mean_absorb_gen"


@dataclass(frozen=True)
class SweepSpec:
    topology: str               # "cycle" or "complete"
    n: int
    s_range: Tuple[float, float] = (-1.0, 1.0)
    s_steps: int = 20
    t_range: Tuple[float, float] = (0.0, 2.0)
    t_steps: int = 20
    coop_p: Optional[float] = 0.5       # ring: Bernoulli initial
    theta0: Optional[float] = 0.5       # complete: initial fraction
    init_bits: Optional[str] = None     # ring: explicit initial state
    generations: int = 10000
    reps: int = 100
    seed: int = 0
    include_borders: bool = False

    def __post_init__(self) -> None:
        if self.topology not in ("cycle", "complete"):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.s_steps < 1 or self.t_steps < 1 or self.reps < 1:
            raise ValueError("steps and repetitions must be >= 1")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not (-1.0 <= self.s_range[0] <= self.s_range[1] <= 1.0):
            raise ValueError("S range must lie within [-1, 1]")
        if not (0.0 <= self.t_range[0] <= self.t_range[1] <= 2.0):
            raise ValueError("T range must lie within [0, 2]")

    def s_values(self) -> np.ndarray:
        lo, hi = self.s_range
        h = (hi - lo) / self.s_steps
        return lo + (np.arange(self.s_steps) + 0.5) * h

    def t_values(self) -> np.ndarray:
        lo, hi = self.t_range
        h = (hi - lo) / self.t_steps
        return lo + (np.arange(self.t_steps) + 0.5) * h


@dataclass(frozen=True)
class SweepCell:
    s_index: int
    t_index: int                # >= 1000 marks a snapped border point
    S: float
    T: float
    mean_frac: float
    std: float
    n_allc: int
    n_alld: int
    n_mixed: int
    n_timeout: int
    mean_absorb_gen: float


def _cell_initials(spec: SweepSpec, rngs) -> np.ndarray:
    if spec.init_bits is not None:
        row = ring.CycleState.from_string(spec.init_bits).strategies
        if row.size != spec.n:
            raise ValueError("--init length must equal n")
        return np.tile(row, (spec.reps, 1))
    return np.stack([sample_bits(spec.n, spec.coop_p, r) for r in rngs])


def run_cell(spec: SweepSpec, s_index: int, t_index: int,
             S: float, T: float) -> SweepCell:
    """Evaluate one grid cell; reproducible standalone by construction."""
    params = make_params(S, T)
    if spec.topology == "cycle":
        rngs = [np.random.default_rng(
            np.random.SeedSequence((spec.seed, s_index, t_index, r)))
            for r in range(spec.reps)]
        initials = _cell_initials(spec, rngs)
        res = ring.run_batch(initials, params, spec.generations, rngs)
        fracs = res.final_states.mean(axis=1)
        codes = res.outcomes
        gens = res.generations
    else:
        rng = np.random.default_rng(
            np.random.SeedSequence((spec.seed, s_index, t_index)))
        delta0 = int(round(spec.theta0 * spec.n))
        res = km.run_complete_batch(np.full(spec.reps, delta0), spec.n,
                                    params, spec.generations, rng)
        fracs = res.final_deltas / spec.n
        codes = res.outcomes
        gens = res.generations

    absorbed = codes != 3
    return SweepCell(
        s_index=s_index, t_index=t_index, S=S, T=T,
        mean_frac=float(fracs.mean()), std=float(fracs.std()),
        n_allc=int((codes == 0).sum()), n_alld=int((codes == 1).sum()),
        n_mixed=int((codes == 2).sum()), n_timeout=int((codes == 3).sum()),
        mean_absorb_gen=float(gens[absorbed].mean()) if absorbed.any()
        else float("nan"),
    )


def _cell_list(spec: SweepSpec) -> List[Tuple[int, int, float, float]]:
    cells = []
    svals = spec.s_values()
    for ti, T in enumerate(spec.t_values()):
        for si, S in enumerate(svals):
            cells.append((si, ti, float(S), float(T)))
    if spec.include_borders:
        t_lo, t_hi = spec.t_range
        for line_id, (_, line) in enumerate(BORDER_LINES):
            for si, S in enumerate(svals):
                T = line(float(S))
                if t_lo <= T <= t_hi:
                    cells.append((si, 1000 + line_id, float(S), float(T)))
    return cells


def run_sweep(spec: SweepSpec, workers: int = 1) -> List[SweepCell]:
    cells = _cell_list(spec)
    if workers <= 1:
        return [run_cell(spec, *c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_cell, spec, *c) for c in cells]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# output formats
# ---------------------------------------------------------------------------

def format_csv(cells: Sequence[SweepCell]) -> str:
    lines = [CSV_HEADER]
    for c in cells:
        lines.append(
            f"{c.S:.10g},{c.T:.10g},{c.mean_frac:.10g},{c.std:.10g},"
            f"{c.n_allc},{c.n_alld},{c.n_mixed},{c.n_timeout},"
            f"{c.mean_absorb_gen:.10g}")
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> List[SweepCell]:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if lines[0] != CSV_HEADER:
        raise ValueError("unexpected CSV header")
    out = []
    for ln in lines[1:]:
        f = ln.split(",")
        out.append(SweepCell(
            s_index=-1, t_index=-1, S=float(f[0]), T=float(f[1]),
            mean_frac=float(f[2]), std=float(f[3]), n_allc=int(f[4]),
            n_alld=int(f[5]), n_mixed=int(f[6]), n_timeout=int(f[7]),
            mean_absorb_gen=float(f[8])))
    return out


def emit_csv(cells: Sequence[SweepCell], path: str) -> None:
    with open(path, "w") as fh:
        fh.write(format_csv(cells))


def pgm_bytes(cells: Sequence[SweepCell], spec: SweepSpec) -> bytes:
    """8-bit grayscale map: rows descending T, columns ascending S.

    Only regular grid cells are rendered; snapped border points (from
    include_borders) are not part of the rectangle.
    """
    img = np.zeros((spec.t_steps, spec.s_steps), dtype=np.uint8)
    seen = np.zeros_like(img, dtype=bool)
    for c in cells:
        if c.t_index >= 1000:
            continue
        row = spec.t_steps - 1 - c.t_index
        img[row, c.s_index] = int(round(255.0 * c.mean_frac))
        seen[row, c.s_index] = True
    if not seen.all():
        raise ValueError("sweep does not cover the full grid")
    header = f"P5\n{spec.s_steps} {spec.t_steps}\n255\n".encode()
    return header + img.tobytes()


def emit_pgm(cells: Sequence[SweepCell], spec: SweepSpec, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(pgm_bytes(cells, spec))


def read_pgm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    magic, dims, maxval, rest = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ValueError("not an 8-bit P5 file")
    w, h = (int(x) for x in dims.split())
    return np.frombuffer(rest[: w * h], dtype=np.uint8).reshape(h, w)


# ---------------------------------------------------------------------------
# scaling studies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingRow:
    n: int
    median_time: float
    mean_time: float
    ci_low: float       # bootstrap 95% CI of the median
    ci_high: float
    n_timeout: int


def default_cap(n: int) -> int:
    return 10 * n * math.ceil(math.log2(n))


def run_scaling(S: float, T: float, n_list: Sequence[int], reps: int,
                seed: int, coop_p: float = 0.5, topology: str = "cycle",
                theta0: float = 0.5, cap=None,
                bootstrap: int = 1000) -> List[ScalingRow]:
    """Absorption-time statistics per ring size at one payoff point.

    The payoff point must be off the coexistence borders, otherwise
    absorption is not the relevant observable.  Each replicate has its
    own seed stream, so rows are reproducible independently of batching.
    """
    params = make_params(S, T)
    rows = []
    for n in n_list:
        max_gens = default_cap(n) if cap is None else cap(n)
        if topology == "cycle":
            rngs = [np.random.default_rng(
                np.random.SeedSequence((seed, n, r))) for r in range(reps)]
            initials = np.stack([sample_bits(n, coop_p, r) for r in rngs])
            res = ring.run_batch(initials, params, max_gens, rngs)
            gens, codes = res.generations, res.outcomes
        else:
            rng = np.random.default_rng(np.random.SeedSequence((seed, n)))
            delta0 = int(round(theta0 * n))
            res = km.run_complete_batch(np.full(reps, delta0), n, params,
                                        max_gens, rng)
            gens, codes = res.generations, res.outcomes
        absorbed = gens[codes != 3]
        boot_rng = np.random.default_rng(
            np.random.SeedSequence((seed, n, 0xB007)))
        if absorbed.size:
            meds = np.median(
                boot_rng.choice(absorbed, size=(bootstrap, absorbed.size)),
                axis=1)
            ci_low, ci_high = np.percentile(meds, [2.5, 97.5])
            row = ScalingRow(n=n, median_time=float(np.median(absorbed)),
                             mean_time=float(absorbed.mean()),
                             ci_low=float(ci_low), ci_high=float(ci_high),
                             n_timeout=int((codes == 3).sum()))
        else:
            row = ScalingRow(n=n, median_time=float("nan"),
                             mean_time=float("nan"), ci_low=float("nan"),
                             ci_high=float("nan"), n_timeout=reps)
        rows.append(row)
    return rows


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares comparison of t ~ a + b*log2(n) against t ~ a + b*n."""

    r2_log: float
    r2_linear: float
    aic_log: float
    aic_linear: float

    @property
    def prefers_log(self) -> bool:
        return self.aic_log < self.aic_linear

    @property
    def prefers_linear(self) -> bool:
        return self.aic_linear < self.aic_log


def fit_scaling(rows: Sequence[ScalingRow]) -> ScalingFit:
    ns = np.array([r.n for r in rows], dtype=np.float64)
    ts = np.array([r.median_time for r in rows], dtype=np.float64)

    def fit(x):
        X = np.column_stack([np.ones_like(x), x])
        coef, *_ = np.linalg.lstsq(X, ts, rcond=None)
        resid = ts - X @ coef
        rss = float(resid @ resid)
        tss = float(((ts - ts.mean()) ** 2).sum())
        r2 = 1.0 - rss / tss if tss > 0 else 1.0
        k = len(ts)
        aic = k * math.log(max(rss, 1e-300) / k) + 2 * 2
        return r2, aic

    r2_log, aic_log = fit(np.log2(ns))
    r2_lin, aic_lin = fit(ns)
    return ScalingFit(r2_log=r2_log, r2_linear=r2_lin,
                      aic_log=aic_log, aic_linear=aic_lin)


def format_scaling_csv(rows: Sequence[ScalingRow]) -> str:
    lines = ["n,median_time,mean_time,ci_low,ci_high,n_timeout"]
    for r in rows:
        lines.append(f"{r.n},{r.median_time:.10g},{r.mean_time:.10g},"
                     f"{r.ci_low:.10g},{r.ci_high:.10g},{r.n_timeout}")
    return "\n".join(lines) + "\n"
