"""Exact Markov-chain counterparts of the simulators, for small instances.

Ring states are integers whose bit i is the strategy of vertex i, so the
full chain on n vertices has 2**n states; the complete-graph chain lives
on the cooperator counts {0..n}.  Vertices update independently given
the current state, hence every ring transition row is an exact product
over per-vertex flip probabilities.

Absorption structure is read off the support graph: a closed class is a
strongly connected component with no outgoing edge (steady states are
the singleton case).  Hitting probabilities and expected times then come
from the standard transient-block linear systems.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu, spilu, lgmres, LinearOperator
from scipy.stats import binom

from .games import GameParams, PAYOFF_TIE_TOL
from .complete import FREEZE_TOL, payoff_gap
from .cycle import CycleState, _payoffs

SUPPORT_EPS = 1e-15      # edges below this probability are treated as absent
DENSE_SOLVE_LIMIT = 2 ** 14
ITER_TOL = 1e-10


# ---------------------------------------------------------------------------
# ring chain
# ---------------------------------------------------------------------------

def _all_states(n: int) -> np.ndarray:
    """(2**n, n) bit matrix; bit i of the row index is vertex i."""
    idx = np.arange(1 << n, dtype=np.uint32)
    return ((idx[:, None] >> np.arange(n)[None, :]) & 1).astype(np.uint8)


def vertex_flip_probs(states: np.ndarray, params: GameParams) -> np.ndarray:
    """Per-vertex one-generation flip probability for a stack of ring states.

    q_i = (p when copying left + p when copying right) / 2, with each side
    zero unless that neighbour differs and strictly out-earns the vertex.
    """
    P = _payoffs(states, params)
    left = np.roll(states, 1, axis=-1)
    right = np.roll(states, -1, axis=-1)
    two_alpha = 2.0 * params.alpha
    pl = (np.roll(P, 1, axis=-1) - P) / two_alpha
    pr = (np.roll(P, -1, axis=-1) - P) / two_alpha
    pl = np.where((pl > PAYOFF_TIE_TOL) & (left != states),
                  np.minimum(pl, 1.0), 0.0)
    pr = np.where((pr > PAYOFF_TIE_TOL) & (right != states),
                  np.minimum(pr, 1.0), 0.0)
    return 0.5 * (pl + pr)


def cycle_transition_row(state: CycleState,
                         params: GameParams) -> Dict[int, float]:
    """Exact successor distribution of one ring state, keyed by state index."""
    if state.n > 20:
        raise ValueError("full ring chains are capped at n = 20")
    q = vertex_flip_probs(state.strategies[None, :], params)[0]
    base = int(sum(int(b) << i for i, b in enumerate(state.strategies)))
    return _expand_row(base, q)


def _expand_row(state_int: int, q: np.ndarray) -> Dict[int, float]:
    sure = np.flatnonzero(q >= 1.0)
    for i in sure:
        state_int ^= 1 << int(i)
    free = np.flatnonzero((q > 0.0) & (q < 1.0))
    if free.size == 0:
        return {state_int: 1.0}
    k = free.size
    combos = np.arange(1 << k, dtype=np.int64)
    flip_bits = ((combos[:, None] >> np.arange(k)[None, :]) & 1).astype(bool)
    qf = q[free]
    probs = np.prod(np.where(flip_bits, qf, 1.0 - qf), axis=1)
    masks = flip_bits @ (1 << free.astype(np.int64))
    return {int(state_int ^ m): float(p) for m, p in zip(masks, probs)}


def build_cycle_chain(n: int, params: GameParams) -> sp.csr_matrix:
    """Row-stochastic transition matrix over all 2**n ring states."""
    if n > 20:
        raise ValueError("full ring chains are capped at n = 20")
    states = _all_states(n)
    qs = vertex_flip_probs(states, params)
    rows, cols, vals = [], [], []
    for s_int in range(1 << n):
        row = _expand_row(s_int, qs[s_int])
        rows.extend([s_int] * len(row))
        cols.extend(row.keys())
        vals.extend(row.values())
    P = sp.csr_matrix((vals, (rows, cols)), shape=(1 << n, 1 << n))
    err = np.abs(P.sum(axis=1).A1 - 1.0).max()
    if err > 1e-12:
        raise RuntimeError(f"transition rows do not sum to 1 (err={err:g})")
    return P


# ---------------------------------------------------------------------------
# generic absorbing-chain solve
# ---------------------------------------------------------------------------

class _TransientSolver:
    """Solve (I-Q) x = b and the transposed system, direct or iterative."""

    def __init__(self, Q: sp.spmatrix):
        A = sp.eye(Q.shape[0], format="csc") - Q.tocsc()
        self._A = A
        if Q.shape[0] <= DENSE_SOLVE_LIMIT:
            self._lu = splu(A)
        else:
            self._lu = None
            self._ilu = spilu(A, drop_tol=1e-6, fill_factor=20)

    def solve(self, b: np.ndarray, trans: str = "N") -> np.ndarray:
        if self._lu is not None:
            return self._lu.solve(b, trans=trans)
        A = self._A if trans == "N" else self._A.T.tocsc()
        pre = LinearOperator(A.shape, (self._ilu.solve if trans == "N" else
                                       lambda v: self._ilu.solve(v, trans="T")))
        x, info = lgmres(A, b, M=pre, rtol=ITER_TOL, atol=0.0)
        if info != 0:
            raise RuntimeError(f"iterative transient solve failed (info={info})")
        return x


@dataclass
class ChainSolve:
    """Absorption analysis of a finite chain with closed-class detection.

    ``classes`` lists the closed classes (tuples of state indices, the
    multi-state ones being recurrent sets hit as a whole) and
    ``expected_times[s]`` is the expected number of generations from s to
    any closed class (0 inside one).
    """

    P: sp.csr_matrix
    classes: List[Tuple[int, ...]]
    class_of: Dict[int, int]
    transient: np.ndarray
    expected_times: np.ndarray
    _solver: Optional[_TransientSolver]
    _into_class: Optional[sp.csr_matrix]
    _transient_pos: Dict[int, int]

    @property
    def num_states(self) -> int:
        return self.P.shape[0]

    def absorption_probs(self, start: int) -> np.ndarray:
        """Probability of ending in each closed class, from one start."""
        if start in self.class_of:
            probs = np.zeros(len(self.classes))
            probs[self.class_of[start]] = 1.0
            return probs
        e = np.zeros(self.transient.size)
        e[self._transient_pos[start]] = 1.0
        visits = self._solver.solve(e, trans="T")
        return np.asarray(visits @ self._into_class).ravel()

    def expected_time(self, start: int) -> float:
        return float(self.expected_times[start])


def solve_chain(P: sp.csr_matrix) -> ChainSolve:
    support = P.copy()
    support.data = (support.data > SUPPORT_EPS).astype(np.float64)
    support.eliminate_zeros()
    ncomp, comp = connected_components(support, directed=True,
                                       connection="strong")

    # a component is closed iff no edge leaves it
    coo = support.tocoo()
    open_comp = np.zeros(ncomp, dtype=bool)
    leaving = comp[coo.row] != comp[coo.col]
    open_comp[np.unique(comp[coo.row[leaving]])] = True

    classes: List[Tuple[int, ...]] = []
    class_of: Dict[int, int] = {}
    for c in range(ncomp):
        if not open_comp[c]:
            members = tuple(int(s) for s in np.flatnonzero(comp == c))
            for m in members:
                class_of[m] = len(classes)
            classes.append(members)

    nstates = P.shape[0]
    closed_mask = np.zeros(nstates, dtype=bool)
    closed_mask[list(class_of.keys())] = True
    transient = np.flatnonzero(~closed_mask)
    expected = np.zeros(nstates)

    solver = None
    into_class = None
    pos = {int(s): i for i, s in enumerate(transient)}
    if transient.size:
        Q = P[transient][:, transient]
        solver = _TransientSolver(Q)
        expected[transient] = solver.solve(np.ones(transient.size))
        # column c: one-step probability of entering closed class c
        cols = []
        Pt = P[transient].tocsc()
        for members in classes:
            cols.append(np.asarray(Pt[:, list(members)].sum(axis=1)).ravel())
        into_class = sp.csr_matrix(np.column_stack(cols)) if cols else None

    return ChainSolve(P=P, classes=classes, class_of=class_of,
                      transient=transient, expected_times=expected,
                      _solver=solver, _into_class=into_class,
                      _transient_pos=pos)


def solve_absorption(n: int, params: GameParams) -> ChainSolve:
    """Full absorption solve of the ring chain on 2**n states."""
    return solve_chain(build_cycle_chain(n, params))


# ---------------------------------------------------------------------------
# complete-graph chain
# ---------------------------------------------------------------------------

def complete_chain(n: int, params: GameParams) -> sp.csr_matrix:
    """Exact chain of the cooperator count on K_n (states 0..n)."""
    if n > 200:
        raise ValueError("complete-graph chains are capped at n = 200")
    scale = (n - 1.0) * params.alpha
    rows, cols, vals = [], [], []
    for delta in range(n + 1):
        gap = float(payoff_gap(delta, n, params))
        if delta == 0 or delta == n or abs(gap) <= FREEZE_TOL:
            rows.append(delta); cols.append(delta); vals.append(1.0)
            continue
        if gap < 0.0:
            count = delta
            p = ((n - delta) / (n - 1.0)) * (-gap) / scale
            ks = np.arange(count + 1)
            pmf = binom.pmf(ks, count, p)
            targets = delta - ks
        else:
            count = n - delta
            p = (delta / (n - 1.0)) * gap / scale
            ks = np.arange(count + 1)
            pmf = binom.pmf(ks, count, p)
            targets = delta + ks
        rows.extend([delta] * len(ks))
        cols.extend(targets.tolist())
        vals.extend(pmf.tolist())
    P = sp.csr_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))
    err = np.abs(P.sum(axis=1).A1 - 1.0).max()
    if err > 1e-12:
        raise RuntimeError(f"transition rows do not sum to 1 (err={err:g})")
    return P


def solve_complete(n: int, params: GameParams) -> ChainSolve:
    return solve_chain(complete_chain(n, params))


# ---------------------------------------------------------------------------
# closed-form absorption times
# ---------------------------------------------------------------------------

def merging_chain_matrix(gap_close: float, gap_open: float) -> np.ndarray:
    """Transient block of the two-barrier merging chain.

    States are the number of defectors (1, 2, 3) separating two
    cooperator barriers.  ``gap_close`` is the per-choice probability
    that an edge defector of the gap adopts cooperation; ``gap_open`` the
    per-choice probability that a cooperator flanking a singleton
    defector adopts defection.  Absorption (state 0) is only reachable
    from the two-defector state, where both edge defectors must flip in
    the same generation.
    """
    b, d = gap_close, gap_open
    return np.array([
        [(1 - d / 2) ** 2, d * (1 - d / 2), d * d / 4],
        [b * (1 - b / 2), (1 - b / 2) ** 2, 0.0],
        [b * b / 4, b * (1 - b / 2), (1 - b / 2) ** 2],
    ])


def merging_times(gap_close: float, gap_open: float) -> Tuple[float, float, float]:
    """Expected generations to merge two barriers 1, 2 or 3 defectors apart."""
    b, d = float(gap_close), float(gap_open)
    if not (0.0 < b < 1.0 and 0.0 < d < 1.0):
        raise ValueError("both probabilities must lie strictly in (0, 1)")
    denom = d * b * b * (4.0 - b - d)
    tau1 = (16*b - 8*b**2 + b**3 + 16*d - 4*b*d - b*d**2) / denom
    tau2 = 2.0 * (8*b - 6*b**2 + b**3 + 8*d - 2*b*d - b*d**2) / denom
    tau3 = (16*b - 12*b**2 + 3*b**3 + 16*d - 3*b*d**2) / denom
    return tau1, tau2, tau3


def merging_times_solve(gap_close: float, gap_open: float) -> Tuple[float, float, float]:
    """Same quantities by solving (I - Q) tau = 1 on the transient block."""
    Q = merging_chain_matrix(gap_close, gap_open)
    tau = np.linalg.solve(np.eye(3) - Q, np.ones(3))
    return tuple(float(t) for t in tau)


def gamblers_ruin_duration(right: float, left: float, start: int) -> float:
    """Expected duration of the short-run random walk on {0..4}.

    The walk moves right with probability ``right``, left with ``left``
    and stays put otherwise; 0 and 4 absorb.  The closed form evaluated
    at the raw (lazy) step probabilities already accounts for the
    self-loops; the balanced branch needs the explicit 1/(right+left).
    """
    r, q = float(right), float(left)
    if not (r > 0.0 and q > 0.0 and r + q <= 1.0):
        raise ValueError("need right > 0, left > 0 and right + left <= 1")
    if start not in (1, 2, 3):
        raise ValueError("start must be an interior state 1, 2 or 3")
    if abs(r - q) < 1e-12:
        return start * (4 - start) / (r + q)
    t = q / r
    return start / (q - r) - (4.0 / (q - r)) * (1 - t ** start) / (1 - t ** 4)


def gamblers_ruin_solve(right: float, left: float, start: int) -> float:
    """Independent linear solve of the same lazy walk."""
    r, q = float(right), float(left)
    A = np.zeros((3, 3))
    for i, z in enumerate((1, 2, 3)):
        A[i, i] = r + q
        if z + 1 <= 3:
            A[i, z] -= r
        if z - 1 >= 1:
            A[i, z - 2] -= q
    tau = np.linalg.solve(A, np.ones(3))
    return float(tau[start - 1])
