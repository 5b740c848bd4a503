"""UCT and Mi-UCT tree search over ``kernels`` positions.

The tree lives in four flat arrays so the whole iteration loop can run
compiled:

* ``ni`` (nodes x 8, int64): visits, first edge, edge count, expanded flag,
  and the Mi-UCT block T, k, arm count, Δ deadline.
* ``nf`` (nodes x 2, float64): own mean, Δ.
* ``ei`` (edges x 3, int64): move, pulls, child node (-1 until expanded).
* ``ef`` (edges, float64): edge mean.

A node's own mean and all of its edge means are from the point of view of
the player to move at that node; a reward crosses one ply as ``1 - r``.
An edge's first pull runs a random playout from the child position; the
child node is expanded the next time the edge is chosen.  Terminal children
are scored exactly and never expanded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from . import kernels as K
from .rng import make_stream

UCT, MIUCT = 0, 1
REF_NODE, REF_BEST = 0, 1

N_VISITS, N_FIRST, N_NEDGES, N_EXPANDED, N_T, N_K, N_ARMS, N_DEADLINE = range(8)
NF_MEAN, NF_DELTA = 0, 1
E_MOVE, E_PULLS, E_CHILD = 0, 1, 2
C_NODES, C_EDGES, C_PLAYOUTS, C_TERMINAL, C_ROLLOVERS, C_HALVINGS = range(6)


@njit(cache=True)
def _clog(x):
    return math.log(x) if x > 1.0 else 0.0


@njit(cache=True)
def _n_samples(T, delta):
    return max(1, math.ceil(2.0 * _clog(T * delta * delta) / (delta * delta)))


@njit(cache=True)
def uct_value(mean, c, parent_visits, pulls):
    return mean + c * math.sqrt(math.log(parent_visits) / pulls)


@njit(cache=True)
def miuct_value(mean, horizon_T, delta, k, pulls):
    """Edge mean plus ``sqrt(log(T delta^2) r / (2k))`` with ``r = T / pulls``."""
    return mean + math.sqrt(_clog(horizon_T * delta * delta) * (horizon_T / pulls) / (2.0 * k))


@njit(cache=True)
def _new_node(ni, nf, cnt):
    node = cnt[C_NODES]
    cnt[C_NODES] += 1
    ni[node, :] = 0
    nf[node, :] = 0.0
    return node


@njit(cache=True)
def _expand(ni, nf, ei, ef, cnt, node, s, moves):
    n = K.legal_moves(s, moves)
    first = cnt[C_EDGES]
    for j in range(n):
        e = first + j
        ei[e, E_MOVE] = moves[j]
        ei[e, E_PULLS] = 0
        ei[e, E_CHILD] = -1
        ef[e] = 0.0
    cnt[C_EDGES] += n
    ni[node, N_FIRST] = first
    ni[node, N_NEDGES] = n
    ni[node, N_EXPANDED] = 1
    # Mi-UCT bandit block, fresh episode with T = 2
    nf[node, NF_DELTA] = 1.0
    ni[node, N_T] = 2
    ni[node, N_ARMS] = n
    ni[node, N_K] = _n_samples(2.0, 1.0)
    ni[node, N_DEADLINE] = ni[node, N_K] * n


@njit(cache=True)
def _select_uct(ni, ei, ef, node, c):
    first = ni[node, N_FIRST]
    n = ni[node, N_NEDGES]
    visits = max(1, ni[node, N_VISITS])
    best = -1
    best_v = -np.inf
    for e in range(first, first + n):
        pulls = ei[e, E_PULLS]
        if pulls == 0:
            return e
        v = uct_value(ef[e], c, visits, pulls)
        if v > best_v:
            best_v = v
            best = e
    return best


@njit(cache=True)
def _select_miuct(ni, nf, ei, ef, node):
    first = ni[node, N_FIRST]
    n = ni[node, N_NEDGES]
    T = float(ni[node, N_T])
    delta = nf[node, NF_DELTA]
    k = ni[node, N_K]
    best = -1
    best_v = -np.inf
    for e in range(first, first + n):
        pulls = ei[e, E_PULLS]
        if pulls == 0:
            return e
        v = miuct_value(ef[e], T, delta, k, pulls)
        if v > best_v:
            best_v = v
            best = e
    return best


@njit(cache=True)
def _miuct_bookkeeping(ni, nf, ef, cnt, node, elim_ref):
    t = ni[node, N_VISITS]
    if t >= ni[node, N_T]:
        T = ni[node, N_T]
        nf[node, NF_DELTA] = 1.0
        ni[node, N_T] = t + T * T
        ni[node, N_ARMS] = ni[node, N_NEDGES]
        ni[node, N_K] = _n_samples(float(ni[node, N_T]), 1.0)
        ni[node, N_DEADLINE] = t + ni[node, N_K] * ni[node, N_ARMS]
        cnt[C_ROLLOVERS] += 1
    if t >= ni[node, N_DEADLINE]:
        T = float(ni[node, N_T])
        delta = nf[node, NF_DELTA]
        h = math.sqrt(_clog(T * delta * delta) / (2.0 * ni[node, N_K]))
        first = ni[node, N_FIRST]
        n = ni[node, N_NEDGES]
        if elim_ref == REF_NODE:
            ref = nf[node, NF_MEAN]
        else:
            ref = -np.inf
            for e in range(first, first + n):
                ref = max(ref, ef[e])
        gone = 0
        for e in range(first, first + n):
            if ef[e] + h < ref - h:
                gone += 1
        ni[node, N_ARMS] = max(1, n - gone)
        delta = delta / 2.0
        nf[node, NF_DELTA] = delta
        ni[node, N_K] = _n_samples(T, delta)
        ni[node, N_DEADLINE] = t + ni[node, N_K] * ni[node, N_ARMS]
        cnt[C_HALVINGS] += 1


@njit(cache=True)
def run_iterations(ni, nf, ei, ef, cnt, root, kind, c, elim_ref, stream, n_iter):
    """Run ``n_iter`` selection/expansion/simulation/backup passes from node 0."""
    path_n = np.empty(K.MOVE_CAP + 2, dtype=np.int64)
    path_e = np.empty(K.MOVE_CAP + 2, dtype=np.int64)
    moves = np.empty(K.MAX_MOVES, dtype=np.int64)
    buf = K.scratch()
    for _ in range(n_iter):
        s = root.copy()
        node = 0
        d = 0
        while True:
            if kind == MIUCT:
                e = _select_miuct(ni, nf, ei, ef, node)
            else:
                e = _select_uct(ni, ei, ef, node, c)
            path_n[d] = node
            path_e[d] = e
            d += 1
            K.play_with(s, ei[e, E_MOVE], buf)
            child = ei[e, E_CHILD]
            if child < 0:
                mover = s[K.TO_MOVE]  # read before the playout advances s
                if K.is_terminal(s):
                    r_child = 1.0 if K.winner(s) == mover else 0.0
                    cnt[C_TERMINAL] += 1
                    break
                if ei[e, E_PULLS] == 0:
                    r_child = 1.0 if K.playout(s, stream) == mover else 0.0
                    cnt[C_PLAYOUTS] += 1
                    break
                child = _new_node(ni, nf, cnt)
                _expand(ni, nf, ei, ef, cnt, child, s, moves)
                ei[e, E_CHILD] = child
            node = child
        r = 1.0 - r_child
        for i in range(d - 1, -1, -1):
            node = path_n[i]
            e = path_e[i]
            pulls = ei[e, E_PULLS] + 1
            ei[e, E_PULLS] = pulls
            ef[e] += (r - ef[e]) / pulls
            t = ni[node, N_VISITS] + 1
            ni[node, N_VISITS] = t
            nf[node, NF_MEAN] += (r - nf[node, NF_MEAN]) / t
            if kind == MIUCT:
                _miuct_bookkeeping(ni, nf, ef, cnt, node, elim_ref)
            r = 1.0 - r


@njit(cache=True)
def _best_edge(ni, ei, ef, node):
    first = ni[node, N_FIRST]
    best = first
    for e in range(first + 1, first + ni[node, N_NEDGES]):
        if ei[e, E_PULLS] > ei[best, E_PULLS] or (
                ei[e, E_PULLS] == ei[best, E_PULLS] and ef[e] > ef[best]):
            best = e
    return best


# ------------------------------------------------------------ Python side


@dataclass(frozen=True)
class EngineConfig:
    kind: str = "miuct"
    exploration_c: float = 0.5
    playouts_per_move: int = 1000
    seed: int = 0
    elimination_reference: str = "node"

    def __post_init__(self):
        if self.kind not in ("uct", "miuct"):
            raise ValueError(f"unknown engine kind {self.kind!r}")
        if self.playouts_per_move < 1:
            raise ValueError("playouts_per_move must be >= 1")
        if self.kind == "uct" and not self.exploration_c >= 0:
            raise ValueError("exploration_c must be non-negative")
        if self.elimination_reference not in ("node", "best"):
            raise ValueError("elimination_reference is 'node' or 'best'")

    @property
    def label(self) -> str:
        return f"uct:C={self.exploration_c:g}" if self.kind == "uct" else "miuct"


@dataclass
class SearchNode:
    """Read-only snapshot of one tree node."""

    index: int
    visits: int
    mean: float
    expanded: bool
    moves: np.ndarray
    edge_pulls: np.ndarray
    edge_means: np.ndarray
    children: np.ndarray
    delta: float
    horizon_T: int
    k: int
    arm_count: int
    delta_deadline: int


class SearchTree:
    """A search tree rooted at ``root`` with room for ``capacity`` iterations."""

    def __init__(self, root, capacity: int):
        arr = root.array if hasattr(root, "array") else np.asarray(root, dtype=np.int64)
        if K.is_terminal(arr):
            raise ValueError("cannot search from a terminal position")
        nodes = capacity + 2
        if arr[K.GAME] == K.NOGO:
            # NoGo never frees a point, so no descendant has more moves than the root has empties
            width = int(np.count_nonzero(arr[: K.NPOINTS] == K.EMPTY))
        else:
            width = K.MAX_MOVES
        self.root = arr.copy()
        self.capacity = capacity
        self.ni = np.zeros((nodes, 8), dtype=np.int64)
        self.nf = np.zeros((nodes, 2), dtype=np.float64)
        self.ei = np.empty((nodes * width, 3), dtype=np.int64)
        self.ef = np.empty(nodes * width, dtype=np.float64)
        self.counters = np.zeros(6, dtype=np.int64)
        self.iterations = 0
        node = _new_node(self.ni, self.nf, self.counters)
        _expand(self.ni, self.nf, self.ei, self.ef, self.counters, node, self.root,
                np.empty(K.MAX_MOVES, dtype=np.int64))

    def run(self, n: int, config: EngineConfig, stream) -> None:
        if self.iterations + n > self.capacity:
            raise ValueError("tree capacity exceeded")
        kind = MIUCT if config.kind == "miuct" else UCT
        ref = REF_NODE if config.elimination_reference == "node" else REF_BEST
        run_iterations(self.ni, self.nf, self.ei, self.ef, self.counters, self.root,
                       kind, float(config.exploration_c), ref, stream, n)
        self.iterations += n

    @property
    def num_nodes(self) -> int:
        return int(self.counters[C_NODES])

    @property
    def playouts(self) -> int:
        return int(self.counters[C_PLAYOUTS])

    @property
    def terminal_evaluations(self) -> int:
        return int(self.counters[C_TERMINAL])

    def node(self, index: int = 0) -> SearchNode:
        if not 0 <= index < self.num_nodes:
            raise IndexError(index)
        ni, nf = self.ni[index], self.nf[index]
        first, n = ni[N_FIRST], ni[N_NEDGES]
        sl = slice(first, first + n)
        return SearchNode(
            index=index, visits=int(ni[N_VISITS]), mean=float(nf[NF_MEAN]),
            expanded=bool(ni[N_EXPANDED]), moves=self.ei[sl, E_MOVE].copy(),
            edge_pulls=self.ei[sl, E_PULLS].copy(), edge_means=self.ef[sl].copy(),
            children=self.ei[sl, E_CHILD].copy(), delta=float(nf[NF_DELTA]),
            horizon_T=int(ni[N_T]), k=int(ni[N_K]), arm_count=int(ni[N_ARMS]),
            delta_deadline=int(ni[N_DEADLINE]),
        )

    def nodes(self):
        for i in range(self.num_nodes):
            yield self.node(i)

    def best_move(self) -> int:
        return int(self.ei[_best_edge(self.ni, self.ei, self.ef, 0), E_MOVE])


class Engine:
    """Plays moves with a fresh tree and a fixed playout budget per move."""

    def __init__(self, config: EngineConfig, stream: Optional[np.ndarray] = None):
        self.config = config
        self.stream = stream if stream is not None else make_stream(config.seed)
        self.last_tree: Optional[SearchTree] = None
        self.iterations_per_move: list[int] = []

    def search(self, state) -> SearchTree:
        tree = SearchTree(state, self.config.playouts_per_move)
        tree.run(self.config.playouts_per_move, self.config, self.stream)
        self.last_tree = tree
        self.iterations_per_move.append(tree.playouts + tree.terminal_evaluations)
        return tree

    def best_move(self, state) -> int:
        return self.search(state).best_move()


def search_best_move(config: EngineConfig, state, stream=None) -> int:
    return Engine(config, stream).best_move(state)
