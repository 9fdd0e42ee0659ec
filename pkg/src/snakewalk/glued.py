"""Glued trees, expanded glued trees, a counting oracle and the snake algorithm.

Layers: in a glued-trees graph of height N the first tree's depth-d vertices
sit on layer -N+d and the second tree's on N+1-d, so the gluing cycle joins
layers 0 and 1. The expanded graph of height M hangs 2**(M-N) copies of the
base graph below a tree T1 (root on layer -M) and above a tree T2 (root on
layer M+1). Every edge changes the layer by exactly one, so a snake on it is
described by its tail layer x and a step word j (1 = up a layer).
"""
import math
import threading
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import words
from .errors import (CapacityError, OracleValidationError, PreconditionError)
from .graph import DEFAULT_CAPACITY, Graph, Snake, enumerate_snakes
from .propagator import evolve
from .tree import WavePacketSpec, build_xi, column_hamiltonian, xi_amplitude

FAILURE = "INVALID"


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

@dataclass
class GluedTrees:
    N: int
    graph: Graph
    layer: dict
    root1: str
    root2: str
    cycle: list = field(default_factory=list)

    @property
    def labels(self):
        return self.graph.vertices

    def leaves(self, side):
        want = 0 if side == 1 else 1
        return [v for v in self.labels if self.layer[v] == want]


def _labels(count, bits, rng):
    seen = set()
    out = []
    while len(out) < count:
        lab = format(int(rng.integers(0, 2 ** bits)), f"0{bits}b")
        if lab not in seen:
            seen.add(lab)
            out.append(lab)
    return out


def make_glued_trees(N, seed=None):
    """Two complete binary trees of height N joined through an alternating leaf cycle."""
    if N < 1:
        raise PreconditionError("N must be >= 1")
    rng = np.random.default_rng(seed)
    size = 2 ** (N + 1) - 1
    labels = _labels(2 * size, 2 * N + 2, rng)
    first, second = labels[:size], labels[size:]
    edges = []
    layer = {}
    for tree, sign in ((first, 1), (second, -1)):
        for i in range(1, size + 1):
            depth = i.bit_length() - 1
            layer[tree[i - 1]] = -N + depth if sign > 0 else N + 1 - depth
            if i > 1:
                edges.append((tree[i // 2 - 1], tree[i - 1]))
    leaves1 = np.array(first[2 ** N - 1:])
    leaves2 = np.array(second[2 ** N - 1:])
    a = leaves1[rng.permutation(len(leaves1))]
    b = leaves2[rng.permutation(len(leaves2))]
    cycle = []
    for i in range(len(a)):
        cycle += [str(a[i]), str(b[i])]
    for i in range(len(cycle)):
        edges.append((cycle[i], cycle[(i + 1) % len(cycle)]))
    g = Graph(edges)
    return GluedTrees(N, g, layer, first[0], second[0], cycle)


@dataclass
class ExpandedGluedTrees:
    base: GluedTrees
    M: int
    graph: Graph
    layer: dict

    @property
    def N(self):
        return self.base.N

    @property
    def copies(self):
        return 2 ** (self.M - self.base.N)

    def region(self, v):
        x = self.layer[v]
        if x <= -self.N:
            return "T1"
        if x >= self.N + 1:
            return "T2"
        return "base"

    def layer_sizes(self):
        out = {}
        for v in self.graph.vertices:
            out[self.layer[v]] = out.get(self.layer[v], 0) + 1
        return dict(sorted(out.items()))

    def root(self, side):
        return ("T1", 1) if side == 1 else ("T2", 1)


def expand(g, M):
    """Hang 2**(M-N) copies of ``g`` between two trees of height M-N.

    Copy i's first root is identified with leaf i of T1, its second root with
    leaf i of T2. Vertices are ("T1", heap index), ("T2", heap index) and
    (copy, label).
    """
    N = g.N
    if M <= N:
        raise PreconditionError("M must exceed N")
    h = M - N
    copies = 2 ** h
    layer = {}

    def node(side, i):
        depth = i.bit_length() - 1
        if depth == h:
            c = i - copies
            return (c, g.root1 if side == "T1" else g.root2)
        return (side, i)

    edges = []
    for side in ("T1", "T2"):
        for i in range(1, 2 ** (h + 1)):
            depth = i.bit_length() - 1
            v = node(side, i)
            layer[v] = -M + depth if side == "T1" else M + 1 - depth
            if i > 1:
                edges.append((node(side, i // 2), v))
    for c in range(copies):
        for u, v in g.graph.edges():
            edges.append(((c, u), (c, v)))
        for lab in g.labels:
            layer[(c, lab)] = g.layer[lab]
    return ExpandedGluedTrees(g, M, Graph(edges), layer)


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

class Oracle:
    """Black-box neighbour access to a glued-trees graph, with a query counter."""

    def __init__(self, glued, seed=None):
        self._graph = glued.graph
        self._valid = set(glued.labels)
        self._rng = np.random.default_rng(seed)
        self._lock = threading.Lock()
        self.entrance = glued.root1
        self.queries = 0

    def neighbors(self, label):
        with self._lock:
            self.queries += 1
            if label not in self._valid:
                return FAILURE
            nb = list(self._graph.neighbors(label))
            order = self._rng.permutation(len(nb))
            return [nb[i] for i in order]

    def reset(self):
        with self._lock:
            self.queries = 0


def explore(oracle, N):
    """Breadth-first discovery of the whole graph from the entrance."""
    start = oracle.entrance
    dist = {start: 0}
    edges = []
    queue = deque([start])
    while queue:
        u = queue.popleft()
        nbs = oracle.neighbors(u)
        if nbs == FAILURE:
            raise OracleValidationError(f"label {u!r} rejected by the oracle")
        for v in nbs:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
            edges.append((u, v))
    layer = {v: -N + d for v, d in dist.items()}
    far = [v for v, d in dist.items() if d == 2 * N + 1]
    if len(far) != 1:
        raise OracleValidationError("explored graph is not a glued-trees graph of height N")
    return GluedTrees(N, Graph(edges), layer, start, far[0])


# ---------------------------------------------------------------------------
# snakes on the expanded graph
# ---------------------------------------------------------------------------

def snake_column(eg, snake):
    """(tail layer, word) of a snake on the expanded graph."""
    verts = snake.vertices if isinstance(snake, Snake) else tuple(snake)
    xs = [eg.layer[v] for v in verts]
    j = 0
    for a, b in zip(xs, xs[1:]):
        j = (j << 1) | (1 if b > a else 0)
    return xs[0], j


def is_bridging(eg, snake):
    regions = {eg.region(v) for v in snake}
    return "T1" in regions and "T2" in regions


class ColumnBasis:
    """Normalised column states of the exact snake space of an expanded graph."""

    def __init__(self, eg, n, capacity=DEFAULT_CAPACITY):
        self.eg = eg
        self.n = n
        self.space = enumerate_snakes(eg.graph, n, capacity)
        cols = {}
        labels = np.empty(len(self.space), dtype=np.int64)
        self.keys = []
        for i in range(len(self.space)):
            key = snake_column(eg, self.space.snake(i))
            if key not in cols:
                cols[key] = len(self.keys)
                self.keys.append(key)
            labels[i] = cols[key]
        self.index = cols
        self.labels = labels
        counts = np.bincount(labels)
        vals = 1 / np.sqrt(counts[labels])
        self.matrix = sp.csr_matrix((vals, (np.arange(len(labels)), labels)),
                                    shape=(len(labels), len(self.keys)))

    def compressed(self):
        """P^T A P with P the column basis."""
        a = self.space.adjacency().astype(float)
        return (self.matrix.T @ a @ self.matrix).tocsr()

    def invariance_residual(self):
        """max over column states of |A c - P P^T A c|."""
        a = self.space.adjacency().astype(float)
        ac = (a @ self.matrix).toarray()
        proj = self.matrix @ (self.matrix.T @ ac)
        return float(np.abs(ac - proj).max())


def column_invariance_residual(eg, n):
    return ColumnBasis(eg, n).invariance_residual()


def compare_with_column_hamiltonian(eg, n):
    """Largest entry difference between the exact compressed walk and column_hamiltonian.

    Only column pairs whose snakes and moves stay strictly between the two
    roots are compared, since column_hamiltonian assumes unbounded trees.
    """
    basis = ColumnBasis(eg, n)
    exact = basis.compressed().toarray()
    M = eg.M
    lo_s, hi_s = words.span_table(n)

    def interior(key):
        x, j = key
        return x + lo_s[j] - 1 > -M and x + hi_s[j] + 1 < M + 1

    ch = column_hamiltonian(n, (-M - n, M + n + 1))
    inside = [i for i, key in enumerate(basis.keys) if interior(key)]
    worst = 0.0
    for a in inside:
        xa, ja = basis.keys[a]
        for b in inside:
            xb, jb = basis.keys[b]
            ref = ch.entry(xa, ja, xb, jb)
            worst = max(worst, abs(exact[a, b] - ref))
    return worst, len(inside)


# ---------------------------------------------------------------------------
# the algorithm
# ---------------------------------------------------------------------------

@dataclass
class SampleRecord:
    snake: tuple
    column: tuple
    bridging: bool
    path: list = None

    def to_dict(self):
        return {"snake": [list(v) if isinstance(v, tuple) else v for v in self.snake],
                "column": list(self.column), "bridging": self.bridging,
                "path": self.path}


@dataclass
class RunOutcome:
    mode: str
    samples: list
    bridging_probability: float
    packet_mass: float
    simulation_queries: int
    validation_queries: int
    config: dict

    @property
    def queries(self):
        return self.simulation_queries + self.validation_queries

    def to_dict(self):
        return {"mode": self.mode, "bridging_probability": self.bridging_probability,
                "packet_mass": self.packet_mass,
                "simulation_queries": self.simulation_queries,
                "validation_queries": self.validation_queries,
                "config": self.config, "samples": [s.to_dict() for s in self.samples]}


def _packet_columns(packet, n, N, M, rank):
    """Packet amplitudes over the column states that lie entirely inside T1."""
    from .bands import TREE, BandFunction, MomentumGrid
    band = BandFunction(TREE, n, rank)
    lo, hi = -M, -N
    grid = MomentumGrid(4096)
    if not lo <= packet.x0 <= hi:
        raise PreconditionError(f"packet centre {packet.x0} outside T1 layers [{lo}, {hi}]")
    state = build_xi(packet, n, grid, tol=None, band=band)
    amps = state.amplitudes
    smin, smax = words.span_table(n)
    out = {}
    for i, x in enumerate(state.xs):
        for j in range(2 ** n):
            if x + smin[j] >= lo and x + smax[j] <= hi and amps[i, j] != 0:
                out[(int(x), j)] = complex(amps[i, j])
    mass = sum(abs(v) ** 2 for v in out.values())
    if mass <= 1e-12:
        raise PreconditionError("the packet has no weight on snakes inside T1")
    return out, mass


def _completion_counts(eg, x, j, n):
    """Per-vertex counts of snakes with tail layer x and word j, via a DP."""
    bits = words.bits_from_word(j, n)
    g = eg.graph
    level = [v for v in g.vertices if eg.layer[v] == x]
    # counts[l][v]: snakes from v that realise bits[l:]
    counts = [dict() for _ in range(n + 1)]

    def count(v, l):
        if l == n:
            return 1
        memo = counts[l]
        if v in memo:
            return memo[v]
        want = eg.layer[v] + (1 if bits[l] else -1)
        tot = sum(count(w, l + 1) for w in g.neighbors(v) if eg.layer[w] == want)
        memo[v] = tot
        return tot

    return level, bits, count


def sample_snake_in_column(eg, x, j, n, rng):
    """A uniformly random snake with tail layer x and word j."""
    level, bits, count = _completion_counts(eg, x, j, n)
    weights = np.array([count(v, 0) for v in level], dtype=float)
    if weights.sum() == 0:
        raise PreconditionError(f"no snake realises column ({x}, {j})")
    v = level[int(rng.choice(len(level), p=weights / weights.sum()))]
    path = [v]
    for l in range(n):
        want = eg.layer[v] + (1 if bits[l] else -1)
        cand = [w for w in eg.graph.neighbors(v) if eg.layer[w] == want]
        cw = np.array([count(w, l + 1) for w in cand], dtype=float)
        v = cand[int(rng.choice(len(cand), p=cw / cw.sum()))]
        path.append(v)
    return Snake(tuple(path))


def run_algorithm(oracle, N, M, n, packet, t, seed=None, samples=1, mode="auto",
                  rank=None, capacity=DEFAULT_CAPACITY):
    """Evolve a T1 packet for time t and sample snakes from the final state.

    ``mode`` is 'exact' (full snake space of the expanded graph), 'column'
    (column_hamiltonian on layers -M..M+1) or 'auto'.
    """
    if n < 2 * N + 1:
        raise PreconditionError("n must be >= 2N+1")
    if M <= N:
        raise PreconditionError("M must exceed N")
    if not isinstance(packet, WavePacketSpec):
        raise PreconditionError("packet must be a WavePacketSpec")
    rng = np.random.default_rng(seed)
    coeffs, mass = _packet_columns(packet, n, N, M, rank)
    norm = math.sqrt(mass)
    config = {"N": N, "M": M, "n": n, "t": t, "seed": seed, "samples": samples,
              "packet": packet.to_dict(), "rank": rank if rank is not None else n // 2}

    before = oracle.queries
    if mode == "auto":
        approx = 2 * (2 ** (M + 1) - 1) * (2 ** N) * 3 ** n
        mode = "exact" if approx <= capacity else "column"

    if mode == "exact":
        base = explore(oracle, N)
        sim_queries = oracle.queries - before
        eg = expand(base, M)
        basis = ColumnBasis(eg, n, capacity)
        v = np.zeros(len(basis.keys), dtype=complex)
        for key, c in coeffs.items():
            if key in basis.index:
                v[basis.index[key]] = c / norm
        v /= np.linalg.norm(v)
        h = basis.compressed()
        out = evolve(h, t, v, method="dense" if h.shape[0] <= 4096 else "chebyshev",
                     tol=1e-10)
        probs = np.abs(out) ** 2
        keys = basis.keys
    elif mode == "column":
        sim_queries = 0
        lo, hi = -M, M + 1
        if hi - lo + 1 < 4 * n:
            raise PreconditionError("column mode needs 2M+2 >= 4n layers")
        ch = column_hamiltonian(n, (lo, hi))
        smin, smax = words.span_table(n)
        keys = [(int(x), j) for x in ch.xs for j in range(2 ** n)
                if x + smin[j] >= lo and x + smax[j] <= hi]
        keep = np.array([ch.index(x, j) for x, j in keys])
        h = ch.matrix[keep][:, keep]
        pos = {key: i for i, key in enumerate(keys)}
        v = np.zeros(len(keys), dtype=complex)
        for key, c in coeffs.items():
            v[pos[key]] = c / norm
        out = evolve(h, t, v, method="chebyshev", tol=1e-10)
        probs = np.abs(out) ** 2
        eg = None
    else:
        raise PreconditionError(f"unknown mode {mode!r}")

    probs = probs / probs.sum()
    smin, smax = words.span_table(n)
    bridge = np.array([x + smin[j] <= -N and x + smax[j] >= N + 1 for x, j in keys])
    p_bridge = float(probs[bridge].sum())

    val_before = oracle.queries
    if eg is None:
        eg = expand(explore(oracle, N), M)
    cdf = np.cumsum(probs)
    records = []
    for _ in range(samples):
        idx = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), len(keys) - 1)
        x, j = keys[idx]
        snake = sample_snake_in_column(eg, x, j, n, rng)
        bridging = is_bridging(eg, snake)
        path = None
        if bridging:
            path = extract_root_path(snake, eg)
            validate_path(path, oracle)
        records.append(SampleRecord(tuple(snake.vertices), (x, j), bridging, path))
    return RunOutcome(mode, records, p_bridge, mass, sim_queries,
                      oracle.queries - val_before, config)


# ---------------------------------------------------------------------------
# path extraction
# ---------------------------------------------------------------------------

def _loop_erase(path):
    out = []
    pos = {}
    for v in path:
        if v in pos:
            cut = pos[v]
            for w in out[cut + 1:]:
                del pos[w]
            out = out[:cut + 1]
        else:
            pos[v] = len(out)
            out.append(v)
    return out


def _crossing(layers, N):
    """(a, b): a later step reaches layer N+1, a is the last visit to layer -N before it."""
    for b, lb in enumerate(layers):
        if lb >= N + 1:
            starts = [a for a in range(b) if layers[a] <= -N]
            if starts:
                return starts[-1], b
    return None


def extract_root_path(snake, eg):
    """Base-graph labels of a root-to-root path found inside a bridging snake, or None."""
    verts = list(snake.vertices if isinstance(snake, Snake) else snake)
    N = eg.N
    layers = [eg.layer[v] for v in verts]
    span = _crossing(layers, N)
    if span is None:
        verts, layers = verts[::-1], layers[::-1]
        span = _crossing(layers, N)
    if span is None:
        return None
    seg = verts[span[0]:span[1] + 1]
    copy = seg[0][0]
    if any(v[0] != copy for v in seg):
        raise OracleValidationError(f"segment leaves copy {copy}")
    path = _loop_erase([v[1] for v in seg])
    if path[0] != eg.base.root1 or path[-1] != eg.base.root2:
        raise OracleValidationError("extracted segment does not join the two roots")
    return path


def validate_path(path, oracle):
    """Check every step of ``path`` against the oracle; raises on failure."""
    if path is None or len(path) < 2:
        raise OracleValidationError("empty path")
    if len(set(path)) != len(path):
        raise OracleValidationError("path repeats a vertex")
    for u, v in zip(path, path[1:]):
        nb = oracle.neighbors(u)
        if nb == FAILURE or v not in nb:
            raise OracleValidationError(f"oracle rejects the step {u} -> {v}")
    return True
