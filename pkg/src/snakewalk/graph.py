"""Graphs, snakes and the snake-walk weight matrix A_n(G).

A snake of length n is a walk (v_0, ..., v_n) of n+1 vertices in which
consecutive vertices are adjacent. Vertices may repeat and the reversed walk
is a different snake. The snake ``s`` moves forward to ``t`` when
``t = (v_1, ..., v_n, w)`` and backward when ``t = (w, v_0, ..., v_{n-1})``;
``A_n(G)[s, t]`` counts both moves.
"""
import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, PreconditionError

DEFAULT_CAPACITY = 5_000_000
DENSE_LIMIT = 4096


class Graph:
    """Undirected simple graph over hashable vertex ids.

    Vertices keep their first-seen order; neighbour lists follow that order,
    so every enumeration built on top is deterministic.
    """

    def __init__(self, edges=(), vertices=()):
        self._ids = []
        self._index = {}
        for v in vertices:
            self._add(v)
        nbrs = {}
        for u, v in edges:
            if u == v:
                raise PreconditionError(f"self-loop at {u!r}")
            iu, iv = self._add(u), self._add(v)
            nbrs.setdefault(iu, set()).add(iv)
            nbrs.setdefault(iv, set()).add(iu)
        nv = len(self._ids)
        lists = [sorted(nbrs.get(i, ())) for i in range(nv)]
        deg = np.array([len(x) for x in lists], dtype=np.int64)
        self.indptr = np.zeros(nv + 1, dtype=np.int64)
        np.cumsum(deg, out=self.indptr[1:])
        self.indices = np.array([w for x in lists for w in x], dtype=np.int64)
        self.degree = deg
        for arr in (self.indptr, self.indices, self.degree):
            arr.setflags(write=False)

    def _add(self, v):
        i = self._index.get(v)
        if i is None:
            i = len(self._ids)
            self._ids.append(v)
            self._index[v] = i
        return i

    @property
    def vertices(self):
        return tuple(self._ids)

    @property
    def num_vertices(self):
        return len(self._ids)

    @property
    def num_edges(self):
        return int(self.degree.sum()) // 2

    def index_of(self, v):
        try:
            return self._index[v]
        except KeyError:
            raise KeyError(f"unknown vertex {v!r}") from None

    def vertex(self, i):
        return self._ids[i]

    def neighbors(self, v):
        i = self.index_of(v)
        return tuple(self._ids[w] for w in self.neighbor_indices(i))

    def neighbor_indices(self, i):
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def has_edge(self, u, v):
        if u not in self._index or v not in self._index:
            return False
        row = self.neighbor_indices(self._index[u])
        iv = self._index[v]
        pos = np.searchsorted(row, iv)
        return bool(pos < row.shape[0] and row[pos] == iv)

    def edges(self):
        out = []
        for i in range(self.num_vertices):
            for w in self.neighbor_indices(i):
                if i < w:
                    out.append((self._ids[i], self._ids[w]))
        return out

    def adjacency_matrix(self):
        nv = self.num_vertices
        data = np.ones(self.indices.shape[0], dtype=np.int64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(nv, nv))

    def __repr__(self):
        return f"Graph(|V|={self.num_vertices}, |E|={self.num_edges})"


def path_graph(lo, hi):
    """The line segment with integer vertices lo..hi."""
    if hi < lo:
        raise PreconditionError("empty path graph")
    return Graph([(x, x + 1) for x in range(lo, hi)], vertices=range(lo, hi + 1))


def cycle_graph(m):
    if m < 3:
        raise PreconditionError("a cycle needs at least 3 vertices")
    return Graph([(i, (i + 1) % m) for i in range(m)], vertices=range(m))


def read_edge_list(path):
    """One ``u v`` pair per line; '#' starts a comment. Ids stay strings."""
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise PreconditionError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            edges.append((parts[0], parts[1]))
    return Graph(edges)


def count_walks(g, n):
    """Number of length-n walks, the sum of all entries of A^n (as a float)."""
    a = g.adjacency_matrix().astype(float)
    c = np.ones(g.num_vertices)
    for _ in range(n):
        c = a @ c
    return float(c.sum())


# ---------------------------------------------------------------------------
# snakes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Snake:
    vertices: tuple

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        if len(self.vertices) < 2:
            raise PreconditionError("a snake has at least two vertices")

    @property
    def n(self):
        return len(self.vertices) - 1

    @property
    def head(self):
        return self.vertices[-1]

    @property
    def tail(self):
        return self.vertices[0]

    def reversed(self):
        return Snake(self.vertices[::-1])

    def is_valid(self, g):
        return all(g.has_edge(u, v) for u, v in zip(self.vertices, self.vertices[1:]))

    def __iter__(self):
        return iter(self.vertices)

    def __len__(self):
        return len(self.vertices)


def _check_pair(s, t):
    if len(s.vertices) != len(t.vertices):
        raise PreconditionError(f"snake lengths differ: {s.n} vs {t.n}")


def can_move_forward(s, t, g=None):
    """True iff t = (v_1, ..., v_n, w) with w a neighbour of v_n."""
    _check_pair(s, t)
    if t.vertices[:-1] != s.vertices[1:]:
        return False
    return g is None or g.has_edge(s.vertices[-1], t.vertices[-1])


def can_move_backward(s, t, g=None):
    """True iff t = (w, v_0, ..., v_{n-1}) with w a neighbour of v_0."""
    _check_pair(s, t)
    if t.vertices[1:] != s.vertices[:-1]:
        return False
    return g is None or g.has_edge(t.vertices[0], s.vertices[0])


def move_weight(s, t, g=None):
    return int(can_move_forward(s, t, g)) + int(can_move_backward(s, t, g))


class SnakeSpace:
    """All snakes of length n in lexicographic vertex-index order.

    Snakes are stored as an integer array of vertex indices. The ordinal of a
    snake is found by binary search on a mixed-radix key built from the start
    vertex and the neighbour-choice index of every later vertex. When that key
    would overflow 62 bits a dictionary on vertex tuples is used instead.
    """

    def __init__(self, g, n, paths, keys, radix):
        self.graph = g
        self.n = n
        self.paths = paths
        self.keys = keys
        self.radix = radix
        self._adj = None
        self._table = None
        paths.setflags(write=False)
        if keys is not None:
            keys.setflags(write=False)

    def __len__(self):
        return self.paths.shape[0]

    @property
    def snakes(self):
        return [self.snake(i) for i in range(len(self))]

    def snake(self, i):
        return Snake(tuple(self.graph.vertex(v) for v in self.paths[i]))

    def index(self, s):
        """Ordinal of a snake (``Snake`` or vertex sequence)."""
        verts = s.vertices if isinstance(s, Snake) else tuple(s)
        if len(verts) != self.n + 1:
            raise PreconditionError("snake length does not match the space")
        idx = np.array([self.graph.index_of(v) for v in verts], dtype=np.int64)
        pos = self.lookup(idx[None, :])[0]
        if pos < 0:
            raise KeyError(f"not a snake of this space: {verts!r}")
        return int(pos)

    def _choice(self, prev, nxt):
        # position of nxt inside the neighbour list of prev, -1 if absent
        g = self.graph
        nv = g.num_vertices
        flat = np.repeat(np.arange(nv, dtype=np.int64), g.degree) * nv + g.indices
        want = prev * nv + nxt
        if flat.shape[0] == 0:
            return np.full(want.shape, -1, dtype=np.int64)
        pos = np.minimum(np.searchsorted(flat, want), flat.shape[0] - 1)
        return np.where(flat[pos] == want, pos - g.indptr[prev], -1)

    def lookup(self, paths):
        """Ordinals for rows of vertex indices; -1 where not a snake here."""
        paths = np.asarray(paths, dtype=np.int64)
        if self.keys is None:
            if self._table is None:
                self._table = {tuple(p): i for i, p in enumerate(self.paths.tolist())}
            return np.array([self._table.get(tuple(p), -1) for p in paths.tolist()],
                            dtype=np.int64)
        key = paths[:, 0].copy()
        valid = np.ones(paths.shape[0], dtype=bool)
        for l in range(1, self.n + 1):
            ch = self._choice(paths[:, l - 1], paths[:, l])
            valid &= ch >= 0
            key = key * self.radix + np.maximum(ch, 0)
        pos = np.minimum(np.searchsorted(self.keys, key), len(self.keys) - 1)
        return np.where(valid & (self.keys[pos] == key), pos, -1)

    def forward_pairs(self):
        """(s, t) ordinal pairs with t a forward move of s."""
        g = self.graph
        last = self.paths[:, -1]
        deg = g.degree[last]
        src = np.repeat(np.arange(len(self)), deg)
        within = np.arange(src.shape[0]) - np.repeat(np.cumsum(deg) - deg, deg)
        if self.keys is not None:
            r, n = self.radix, self.n
            rest = self.keys[src] % (r ** (n - 1))
            key = (self.paths[src, 1] * r ** (n - 1) + rest) * r + within
            dst = np.searchsorted(self.keys, key)
        else:
            new = g.indices[np.repeat(g.indptr[last], deg) + within]
            moved = np.concatenate([self.paths[src, 1:], new[:, None]], axis=1)
            dst = self.lookup(moved)
        return src, dst

    def adjacency(self, dense=False):
        """Symmetric weight matrix A_n(G) = F + F^T (sparse CSR by default)."""
        if self._adj is None:
            src, dst = self.forward_pairs()
            size = len(self)
            f = sp.csr_matrix((np.ones(src.shape[0], dtype=np.int64), (src, dst)),
                              shape=(size, size))
            a = (f + f.T).tocsr()
            a.sort_indices()
            self._adj = a
        if dense:
            if len(self) > DENSE_LIMIT:
                raise CapacityError(f"dense matrix requested for {len(self)} snakes")
            return self._adj.toarray()
        return self._adj

    def to_json(self):
        a = self.adjacency().tocoo()

        def ident(v):
            return int(v) if isinstance(v, (int, np.integer)) else str(v)

        return json.dumps({
            "n": self.n,
            "snakes": [[ident(self.graph.vertex(v)) for v in row] for row in self.paths.tolist()],
            "weights": [[int(r), int(c), int(w)] for r, c, w in zip(a.row, a.col, a.data)],
        })


def enumerate_snakes(g, n, capacity=DEFAULT_CAPACITY):
    """Build the snake space S_n(G) in lexicographic order."""
    if n < 1:
        raise PreconditionError("snake length must be >= 1")
    if g.num_vertices == 0:
        raise PreconditionError("graph has no vertices")
    total = count_walks(g, n)
    if total > capacity:
        raise CapacityError(f"|S_{n}(G)| = {total:.0f} exceeds the capacity {capacity}")
    radix = max(int(g.degree.max()), 1)
    use_keys = g.num_vertices * float(radix) ** n < 2.0 ** 62
    paths = np.arange(g.num_vertices, dtype=np.int64)[:, None]
    keys = np.arange(g.num_vertices, dtype=np.int64)
    for _ in range(n):
        last = paths[:, -1]
        deg = g.degree[last]
        src = np.repeat(np.arange(paths.shape[0]), deg)
        within = np.arange(src.shape[0]) - np.repeat(np.cumsum(deg) - deg, deg)
        new = g.indices[np.repeat(g.indptr[last], deg) + within]
        paths = np.concatenate([paths[src], new[:, None]], axis=1)
        if use_keys:
            keys = keys[src] * radix + within
    return SnakeSpace(g, n, np.ascontiguousarray(paths), keys if use_keys else None, radix)


def snake_adjacency(space, dense=False):
    return space.adjacency(dense=dense)


# ---------------------------------------------------------------------------
# line encoding
# ---------------------------------------------------------------------------

def line_encode(s):
    """(v_0, ..., v_n) on the integer line -> (x, j) with j a bit string."""
    verts = s.vertices if isinstance(s, Snake) else tuple(s)
    bits = []
    for u, v in zip(verts, verts[1:]):
        if not (isinstance(u, (int, np.integer)) and isinstance(v, (int, np.integer))):
            raise PreconditionError("line snakes have integer vertices")
        step = int(v) - int(u)
        if step not in (-1, 1):
            raise PreconditionError(f"step {u}->{v} is not a line edge")
        bits.append("1" if step == 1 else "0")
    if not bits:
        raise PreconditionError("a snake has at least two vertices")
    return int(verts[0]), "".join(bits)


def line_decode(x, j):
    if not j or set(j) - {"0", "1"}:
        raise PreconditionError(f"not a bit-word: {j!r}")
    verts = [int(x)]
    for b in j:
        verts.append(verts[-1] + (1 if b == "1" else -1))
    return Snake(tuple(verts))
