"""Momentum-space spectral analysis of the snake walk on the integer line.

At fixed momentum k the walk acts on the 2**n move words through
``build_Hnk``. A k-dependent orthonormal "hat" basis turns it into a
binary-tree shaped coupling pattern whose blocks are labelled by odd
integers l. Only the block containing the words 0, 1, 2, 4, ... carries
k-dependent eigenvalues. Those come from the (n+1)x(n+1) chain matrix
``phi_matrix`` and its secular equation.
"""
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

from . import words
from .bands import (LINE, SIN_EPS, BandFunction, MomentumGrid, chain_matrix,
                    solve_roots)
from .errors import CapacityError, PreconditionError, TruncationError
from .graph import enumerate_snakes, line_encode, path_graph
from .propagator import evolve

MAX_N = 20
DENSE_MAX_N = 12


# ---------------------------------------------------------------------------
# H_{n,k}
# ---------------------------------------------------------------------------

def _move_pattern(n, weights):
    """Rows/cols/values of the e^{ik} part; weights for (j0<-0j, j1<-0j, 1j<-j0, 1j<-j1)."""
    half = 2 ** (n - 1)
    j = np.arange(half)
    zj, oj, j0, j1 = j, half + j, 2 * j, 2 * j + 1
    rows = np.concatenate([j0, j1, oj, oj])
    cols = np.concatenate([zj, zj, j0, j1])
    vals = np.concatenate([np.full(half, w, dtype=float) for w in weights])
    return rows, cols, vals


def _assemble_hnk(n, k, weights, sparse, max_n):
    if n < 1:
        raise PreconditionError("n must be >= 1")
    if n > max_n:
        raise CapacityError(f"n={n} exceeds the configured limit {max_n}")
    if not sparse and n > DENSE_MAX_N:
        raise CapacityError(f"dense 2**{n} matrix requested; pass sparse=True")
    rows, cols, vals = _move_pattern(n, weights)
    dim = 2 ** n
    fwd = sp.coo_matrix((vals * np.exp(1j * k), (rows, cols)), shape=(dim, dim)).tocsr()
    h = fwd + fwd.conj().T
    return h.tocsr() if sparse else h.toarray()


def build_Hnk(n, k, sparse=False, max_n=MAX_N):
    """The 2**n x 2**n momentum-k block of the line snake walk."""
    return _assemble_hnk(n, k, (1.0, 1.0, 1.0, 1.0), sparse, max_n)


# ---------------------------------------------------------------------------
# hat basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HatBasis:
    n: int
    k: float
    vectors: np.ndarray     # column m is |m-hat_k>

    def __getitem__(self, m):
        return self.vectors[:, m]

    def gram(self):
        return self.vectors.conj().T @ self.vectors

    def transform(self, h):
        """Matrix of ``h`` in this basis."""
        return self.vectors.conj().T @ h @ self.vectors


def line_factors(k):
    s = 1 / math.sqrt(2)
    u0 = np.array([np.exp(-1j * k), np.exp(1j * k)]) * s
    u1 = np.array([np.exp(-1j * k), -np.exp(1j * k)]) * s
    v0 = np.array([1.0, 1.0]) * s
    v1 = np.array([1.0, -1.0]) * s
    return u0, u1, v0, v1


def hat_vector(n, m, factors):
    """|m-hat>: -i u0^n for m = 0, else u0^(n-L-1) u1 v_(bits of m below its top bit)."""
    u0, u1, v0, v1 = factors
    if m == 0:
        return -1j * reduce(np.kron, [u0] * n)
    top = m.bit_length() - 1
    parts = [u0] * (n - top - 1) + [u1]
    parts += [v1 if (m >> b) & 1 else v0 for b in range(top - 1, -1, -1)]
    return reduce(np.kron, parts).astype(complex)


def build_hat_basis(n, k, factors):
    if n < 1:
        raise PreconditionError("n must be >= 1")
    if n > DENSE_MAX_N:
        raise CapacityError(f"hat basis for n={n} would be a dense 2**{n} matrix")
    vecs = np.empty((2 ** n, 2 ** n), dtype=complex)
    for m in range(2 ** n):
        vecs[:, m] = hat_vector(n, m, factors)
    return HatBasis(n, float(k), vecs)


def hat_basis(n, k):
    return build_hat_basis(n, k, line_factors(k))


def block_members(n):
    """{odd l: [hat indices]}; block 1 also holds index 0."""
    out = {}
    for l in range(1, 2 ** n, 2):
        m, members = l, []
        while m < 2 ** n:
            members.append(m)
            m *= 2
        out[l] = members
    out[1] = [0] + out[1]
    return out


def block_projectors(n, k, basis=None):
    """{odd l: projector onto the hat vectors l*2^j} (block 1 includes 0-hat)."""
    basis = basis or hat_basis(n, k)
    out = {}
    for l, members in block_members(n).items():
        b = basis.vectors[:, members]
        out[l] = b @ b.conj().T
    return out


def isometry_from_basis(basis):
    """U = sum_y |(2^(n-y))-hat><y| + |0-hat><n+1|, shape (2**n, n+1)."""
    n = basis.n
    cols = [2 ** (n - y) for y in range(1, n + 1)] + [0]
    return basis.vectors[:, cols]


def isometry(n, k):
    return isometry_from_basis(hat_basis(n, k))


def phi_matrix(n, k):
    return chain_matrix(LINE, n, k)


# ---------------------------------------------------------------------------
# roots and the median band
# ---------------------------------------------------------------------------

def solve_p_equation(n, k):
    """The n+1 roots in (0, pi) of 2(cos p - cos k) sin((n+1)p) = sin^2 k sin(np)."""
    if abs(math.sin(k)) <= SIN_EPS:
        raise PreconditionError("k = 0 mod pi: use the analytic spectrum (k_dependent_spectrum)")
    return solve_roots(LINE, n, [k])[0]


def k_dependent_spectrum(n, k):
    """The n+1 k-dependent eigenvalues, descending; analytic at k = 0 mod pi."""
    return 4 * np.cos(solve_roots(LINE, n, [k])[0])


def median_band(n):
    if n < 2 or n % 2:
        raise PreconditionError("the median band needs an even n >= 2")
    return BandFunction(LINE, n)


def band_derivatives(band, k, order):
    return band.derivative(k, order)


def psi(band, k):
    """Word-space band vector U_{n,k} phi(k)."""
    return words.synthesize(words.line_weights(band.n), band.n, k, band.eigvec(k))


# ---------------------------------------------------------------------------
# the n -> infinity scaled band
# ---------------------------------------------------------------------------

def Lambda(k):
    k = np.asarray(k, dtype=float)
    return 4 * np.arctan2(2 * np.cos(k), np.sin(k) ** 2)


def Lambda_d1(k):
    k = np.asarray(k, dtype=float)
    return -8 * np.sin(k) / (1 + np.cos(k) ** 2)


def Lambda_d2(k):
    k = np.asarray(k, dtype=float)
    c2 = np.cos(k) ** 2
    return -8 * np.cos(k) * (3 - c2) / (1 + c2) ** 2


# ---------------------------------------------------------------------------
# windowed line walk and the restricted-block check
# ---------------------------------------------------------------------------

def line_window(n, vmin, vmax):
    """Snake space on the path vmin..vmax with (x, word) labels per snake."""
    space = enumerate_snakes(path_graph(vmin, vmax), n)
    xs = np.empty(len(space), dtype=np.int64)
    js = np.empty(len(space), dtype=np.int64)
    for i in range(len(space)):
        x, j = line_encode(space.snake(i))
        xs[i], js[i] = x, int(j, 2)
    return space, xs, js


def _windowed_amplitude(n, x1, x2, j1, j2, t, margin):
    lo, hi = min(x1, x2) - margin, max(x1, x2) + margin
    space, xs, js = line_window(n, lo, hi)
    lookup = {(int(x), int(j)): i for i, (x, j) in enumerate(zip(xs, js))}
    start = lookup[(x1, j1)]
    v = np.zeros(len(space), dtype=complex)
    v[start] = 1.0
    h = space.adjacency().astype(float)
    out = evolve(h, t, v, method="chebyshev", tol=1e-13)
    return out[lookup[(x2, j2)]]


def restricted_amplitude(n, x1, x2, j1, j2, t, grid):
    """<x2,j2| exp(-i K_n t) |x1,j1> with K_n the block-1 restriction."""
    acc = 0j
    for k in grid.nodes:
        basis = hat_basis(n, k)
        h = build_Hnk(n, k)
        proj = block_projectors(n, k, basis)[1]
        block = proj @ h @ proj
        w, q = np.linalg.eigh(block)
        u = (q * np.exp(-1j * w * t)) @ q.conj().T
        acc += np.exp(1j * k * (x2 - x1)) * u[j2, j1]
    return acc / grid.K


def restricted_equivalence_check(n, x1, x2, j1, j2, t, window=None, grid=None,
                                 truncation_tol=1e-8):
    """Compare the full windowed walk with the block-1 restricted walk.

    ``j1``/``j2`` are bit strings. ``window`` is the margin (in vertices) added
    around the two start positions; the margin is grown until two successive
    margins agree to ``truncation_tol``.
    """
    if abs(x1 - x2) <= 2 * n:
        raise PreconditionError("the restricted-block equivalence needs |x1 - x2| > 2n")
    w1, w2 = int(j1, 2), int(j2, 2)
    if len(j1) != n or len(j2) != n:
        raise PreconditionError("words must have length n")
    margin = window if window is not None else int(4 * abs(t) + 2 * n + 12)
    full = _windowed_amplitude(n, x1, x2, w1, w2, t, margin)
    check = _windowed_amplitude(n, x1, x2, w1, w2, t, margin + 8)
    if abs(full - check) > truncation_tol:
        raise TruncationError(
            f"window margin {margin} too small: amplitudes differ by {abs(full - check):.2e}")
    grid = grid or MomentumGrid(512)
    restricted = restricted_amplitude(n, x1, x2, w1, w2, t, grid)
    return full, restricted, abs(full - restricted)
