"""The snake walk deep inside a binary tree, and the column-subspace walk.

Deep in the first tree of an expanded glued-trees graph, the walk restricted
to symmetric "column" states |x, j> is translation invariant in the layer
index x. Its momentum block is ``build_tree_Hnk``. A sqrt2-weighted hat basis
reduces it to the tree chain matrix in the same way as on the line.

``column_hamiltonian`` gives the full column-subspace operator, including the
glued part, on a finite window of layers with hard truncation at the edges.
"""
import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import comb, erf

from . import kernels, words
from .bands import TREE, BandFunction, MomentumGrid, chain_matrix, solve_roots
from .errors import PreconditionError
from .line import MAX_N, _assemble_hnk, build_hat_basis
from .propagator import band_evolve

SQRT2 = math.sqrt(2.0)
TREE_WEIGHTS = (SQRT2, 2.0, 1.0, SQRT2)


# ---------------------------------------------------------------------------
# momentum block and its hat basis
# ---------------------------------------------------------------------------

def build_tree_Hnk(n, k, sparse=False, max_n=MAX_N):
    """The 2**n x 2**n momentum-k block of the walk deep in the tree."""
    return _assemble_hnk(n, k, TREE_WEIGHTS, sparse, max_n)


def tree_factors(k):
    s = 1 / math.sqrt(3)
    u0 = np.array([SQRT2 * np.exp(-1j * k), np.exp(1j * k)]) * s
    u1 = np.array([np.exp(-1j * k), -SQRT2 * np.exp(1j * k)]) * s
    v0 = np.array([1.0, SQRT2]) * s
    v1 = np.array([SQRT2, -1.0]) * s
    return u0, u1, v0, v1


def tree_hat_basis(n, k):
    return build_hat_basis(n, k, tree_factors(k))


def tree_hat_form(n, k):
    """The reduced form of build_tree_Hnk in the tree hat basis, built directly."""
    dim = 2 ** n
    h = np.zeros((dim, dim), dtype=complex)
    h[0, 0] = 4 * SQRT2 * math.cos(k)
    h[1, 0] = 3 * math.sin(k) + 1j * math.cos(k)
    h[0, 1] = np.conj(h[1, 0])
    for m in range(1, dim // 2):
        h[2 * m, m] = h[m, 2 * m] = 3.0
    return h


def tree_phi_matrix(n, k):
    return chain_matrix(TREE, n, k)


def tree_isometry(n, k):
    basis = tree_hat_basis(n, k)
    cols = [2 ** (n - y) for y in range(1, n + 1)] + [0]
    return basis.vectors[:, cols]


def solve_tree_p_equation(n, k):
    """The n+1 roots in (0, pi) of 6(3cos p - 2sqrt2 cos k) sin((n+1)p) = (1+8sin^2 k) sin(np)."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    return solve_roots(TREE, n, [k])[0]


def tree_spectrum(n, k):
    """The n+1 k-dependent eigenvalues 6 cos p, descending."""
    return 6 * np.cos(solve_tree_p_equation(n, k))


def tree_band(n):
    if n < 2 or n % 2:
        raise PreconditionError("the median band needs an even n >= 2")
    return BandFunction(TREE, n)


def tree_psi(band, k):
    """Word-space band vector of the tree problem."""
    return words.synthesize(words.tree_weights(band.n), band.n, k, band.eigvec(k))


def psi_half_pi_closed_form(n):
    """-i sqrt(2/(n+2)) sum_l (v1 v1)^l (v0 v0)^(n/2-l), the tree band vector at pi/2."""
    if n < 2 or n % 2:
        raise PreconditionError("n must be even")
    _, _, v0, v1 = tree_factors(0.0)
    pair0, pair1 = np.kron(v0, v0), np.kron(v1, v1)
    out = np.zeros(2 ** n, dtype=complex)
    for l in range(n // 2 + 1):
        vec = np.ones(1)
        for _ in range(l):
            vec = np.kron(vec, pair1)
        for _ in range(n // 2 - l):
            vec = np.kron(vec, pair0)
        out += vec
    return -1j * math.sqrt(2 / (n + 2)) * out


# ---------------------------------------------------------------------------
# the n -> infinity scaled tree band
# ---------------------------------------------------------------------------

def Lambda_tilde(k):
    k = np.asarray(k, dtype=float)
    return 6 * np.arctan(12 * SQRT2 * np.cos(k) / (1 + 8 * np.sin(k) ** 2))


def Lambda_tilde_d1(k):
    k = np.asarray(k, dtype=float)
    return -72 * SQRT2 * np.sin(k) / (9 + 8 * np.cos(k) ** 2)


def Lambda_tilde_d2(k):
    k = np.asarray(k, dtype=float)
    c2 = np.cos(k) ** 2
    return -72 * SQRT2 * np.cos(k) * (25 - 8 * c2) / (9 + 8 * c2) ** 2


# ---------------------------------------------------------------------------
# column-subspace Hamiltonian
# ---------------------------------------------------------------------------

@dataclass
class ColumnHamiltonian:
    n: int
    xmin: int
    xmax: int
    matrix: sp.csr_matrix

    @property
    def xs(self):
        return np.arange(self.xmin, self.xmax + 1)

    @property
    def shape(self):
        return self.matrix.shape

    def index(self, x, j):
        if not self.xmin <= x <= self.xmax:
            raise PreconditionError(f"x={x} outside the window")
        return (x - self.xmin) * 2 ** self.n + j

    def entry(self, x1, j1, x2, j2):
        """<x1, j1| H |x2, j2>."""
        return self.matrix[self.index(x1, j1), self.index(x2, j2)]


def signed_weight(n):
    """#ones - #zeros for every (n-1)-bit word."""
    if n < 2:
        return np.zeros(1, dtype=np.int64)
    return (2 * words.word_bits(n - 1).astype(np.int64) - 1).sum(axis=1)


def regime_weights(m, x):
    """Weights (a, b, c, d) of the four coupling families at layer x.

    a: |x+1,0j><x,j1|   b: |x-1,1j><x,j0|   c: |x+1,0j><x,j0|   d: |x-1,1j><x,j1|
    """
    m = np.asarray(m)
    x = np.asarray(x)
    deep1 = x <= -np.maximum(m, 0)
    deep2 = x >= 1 - np.minimum(m, 0)
    pos = m > 0
    a = np.where(deep1, 2.0, np.where(deep2, 1.0, SQRT2))
    b = np.where(deep1, 1.0, np.where(deep2, 2.0, SQRT2))
    c = np.where(deep1 | deep2, SQRT2, np.where(pos, 2.0, 1.0))
    d = np.where(deep1 | deep2, SQRT2, np.where(pos, 1.0, 2.0))
    return a, b, c, d


def column_hamiltonian(n, window):
    """The column-subspace walk on layers window[0]..window[1], hard-truncated."""
    xmin, xmax = int(window[0]), int(window[1])
    if n < 1:
        raise PreconditionError("n must be >= 1")
    if xmax - xmin + 1 < 4 * n:
        raise PreconditionError("the window must hold at least 4n layers")
    dim_w = 2 ** n
    half = dim_w // 2
    m = signed_weight(n)
    j = np.arange(half)
    xs = np.arange(xmin, xmax + 1)
    X, J = np.meshgrid(xs, j, indexing="ij")
    M = m[J]
    wa, wb, wc, wd = regime_weights(M, X)
    zj, oj, j0, j1 = J, half + J, 2 * J, 2 * J + 1
    rows, cols, vals = [], [], []
    for wt, dx, tgt, src in ((wa, 1, zj, j1), (wb, -1, oj, j0), (wc, 1, zj, j0), (wd, -1, oj, j1)):
        ok = (X + dx >= xmin) & (X + dx <= xmax)
        r = (X + dx - xmin) * dim_w + tgt
        c = (X - xmin) * dim_w + src
        rows += [r[ok], c[ok]]
        cols += [c[ok], r[ok]]
        vals += [wt[ok], wt[ok]]
    size = len(xs) * dim_w
    mat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(size, size))
    return ColumnHamiltonian(n, xmin, xmax, mat)


def momentum_stencil(column, x):
    """{dx: block} with block[j', j] = <x+dx, j'|H|x, j>, read from the column matrix."""
    dim = 2 ** column.n
    col = column.matrix[:, column.index(x, 0):column.index(x, 0) + dim].toarray()
    out = {}
    for dx in (-1, 0, 1):
        if column.xmin <= x + dx <= column.xmax:
            r = column.index(x + dx, 0)
            out[dx] = col[r:r + dim]
    return out


# ---------------------------------------------------------------------------
# eta-hat and xi packets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WavePacketSpec:
    x0: int
    k0: float
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise PreconditionError("sigma must be positive")
        if not math.pi < self.k0 < 2 * math.pi:
            raise PreconditionError("k0 must lie in (pi, 2pi)")
        if int(self.x0) != self.x0:
            raise PreconditionError("x0 must be an integer")

    @property
    def reach(self):
        """Half-width of the default window, 1/sigma^2 + 3n without the n part."""
        return 1 / self.sigma ** 2

    def to_dict(self):
        return asdict(self)


def default_packet_window(spec, n):
    r = int(math.ceil(spec.reach + 3 * n))
    return spec.x0 - r, spec.x0 + r


def _grid_for(lo, hi, n, grid):
    if grid is not None:
        return grid
    span = int(4 * (hi - lo + 2 * n + 2))
    K = max(4096, 1 << (span - 1).bit_length())
    return MomentumGrid(K)


def build_eta_hat(n, x=0, grid=None, window=None, tol=1e-6):
    band = tree_band(n)
    lo, hi = window if window is not None else (x - 3 * n, x + 3 * n)
    grid = _grid_for(lo, hi, n, grid)
    return band_evolve(band, grid, 0.0, lambda k: np.exp(-1j * k * x), (lo, hi), tol=tol)


def xi_amplitude(spec, ks):
    """k-space amplitude of the xi packet, normalised so that mean |f|^2 = 1."""
    ks = np.asarray(ks, dtype=float)
    dk = np.mod(ks - spec.k0 + math.pi, 2 * math.pi) - math.pi
    gauss = np.exp(-dk ** 2 / (2 * spec.sigma ** 2)) / (spec.sigma * math.sqrt(2 * math.pi))
    norm = erf(math.pi / (math.sqrt(2) * spec.sigma))
    return np.sqrt(2 * math.pi * gauss / norm) * np.exp(-1j * ks * spec.x0)


def build_xi(spec, n, grid=None, window=None, tol=1e-6, t=0.0, band=None):
    """The xi packet (optionally evolved for time t) by direct k-space quadrature."""
    band = band or tree_band(n)
    lo, hi = window if window is not None else default_packet_window(spec, n)
    need = default_packet_window(spec, n)
    if t == 0 and (lo > need[0] or hi < need[1]):
        raise PreconditionError(f"the window must contain {need}")
    grid = _grid_for(lo, hi, n, grid)
    return band_evolve(band, grid, t, lambda k: xi_amplitude(spec, k), (lo, hi), tol=tol)


def xi_coefficients(spec, zs, grid=None):
    """<eta-hat_{x0+z}|xi> by quadrature."""
    grid = grid or MomentumGrid(1 << 14)
    ks = grid.nodes
    f = xi_amplitude(spec, ks) * np.exp(1j * ks * spec.x0)
    zs = np.asarray(zs)
    return np.array([np.mean(np.exp(1j * ks * z) * f) for z in zs])


def xi_coefficients_erf(spec, zs):
    """The same coefficients from the closed form with a complex error function."""
    zs = np.asarray(zs, dtype=float)
    s = spec.sigma
    w = 1 / (2 * s)
    mag = np.sqrt(np.exp(-zs ** 2 / (2 * w ** 2)) / (w * math.sqrt(2 * math.pi)))
    re = erf(math.pi / (2 * s) + 1j * zs * s).real
    return np.exp(1j * spec.k0 * zs) * mag * re / math.sqrt(erf(math.pi / (math.sqrt(2) * s)))


def xi_coefficients_binomial(spec, zs):
    """Binomial approximation to the coefficients (zero outside its support)."""
    m = int(math.floor(1 / (2 * spec.sigma ** 2)))
    zs = np.asarray(zs)
    inside = np.abs(zs) <= m
    mag = np.where(inside, np.sqrt(comb(2 * m, np.clip(zs + m, 0, 2 * m)) / 4.0 ** m), 0.0)
    return np.exp(1j * spec.k0 * zs) * mag


def packet_propagation_profile(spec, n, t, grid=None, window=None, tol=1e-6):
    """(xs, probabilities) of the xi packet evolved for time t inside the tree band."""
    lo0, hi0 = default_packet_window(spec, n)
    band = tree_band(n)
    if window is None:
        v = abs(band.derivative(spec.k0, 1, check=False))
        shift = int(math.ceil(v * abs(t)))
        window = (lo0 - shift, hi0 + shift)
    lo, hi = window
    grid = _grid_for(lo, hi, n, grid)
    state = build_xi(spec, n, grid, (lo, hi), tol=tol, t=t, band=band)
    return state.xs, state.probabilities()


def mean_position(xs, probs):
    return float((xs * probs).sum() / probs.sum())


# ---------------------------------------------------------------------------
# span observable
# ---------------------------------------------------------------------------

def span_of_word(j, n=None):
    """((low, high), length) of the layers visited by a snake with word j from 0."""
    if isinstance(j, str):
        j, n = words.parse_word(j)
    if n is None:
        raise PreconditionError("n is required for integer words")
    z = lo = hi = 0
    for b in words.bits_from_word(j, n):
        z += 1 if b else -1
        lo, hi = min(lo, z), max(hi, z)
    return (lo, hi), hi - lo


def span_observable(n):
    """Diagonal of Q_n (span length per word)."""
    return words.span_lengths(n).astype(float)


def expected_span(state):
    return state.expected_span()


def band_span_profile(n, grid=None):
    """(ks, <psi(k)|Q_n|psi(k)>) for the tree band on a grid."""
    grid = grid or MomentumGrid(512)
    band = tree_band(n)
    gb = band.on_grid(grid)
    q = span_observable(n)
    vals = kernels.word_expectation(gb.phi, grid.nodes, words.tree_weights(n),
                                    words.offsets(n), q)
    return grid.nodes, np.real(vals)


def packet_expected_span(spec, n, grid=None):
    """Gaussian-weighted average of the band span profile."""
    ks, prof = band_span_profile(n, grid)
    w = np.abs(xi_amplitude(spec, ks)) ** 2
    return float(np.mean(w * prof))
