"""Momentum grids and the k-dependent bands of the reduced chain matrices.

Both the line and the binary-tree problems reduce, at fixed momentum k, to an
(n+1)x(n+1) matrix: a uniform chain of n sites with hopping ``hop`` plus one
extra "root" site attached to the chain end by ``corner(k)`` and carrying the
diagonal ``tip(k)``. Its eigenvalues are ``scale*cos p`` with ``p`` a root of
the secular function described in :mod:`snakewalk.kernels`. A :class:`Family`
bundles the constants; :data:`LINE` and :data:`TREE` are the two instances.
"""
import math
import threading
from dataclasses import dataclass
from math import comb

import numpy as np

from . import kernels
from .errors import (NumericalInstabilityError, PreconditionError,
                     RootCountError, SignConventionError)

SIN_EPS = 1e-9
FD_STEP = 1e-5
FD_TOL = 1e-5


class MomentumGrid:
    """Uniform nodes on [0, 2pi), by default shifted by half a step."""

    def __init__(self, K=4096, offset=True):
        K = int(K)
        if K < 256 or K % 2:
            raise PreconditionError(f"grid size must be even and >= 256, got {K}")
        self.K = K
        self.offset = bool(offset)
        self.weight = 2 * math.pi / K
        shift = 0.5 if self.offset else 0.0
        self.nodes = (np.arange(K) + shift) * self.weight
        self.nodes.setflags(write=False)

    @property
    def key(self):
        return (self.K, self.offset)

    def phase(self, z):
        """exp(i*pi*z/K) factor relating node sums to a plain inverse FFT."""
        if not self.offset:
            return np.ones(np.shape(z))
        return np.exp(1j * math.pi * np.asarray(z) / self.K)

    def integrate(self, values, axis=0):
        return np.sum(values, axis=axis) * self.weight

    def __repr__(self):
        return f"MomentumGrid(K={self.K}, offset={self.offset})"


@dataclass(frozen=True)
class Family:
    name: str
    c: float
    a: float
    b: float
    e: float
    d: float
    scale: float
    hop: float
    tip_coef: float
    corner_sin: float
    corner_cos: float     # imaginary part coefficient of the corner coupling
    exceptional_at_zero: bool

    @property
    def coeffs(self):
        return (self.c, self.a, self.b, self.e, self.d)

    def corner(self, k):
        return self.corner_sin * np.sin(k) + 1j * self.corner_cos * np.cos(k)

    def tip(self, k):
        return self.tip_coef * np.cos(k)

    def secular(self, p, k, n):
        return (self.c * (self.a * np.cos(p) - self.b * np.cos(k)) * np.sin((n + 1) * p)
                - (self.e + self.d * np.sin(k) ** 2) * np.sin(n * p))

    def is_exceptional(self, k):
        return self.exceptional_at_zero and abs(math.sin(k)) <= SIN_EPS


LINE = Family("line", c=2.0, a=1.0, b=1.0, e=0.0, d=1.0, scale=4.0, hop=2.0,
              tip_coef=4.0, corner_sin=2.0, corner_cos=0.0,
              exceptional_at_zero=True)
TREE = Family("tree", c=6.0, a=3.0, b=2 * math.sqrt(2.0), e=1.0, d=8.0,
              scale=6.0, hop=3.0, tip_coef=4 * math.sqrt(2.0), corner_sin=3.0,
              corner_cos=1.0, exceptional_at_zero=False)


def chain_matrix(family, n, k):
    """Dense reduced matrix at momentum ``k`` (real for the line)."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    dtype = float if family.corner_cos == 0 else complex
    m = np.zeros((n + 1, n + 1), dtype=dtype)
    for y in range(n - 1):
        m[y, y + 1] = m[y + 1, y] = family.hop
    cor = family.corner(k)
    m[n - 1, n] = cor if dtype is complex else cor.real
    m[n, n - 1] = np.conj(cor) if dtype is complex else cor.real
    m[n, n] = family.tip(k)
    return m


def _exceptional_roots(n, k):
    ps = [y * math.pi / (n + 1) for y in range(1, n + 1)]
    ps.append(0.0 if math.cos(k) > 0 else math.pi)
    return np.array(sorted(ps))


def solve_roots(family, n, ks, scan=None):
    """All n+1 roots p in (0, pi), ascending, for each k in ``ks``.

    For the line at k = 0 mod pi the secular function degenerates; those rows
    use the analytic spectrum (chain sines plus the root site, p = 0 or pi).
    """
    if n < 1:
        raise PreconditionError("n must be >= 1")
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    out = np.empty((ks.shape[0], n + 1))
    if family.exceptional_at_zero:
        exc = np.abs(np.sin(ks)) <= SIN_EPS
    else:
        exc = np.zeros(ks.shape[0], dtype=bool)
    for i in np.nonzero(exc)[0]:
        out[i] = _exceptional_roots(n, ks[i])
    todo = np.nonzero(~exc)[0]
    m = int(scan) if scan else 16 * (n + 1)
    for _ in range(4):
        if todo.size == 0:
            break
        roots, counts = kernels.secular_roots(n, ks[todo], family.coeffs, m)
        ok = counts == n + 1
        out[todo[ok]] = roots[ok]
        todo = todo[~ok]
        m *= 2
    if todo.size:
        raise RootCountError(
            f"{family.name}: found a wrong number of roots at k={ks[todo[0]]!r} "
            f"after refining the scan to {m // 2} points")
    return out


def chain_vectors(family, n, p, k):
    """Normalised eigenvectors for roots ``p`` at momenta ``k`` (broadcast)."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    k = np.broadcast_to(np.asarray(k, dtype=float), p.shape)
    y = np.arange(1, n + 1)
    vec = np.zeros(p.shape + (n + 1,), dtype=complex)
    vec[..., :n] = np.sin(p[..., None] * y)
    cor = family.corner(k)
    reg = np.abs(cor) > SIN_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        root = family.hop * np.sin((n + 1) * p) / cor
    vec[..., n] = np.where(reg, root, 0.0)
    # the analytic k = 0 mod pi branch: the root-site eigenvector
    tip_only = (~reg) & ((p == 0.0) | (p == math.pi))
    if np.any(tip_only):
        vec[tip_only] = 0.0
        vec[tip_only, n] = 1.0
    vec /= np.linalg.norm(vec, axis=-1, keepdims=True)
    if family.corner_cos == 0:
        vec = vec.real.copy()
    return vec


# ---------------------------------------------------------------------------
# implicit differentiation of the secular function
# ---------------------------------------------------------------------------

def _partials(family, n, p, k, order):
    """Dict {(i, j): d^{i+j}F / dp^i dk^j} for i + j <= order."""
    c, a, b, e, d = family.coeffs
    half = math.pi / 2

    def s1(i):
        return (n + 1) ** i * np.sin((n + 1) * p + i * half)

    def s2(i):
        return n ** i * np.sin(n * p + i * half)

    def a_p(r):
        if r == 0:
            return a * np.cos(p) - b * np.cos(k)
        return a * np.cos(p + r * half)

    def a_k(j):
        return -b * np.cos(k + j * half)

    def b_k(j):
        if j == 0:
            return e + d * np.sin(k) ** 2
        return -(d / 2) * 2 ** j * np.cos(2 * k + j * half)

    out = {}
    for i in range(order + 1):
        for j in range(order + 1 - i):
            if j == 0:
                val = c * sum(comb(i, r) * a_p(r) * s1(i - r) for r in range(i + 1))
                val = val - b_k(0) * s2(i)
            else:
                val = c * a_k(j) * s1(i) - b_k(j) * s2(i)
            out[(i, j)] = val
    return out


def implicit_derivatives(family, n, p, k, order):
    """[lam, lam', ..., lam^(order)] along the root branch ``p(k)``."""
    if order > 3:
        raise PreconditionError("derivative order must be <= 3")
    p = np.asarray(p, dtype=float)
    k = np.asarray(k, dtype=float)
    s = family.scale
    lam = s * np.cos(p)
    out = [lam]
    if order == 0:
        return out
    F = _partials(family, n, p, k, order)
    fp = F[(1, 0)]
    p1 = -F[(0, 1)] / fp
    sp, cp = np.sin(p), np.cos(p)
    out.append(-s * sp * p1)
    if order == 1:
        return out
    p2 = -(F[(0, 2)] + 2 * F[(1, 1)] * p1 + F[(2, 0)] * p1 ** 2) / fp
    out.append(-s * cp * p1 ** 2 - s * sp * p2)
    if order == 2:
        return out
    p3 = -(F[(0, 3)] + 3 * F[(1, 2)] * p1 + 3 * F[(2, 1)] * p1 ** 2
           + F[(3, 0)] * p1 ** 3 + 3 * F[(1, 1)] * p2
           + 3 * F[(2, 0)] * p1 * p2) / fp
    out.append(s * sp * p1 ** 3 - 3 * s * cp * p1 * p2 - s * sp * p3)
    return out


# ---------------------------------------------------------------------------
# band function
# ---------------------------------------------------------------------------

class GridBand:
    """Band samples on a grid: eigenvalues, chain eigenvectors, roots."""

    def __init__(self, grid, p, lam, phi):
        self.grid = grid
        self.p = p
        self.lam = lam
        self.phi = phi
        for arr in (p, lam, phi):
            arr.setflags(write=False)


class BandFunction:
    """One k-dependent eigenvalue branch, selected by its descending rank.

    ``rank`` counts from 0 for the largest eigenvalue; the default is the
    median ``n // 2`` (the ((n+2)/2)-th largest for even n). Since the
    eigenvalue is ``scale*cos p`` the rank is also the index of the root in
    ascending order.
    """

    def __init__(self, family, n, rank=None):
        if n < 1:
            raise PreconditionError("n must be >= 1")
        if rank is None:
            rank = n // 2
        if not 0 <= rank <= n:
            raise PreconditionError(f"rank must lie in [0, {n}]")
        self.family = family
        self.n = int(n)
        self.rank = int(rank)
        self._cache = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return f"BandFunction({self.family.name}, n={self.n}, rank={self.rank})"

    # -- pointwise -----------------------------------------------------------

    def roots(self, k):
        return solve_roots(self.family, self.n, k)

    def p(self, k):
        r = solve_roots(self.family, self.n, k)[:, self.rank]
        return r if np.ndim(k) else float(r[0])

    def eigenvalue(self, k):
        return self.family.scale * np.cos(self.p(k))

    __call__ = eigenvalue

    def eigvec(self, k):
        ks = np.atleast_1d(np.asarray(k, dtype=float))
        p = solve_roots(self.family, self.n, ks)[:, self.rank]
        vec = chain_vectors(self.family, self.n, p, ks)
        if np.any(np.abs(vec[:, 0]) <= 0.0):
            raise SignConventionError(
                "first chain component vanishes; the sign convention is undefined")
        return vec if np.ndim(k) else vec[0]

    def _exceptional_derivative(self, k, order):
        # odd orders vanish by the k -> -k symmetry about multiples of pi
        if order % 2:
            return 0.0
        h = 1e-3
        f = self.eigenvalue
        if order == 2:
            return (f(k + h) - 2 * f(k) + f(k - h)) / h ** 2
        raise PreconditionError("only orders 1..3 are supported")

    def derivative(self, k, order=1, check=True):
        """Implicit-differentiation derivative, cross-checked by central FD.

        The check differences the next lower implicit derivative so every
        order is compared against a first-order difference.
        """
        if order not in (1, 2, 3):
            raise PreconditionError("order must be 1, 2 or 3")
        if np.ndim(k):
            return np.array([self.derivative(float(x), order, check) for x in np.ravel(k)])
        k = float(k)
        if self.family.is_exceptional(k):
            return self._exceptional_derivative(k, order)
        p = self.p(k)
        val = float(implicit_derivatives(self.family, self.n, p, k, order)[order])
        if check:
            lo, hi = k - FD_STEP, k + FD_STEP
            pl, ph = self.p(lo), self.p(hi)
            fl = implicit_derivatives(self.family, self.n, pl, lo, order - 1)[order - 1]
            fh = implicit_derivatives(self.family, self.n, ph, hi, order - 1)[order - 1]
            fd = float((fh - fl) / (2 * FD_STEP))
            if abs(fd - val) > FD_TOL * max(1.0, abs(val)):
                raise NumericalInstabilityError(
                    f"order-{order} derivative at k={k}: implicit {val!r} vs "
                    f"finite difference {fd!r}")
        return val

    def d1(self, k):
        return self.derivative(k, 1)

    def d2(self, k):
        return self.derivative(k, 2)

    def d3(self, k):
        return self.derivative(k, 3)

    def derivatives_array(self, ks, order):
        """Unchecked implicit derivatives on an array of generic momenta."""
        ks = np.asarray(ks, dtype=float)
        p = solve_roots(self.family, self.n, ks)[:, self.rank]
        return implicit_derivatives(self.family, self.n, p, ks, order)

    # -- grid samples ----------------------------------------------------------

    def on_grid(self, grid):
        """Cached band samples; concurrent callers get the first stored result."""
        hit = self._cache.get(grid.key)
        if hit is not None:
            return hit
        ks = grid.nodes
        p = solve_roots(self.family, self.n, ks)[:, self.rank]
        lam = self.family.scale * np.cos(p)
        phi = chain_vectors(self.family, self.n, p, ks)
        if np.any(phi[:, 0] == 0):
            raise SignConventionError("band vector with vanishing first component on grid")
        res = GridBand(grid, p, lam, np.ascontiguousarray(phi, dtype=complex))
        with self._lock:
            return self._cache.setdefault(grid.key, res)

    def residual(self, k):
        """max |(Phi - lam) phi| at a single k (dense check)."""
        m = chain_matrix(self.family, self.n, k)
        v = self.eigvec(k)
        return float(np.abs(m @ v - self.eigenvalue(k) * v).max())
