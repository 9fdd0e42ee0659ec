"""Hot numeric kernels.

Every kernel exists twice: a numba version (``*_nb``) written as plain loops
and a vectorised numpy version (``*_np``). The public names dispatch on
``snakewalk._accel.USE_NUMBA``. Both versions must agree to rounding; the
test-suite and ``benchmarks/bench_kernels.py`` exercise both.

Secular function
----------------
The k-dependent eigenvalues of the reduced chain matrices are ``scale*cos p``
where ``p`` solves

    c*(a*cos p - b*cos k)*sin((n+1)p) - (e + d*sin(k)**2)*sin(n p) = 0.

The kernels work with ``h(p) = F(p)/sin p`` so the trivial zeros at the
interval ends disappear and the endpoint values are finite limits.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit


# ---------------------------------------------------------------------------
# secular roots
# ---------------------------------------------------------------------------

@njit
def _h_scalar(p, k, n, c, a, b, e, d, where):
    # where: 0 interior, -1 the p=0 limit, +1 the p=pi limit
    ck = math.cos(k)
    sk = math.sin(k)
    bb = e + d * sk * sk
    if where < 0:
        return c * (a - b * ck) * (n + 1) - bb * n
    if where > 0:
        sgn = 1.0 if n % 2 == 0 else -1.0
        return sgn * (c * (-a - b * ck) * (n + 1) + bb * n)
    return (c * (a * math.cos(p) - b * ck) * math.sin((n + 1) * p)
            - bb * math.sin(n * p)) / math.sin(p)


@njit
def _secular_roots_nb(n, ks, c, a, b, e, d, m):
    nk = ks.shape[0]
    roots = np.full((nk, n + 1), np.nan)
    counts = np.zeros(nk, np.int64)
    step = math.pi / m
    buf = np.empty(2 * (m + 1))
    for i in range(nk):
        k = ks[i]
        cnt = 0
        prev = _h_scalar(0.0, k, n, c, a, b, e, d, -1)
        for s in range(1, m + 1):
            p1 = s * step
            where = 1 if s == m else 0
            cur = _h_scalar(p1, k, n, c, a, b, e, d, where)
            if cur == 0.0 and where == 0:
                buf[cnt] = p1
                cnt += 1
            elif prev * cur < 0.0:
                lo = (s - 1) * step
                hi = p1
                flo = prev
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    if mid <= lo or mid >= hi:
                        break
                    fm = _h_scalar(mid, k, n, c, a, b, e, d, 0)
                    if fm == 0.0:
                        lo = mid
                        hi = mid
                        break
                    if (fm > 0.0) == (flo > 0.0):
                        lo = mid
                        flo = fm
                    else:
                        hi = mid
                buf[cnt] = 0.5 * (lo + hi)
                cnt += 1
            prev = cur
        counts[i] = cnt
        if cnt == n + 1:
            for r in range(cnt):
                roots[i, r] = buf[r]
    return roots, counts


def _h_array(p, k, n, c, a, b, e, d):
    ck = np.cos(k)
    bb = e + d * np.sin(k) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        return (c * (a * np.cos(p) - b * ck) * np.sin((n + 1) * p)
                - bb * np.sin(n * p)) / np.sin(p)


def _secular_roots_np(n, ks, c, a, b, e, d, m):
    ks = np.asarray(ks, dtype=float)
    nk = ks.shape[0]
    grid = np.arange(m + 1) * (math.pi / m)
    kk = ks[:, None]
    vals = _h_array(grid[None, :], kk, n, c, a, b, e, d)
    ck = np.cos(ks)
    bb = e + d * np.sin(ks) ** 2
    vals[:, 0] = c * (a - b * ck) * (n + 1) - bb * n
    sgn = 1.0 if n % 2 == 0 else -1.0
    vals[:, m] = sgn * (c * (-a - b * ck) * (n + 1) + bb * n)

    zr, zc = np.nonzero(vals[:, 1:m] == 0.0)
    zc = zc + 1
    br, bc = np.nonzero(vals[:, :-1] * vals[:, 1:] < 0.0)

    lo = grid[bc].copy()
    hi = grid[bc + 1].copy()
    flo = vals[br, bc].copy()
    kb = ks[br]
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        fm = _h_array(mid, kb, n, c, a, b, e, d)
        same = (fm > 0.0) == (flo > 0.0)
        exact = fm == 0.0
        lo = np.where(same | exact, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(same & ~exact, hi, mid)
    found = np.concatenate([0.5 * (lo + hi), grid[zc]])
    rows = np.concatenate([br, zr])
    order = np.lexsort((found, rows))
    found = found[order]
    rows = rows[order]

    counts = np.bincount(rows, minlength=nk).astype(np.int64)
    roots = np.full((nk, n + 1), np.nan)
    ok = counts == n + 1
    sel = ok[rows]
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    pos = np.arange(rows.shape[0]) - starts[rows]
    roots[rows[sel], pos[sel]] = found[sel]
    return roots, counts


def secular_roots(n, ks, coeffs, scan):
    """Roots in (0, pi) of the secular function at every ``k`` in ``ks``.

    Returns ``(roots, counts)``; rows whose bracket count differs from
    ``n + 1`` are left as NaN so the caller can rescan them.
    """
    c, a, b, e, d = (float(v) for v in coeffs)
    ks = np.ascontiguousarray(ks, dtype=float)
    if _accel.USE_NUMBA:
        return _secular_roots_nb(int(n), ks, c, a, b, e, d, int(scan))
    return _secular_roots_np(int(n), ks, c, a, b, e, d, int(scan))


# ---------------------------------------------------------------------------
# position-space assembly
# ---------------------------------------------------------------------------
#
# amplitude(x, j) = sum_y W[j, y] * C[x + S[j, y] - zmin, y]
#
# C holds Fourier coefficients of the band eigenvector components, W and S
# are the per-word weights and step offsets (see snakewalk.words).

@njit
def _assemble_nb(C, zmin, W, S, xs):
    nx = xs.shape[0]
    nw, ny = W.shape
    out = np.zeros((nx, nw), np.complex128)
    for ix in range(nx):
        x = xs[ix]
        for j in range(nw):
            acc = 0j
            for y in range(ny):
                acc += W[j, y] * C[x + S[j, y] - zmin, y]
            out[ix, j] = acc
    return out


def _assemble_np(C, zmin, W, S, xs):
    cols = np.arange(W.shape[1])
    out = np.empty((xs.shape[0], W.shape[0]), np.complex128)
    for ix, x in enumerate(xs):
        out[ix] = (W * C[x + S - zmin, cols]).sum(axis=1)
    return out


@njit
def _slice_norms_nb(C, zmin, W, S, xs):
    nx = xs.shape[0]
    nw, ny = W.shape
    two = np.zeros(nx)
    one = np.zeros(nx)
    for ix in range(nx):
        x = xs[ix]
        s2 = 0.0
        s1 = 0.0
        for j in range(nw):
            acc = 0j
            for y in range(ny):
                acc += W[j, y] * C[x + S[j, y] - zmin, y]
            r = acc.real * acc.real + acc.imag * acc.imag
            s2 += r
            s1 += math.sqrt(r)
        two[ix] = s2
        one[ix] = s1
    return two, one


def _slice_norms_np(C, zmin, W, S, xs):
    cols = np.arange(W.shape[1])
    two = np.empty(xs.shape[0])
    one = np.empty(xs.shape[0])
    for ix, x in enumerate(xs):
        amp = np.abs((W * C[x + S - zmin, cols]).sum(axis=1))
        two[ix] = np.dot(amp, amp)
        one[ix] = amp.sum()
    return two, one


def _prep(C, W, S, xs):
    return (np.ascontiguousarray(C, dtype=np.complex128),
            np.ascontiguousarray(W, dtype=np.complex128),
            np.ascontiguousarray(S, dtype=np.int64),
            np.ascontiguousarray(xs, dtype=np.int64))


def assemble(C, zmin, W, S, xs):
    """Amplitudes for every (x in xs, word) pair, shape ``(len(xs), 2**n)``."""
    C, W, S, xs = _prep(C, W, S, xs)
    if _accel.USE_NUMBA:
        return _assemble_nb(C, int(zmin), W, S, xs)
    return _assemble_np(C, int(zmin), W, S, xs)


def slice_norms(C, zmin, W, S, xs):
    """Per-x squared 2-norm and 1-norm of the x-slices, without storing them."""
    C, W, S, xs = _prep(C, W, S, xs)
    if _accel.USE_NUMBA:
        return _slice_norms_nb(C, int(zmin), W, S, xs)
    return _slice_norms_np(C, int(zmin), W, S, xs)


# ---------------------------------------------------------------------------
# diagonal word observables of band vectors
# ---------------------------------------------------------------------------

@njit
def _word_expectation_nb(phi, ks, W, S, q, shift):
    nk = ks.shape[0]
    nw, ny = W.shape
    out = np.zeros(nk)
    ph = np.empty(2 * shift + 1, np.complex128)
    for i in range(nk):
        k = ks[i]
        for s in range(2 * shift + 1):
            ph[s] = complex(math.cos(k * (s - shift)), math.sin(k * (s - shift)))
        tot = 0.0
        for j in range(nw):
            acc = 0j
            for y in range(ny):
                acc += W[j, y] * ph[S[j, y] + shift] * phi[i, y]
            tot += q[j] * (acc.real * acc.real + acc.imag * acc.imag)
        out[i] = tot
    return out


def _word_expectation_np(phi, ks, W, S, q, shift, chunk=1 << 15):
    out = np.empty(ks.shape[0])
    for i, k in enumerate(ks):
        ph = np.exp(1j * k * np.arange(-shift, shift + 1))
        tot = 0.0
        for lo in range(0, W.shape[0], chunk):
            hi = lo + chunk
            psi = (W[lo:hi] * ph[S[lo:hi] + shift] * phi[i]).sum(axis=1)
            tot += np.dot(q[lo:hi], np.abs(psi) ** 2)
        out[i] = tot
    return out


def word_expectation(phi, ks, W, S, q):
    """``sum_j q_j |psi_j(k)|**2`` for the word-space vectors built from ``phi``."""
    phi = np.ascontiguousarray(phi, dtype=np.complex128)
    ks = np.ascontiguousarray(ks, dtype=float)
    W = np.ascontiguousarray(W, dtype=np.complex128)
    S = np.ascontiguousarray(S, dtype=np.int64)
    q = np.ascontiguousarray(q, dtype=float)
    shift = int(np.abs(S).max()) if S.size else 0
    if _accel.USE_NUMBA:
        return _word_expectation_nb(phi, ks, W, S, q, shift)
    return _word_expectation_np(phi, ks, W, S, q, shift)


IMPLEMENTATIONS = {
    "secular_roots": (_secular_roots_nb, _secular_roots_np),
    "assemble": (_assemble_nb, _assemble_np),
    "slice_norms": (_slice_norms_nb, _slice_norms_np),
    "word_expectation": (_word_expectation_nb, _word_expectation_np),
}
