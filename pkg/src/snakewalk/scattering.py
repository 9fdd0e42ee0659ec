"""Scattering of tree-band waves on the glued part.

A band wave e^{ikx} psi(k) coming from the first tree is partly reflected
(amplitude R, momentum -k) and partly transmitted into the second tree
(amplitude T, with the complemented word vector). ``solve_scattering_vector``
tests this ansatz: it fixes the outer amplitudes and solves for the layers
in between, then reports how well the eigen-equation holds.
"""
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import lsqr

from . import words
from .errors import ConsistencyError, PreconditionError
from .tree import column_hamiltonian, tree_band, tree_psi

DENSE_UNKNOWNS = 4096
FD_STEP = 1e-6
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class ScatteringCoefficients:
    k: float
    R: complex
    T: complex
    effective_length: float

    @property
    def transmission(self):
        return abs(self.T) ** 2

    @property
    def reflection(self):
        return abs(self.R) ** 2


def _denominator(k):
    return 5 - 2 * np.exp(-2j * k) - 2 * np.exp(2j * k)


def reflection_amplitude(k):
    k = np.asarray(k, dtype=float)
    return (1 - 2 * np.exp(2j * k)) / _denominator(k)


def transmission_amplitude(k):
    k = np.asarray(k, dtype=float)
    return math.sqrt(2) * (np.exp(-2j * k) - 3 + 2 * np.exp(2j * k)) / _denominator(k)


def transmission_probability(k):
    s2 = np.sin(np.asarray(k, dtype=float)) ** 2
    return 8 * s2 / (1 + 8 * s2)


def effective_length(k, h=FD_STEP):
    """d/dk arg T by a central difference of the unwrapped phase."""
    k = np.asarray(k, dtype=float)
    pts = np.stack([k - h, k, k + h])
    ph = np.unwrap(np.angle(transmission_amplitude(pts)), axis=0)
    return (ph[2] - ph[0]) / (2 * h)


def scattering_coefficients(k):
    k = float(k)
    return ScatteringCoefficients(k, complex(reflection_amplitude(k)),
                                  complex(transmission_amplitude(k)),
                                  float(effective_length(k)))


def transmission_table(ks):
    """Rows (k, |T|^2, effective length)."""
    ks = np.asarray(ks, dtype=float)
    return np.column_stack([ks, np.abs(transmission_amplitude(ks)) ** 2, effective_length(ks)])


# ---------------------------------------------------------------------------
# the scattering eigenvector
# ---------------------------------------------------------------------------

@dataclass
class ScatteringEigenvector:
    n: int
    k: float
    eigenvalue: float
    interior: np.ndarray            # shape (2n-2, 2**n), layers -n+2 .. n-1
    incoming: np.ndarray            # psi(k)
    reflected: np.ndarray           # psi(-k)
    transmitted: np.ndarray         # complemented psi(k)
    R: complex
    T: complex
    residual: float
    method: str
    rank: int = None
    condition: float = None
    info: dict = field(default_factory=dict)

    @property
    def interior_window(self):
        return (-self.n + 2, self.n - 1)

    @property
    def hypothesis_holds(self):
        return self.residual < RESIDUAL_TOL

    @property
    def rank_deficient(self):
        return self.rank is not None and self.rank < self.interior.size

    def column(self, x):
        n = self.n
        if x <= -n + 1:
            return np.exp(1j * self.k * x) * self.incoming + \
                self.R * np.exp(-1j * self.k * x) * self.reflected
        if x >= n:
            return self.T * np.exp(1j * self.k * x) * self.transmitted
        return self.interior[x + n - 2]

    def amplitudes(self, window):
        lo, hi = window
        return np.array([self.column(x) for x in range(lo, hi + 1)])

    def report(self):
        return {"n": self.n, "k": self.k, "eigenvalue": self.eigenvalue,
                "residual": self.residual, "method": self.method, "rank": self.rank,
                "condition": self.condition, "hypothesis_holds": self.hypothesis_holds,
                "rank_deficient": self.rank_deficient, **self.info}


def solve_scattering_vector(n, k, band=None, strict=False):
    """Solve (H - lam(k)) mu = 0 on the rows -n+1..n with the outer amplitudes fixed.

    Small systems use the SVD minimum-norm least-squares solution; larger ones
    use LSQR. The largest residual over the equation rows is reported; with
    ``strict`` a residual above tolerance raises ConsistencyError.
    """
    if n < 2 or n % 2:
        raise PreconditionError("n must be even and >= 2")
    if n > 10:
        raise PreconditionError("n must be <= 10")
    band = band or tree_band(n)
    k = float(k)
    lam = float(band.eigenvalue(k))
    inc = tree_psi(band, k)
    ref = tree_psi(band, -k)
    trn = np.conj(inc[words.complement(n)])
    R = complex(reflection_amplitude(k))
    T = complex(transmission_amplitude(k))

    dim = 2 ** n
    lo, hi = -2 * n, 2 * n + 1
    ham = column_hamiltonian(n, (lo, hi)).matrix
    size = ham.shape[0]
    known = np.zeros(size, dtype=complex)
    for x in range(lo, hi + 1):
        sl = slice((x - lo) * dim, (x - lo + 1) * dim)
        if x <= -n + 1:
            known[sl] = np.exp(1j * k * x) * inc + R * np.exp(-1j * k * x) * ref
        elif x >= n:
            known[sl] = T * np.exp(1j * k * x) * trn
    unknown = np.arange((-n + 2 - lo) * dim, (n - lo) * dim)
    rows = np.arange((-n + 1 - lo) * dim, (n + 1 - lo) * dim)
    shifted = (ham - lam * sp.identity(size, format="csr")).tocsr()[rows]
    a = shifted[:, unknown]
    b = -(shifted @ known)

    rank = cond = None
    if len(unknown) <= DENSE_UNKNOWNS:
        a = a.toarray()
        sol, _, rank, sv = np.linalg.lstsq(a, b, rcond=None)
        rank = int(rank)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
        method = "svd"
        info = {}
    else:
        out = lsqr(a, b, atol=1e-15, btol=1e-15, iter_lim=50000)
        sol = out[0]
        method = "lsqr"
        info = {"iterations": int(out[2]), "condition_estimate": float(out[6])}
        cond = float(out[6])
    resid = float(np.abs(a @ sol - b).max())
    vec = ScatteringEigenvector(n, k, lam, sol.reshape(2 * n - 2, dim), inc, ref, trn, R, T,
                                resid, method, rank, cond, info)
    if strict and not vec.hypothesis_holds:
        raise ConsistencyError(f"scattering ansatz residual {resid:.2e} at n={n}, k={k}")
    return vec


# ---------------------------------------------------------------------------
# span probabilities
# ---------------------------------------------------------------------------

def span_class_table(vec, window):
    """Array [x - lo, a] of squared amplitude summed over words with span length a."""
    amps = vec.amplitudes(window)
    lengths = words.span_lengths(vec.n)
    p = np.abs(amps) ** 2
    out = np.zeros((p.shape[0], vec.n + 1))
    for a in range(vec.n + 1):
        out[:, a] = p[:, lengths == a].sum(axis=1)
    return out


def span_probabilities(vec, a, window=None):
    """{doubled span centre: p} for snakes whose span length is exactly ``a``.

    The centre of an odd-length span is a half-integer, so keys are twice
    the centre (min + max of the visited layers).
    """
    n = vec.n
    if not 1 <= a <= n:
        raise PreconditionError(f"span length must lie in [1, {n}]")
    lo, hi = window if window is not None else (-2 * n, 2 * n + 1)
    amps = vec.amplitudes((lo, hi))
    smin, smax = words.span_table(n)
    sel = np.nonzero(smax - smin == a)[0]
    out = {}
    for i, x in enumerate(range(lo, hi + 1)):
        p = np.abs(amps[i, sel]) ** 2
        centres = 2 * x + smin[sel] + smax[sel]
        for c, v in zip(centres, p):
            out[int(c)] = out.get(int(c), 0.0) + float(v)
    return dict(sorted(out.items()))
