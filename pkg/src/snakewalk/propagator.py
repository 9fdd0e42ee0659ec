"""Time evolution exp(-iHt)|v> for Hermitian H.

Two matrix engines are provided: a dense eigendecomposition and a Chebyshev
expansion for sparse operators. ``band_evolve`` is the third, analytic
engine: inside one momentum band evolution is a phase exp(-i lam(k) t) per
momentum, so the state is re-synthesised from its k-space amplitudes.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import jv

from .errors import (CapacityError, ConvergenceError, NonHermitianError,
                     PreconditionError)

DENSE_LIMIT = 4096
HERMITIAN_TOL = 1e-12
DEFAULT_TOL = {"dense": 1e-10, "chebyshev": 1e-8}


@dataclass(frozen=True)
class Propagation:
    hamiltonian: object
    time: float
    method: str = "dense"
    tolerance: float = 1e-10

    def __post_init__(self):
        if self.tolerance <= 0:
            raise PreconditionError("tolerance must be positive")
        if self.method not in ("dense", "chebyshev"):
            raise PreconditionError(f"unknown method {self.method!r}")
        check_hermitian(self.hamiltonian)

    def apply(self, v):
        return evolve(self.hamiltonian, self.time, v, self.method, self.tolerance)


def check_hermitian(h, tol=HERMITIAN_TOL):
    if h.shape[0] != h.shape[1]:
        raise NonHermitianError("matrix is not square")
    if sp.issparse(h):
        d = abs(h - h.conj().T)
        err = d.max() if d.nnz else 0.0
    else:
        h = np.asarray(h)
        err = np.abs(h - h.conj().T).max() if h.size else 0.0
    if err > tol:
        raise NonHermitianError(f"matrix differs from its adjoint by {err:.3e}")


def spectral_bounds(h):
    """Gershgorin interval; a guaranteed enclosure of the spectrum."""
    if sp.issparse(h):
        h = h.tocsr()
        diag = h.diagonal().real
        rad = np.asarray(abs(h).sum(axis=1)).ravel() - np.abs(diag)
    else:
        h = np.asarray(h)
        diag = np.real(np.diag(h))
        rad = np.abs(h).sum(axis=1) - np.abs(diag)
    return float((diag - rad).min()), float((diag + rad).max())


def evolve_dense(h, t, v):
    h = h.toarray() if sp.issparse(h) else np.asarray(h)
    if h.shape[0] > DENSE_LIMIT:
        raise CapacityError(f"dense evolution limited to dimension {DENSE_LIMIT}")
    w, q = np.linalg.eigh(h)
    return q @ (np.exp(-1j * w * t) * (q.conj().T @ v))


def evolve_chebyshev(h, t, v, tol=1e-8, max_terms=100000):
    lo, hi = spectral_bounds(h)
    center = 0.5 * (hi + lo)
    half = 0.5 * (hi - lo) * 1.05 + 1e-12
    eye = sp.identity(h.shape[0], format="csr") if sp.issparse(h) else np.eye(h.shape[0])
    hs = (h - center * eye) / half

    def apply(x):
        return hs @ x

    tau = half * t
    t0 = v.astype(complex)
    t1 = apply(t0)
    out = jv(0, tau) * t0 + 2 * (-1j) * jv(1, tau) * t1
    m = 1
    quiet = 0
    while True:
        m += 1
        if m > max_terms:
            raise ConvergenceError(f"Chebyshev series did not converge in {max_terms} terms")
        t2 = 2 * apply(t1) - t0
        c = 2 * (-1j) ** m * jv(m, tau)
        out = out + c * t2
        t0, t1 = t1, t2
        if m > tau and abs(c) < 1e-3 * tol:
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
    return np.exp(-1j * center * t) * out


def evolve(h, t, v, method="auto", tol=None):
    """exp(-i h t) v. ``method`` is 'dense', 'chebyshev' or 'auto'."""
    v = np.asarray(v, dtype=complex)
    if h.shape[0] != v.shape[0]:
        raise PreconditionError("dimension mismatch between matrix and vector")
    nv = np.linalg.norm(v)
    if abs(nv - 1) > 1e-10:
        raise PreconditionError(f"input vector must be normalised (norm {nv!r})")
    check_hermitian(h)
    if method == "auto":
        method = "dense" if h.shape[0] <= DENSE_LIMIT and not sp.issparse(h) else "chebyshev"
    if tol is None:
        tol = DEFAULT_TOL.get(method, 1e-10)
    if t == 0:
        return v.copy()
    if method == "dense":
        return evolve_dense(h, t, v)
    if method == "chebyshev":
        return evolve_chebyshev(h, t, v, tol)
    raise PreconditionError(f"unknown method {method!r}")


def band_evolve(band, grid, t, coeffs, window, tol=1e-6):
    """Evolve a band-restricted state given by its k-space amplitudes.

    ``coeffs`` is either a callable k -> amplitude or an array over the grid
    nodes. The state is (1/sqrt(2pi)) int coeffs(k) |k>|psi(k)> dk, so a
    constant 1 gives the localised state centred at 0.
    """
    from .states import band_state
    gb = band.on_grid(grid)
    ks = grid.nodes
    a = coeffs(ks) if callable(coeffs) else np.asarray(coeffs)
    if a.shape != ks.shape:
        raise PreconditionError("coefficient array must match the grid")
    f = a * np.exp(-1j * gb.lam * t)
    return band_state(band, grid, f, window[0], window[1], tol=tol)
