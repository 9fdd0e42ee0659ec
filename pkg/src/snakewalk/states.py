"""Amplitudes over (x, j) on a finite x-window.

Band states are stored in a compact form (Fourier coefficients of the chain
components plus the word tables) and only expanded to a dense
``(len(window), 2**n)`` array on request. Slice norms are computed straight
from the compact form.
"""
import json

import numpy as np

from . import kernels, words
from .errors import PreconditionError, ResolutionError, TruncationError


def family_weights(family, n):
    return words.tree_weights(n) if family.name == "tree" else words.line_weights(n)


class ColumnState:
    """Complex amplitudes indexed by (x, j), x in [xmin, xmax], j in {0,1}^n."""

    def __init__(self, n, xmin, amplitudes=None, xmax=None, source=None, total=None):
        self.n = int(n)
        self.xmin = int(xmin)
        if amplitudes is not None:
            amplitudes = np.asarray(amplitudes, dtype=complex)
            if amplitudes.ndim != 2 or amplitudes.shape[1] != 2 ** self.n:
                raise PreconditionError("amplitudes must have shape (nx, 2**n)")
            xmax = self.xmin + amplitudes.shape[0] - 1
        if xmax is None:
            raise PreconditionError("window end missing")
        self.xmax = int(xmax)
        self._amps = amplitudes
        self._source = source
        self._norms = None
        # norm of the full (untruncated) state, when known
        self.total = total

    @property
    def xs(self):
        return np.arange(self.xmin, self.xmax + 1)

    @property
    def window(self):
        return (self.xmin, self.xmax)

    @property
    def amplitudes(self):
        if self._amps is None:
            c, zmin, w, s = self._source
            self._amps = kernels.assemble(c, zmin, w, s, self.xs)
        return self._amps

    def _slice_norms(self):
        if self._norms is None:
            if self._amps is None and self._source is not None:
                c, zmin, w, s = self._source
                self._norms = kernels.slice_norms(c, zmin, w, s, self.xs)
            else:
                a = np.abs(self.amplitudes)
                self._norms = ((a ** 2).sum(axis=1), a.sum(axis=1))
        return self._norms

    def probabilities(self):
        """Squared 2-norm of every x-slice."""
        return self._slice_norms()[0]

    def one_norms(self):
        return self._slice_norms()[1]

    def norm(self):
        return float(np.sqrt(self.probabilities().sum()))

    def slice(self, x):
        if not self.xmin <= x <= self.xmax:
            raise PreconditionError(f"x={x} outside the window {self.window}")
        return self.amplitudes[x - self.xmin]

    def vector(self):
        return self.amplitudes.reshape(-1)

    def inner(self, other):
        """<self|other> over the common window."""
        lo, hi = max(self.xmin, other.xmin), min(self.xmax, other.xmax)
        if hi < lo:
            return 0j
        a = self.amplitudes[lo - self.xmin:hi - self.xmin + 1]
        b = other.amplitudes[lo - other.xmin:hi - other.xmin + 1]
        return complex(np.vdot(a, b))

    def expected_span(self):
        q = words.span_lengths(self.n)
        p = np.abs(self.amplitudes) ** 2
        return float((p @ q).sum() / p.sum())

    def to_dict(self):
        a = self.amplitudes
        return {"n": self.n, "window": [self.xmin, self.xmax],
                "re": a.real.tolist(), "im": a.imag.tolist()}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        a = np.asarray(d["re"]) + 1j * np.asarray(d["im"])
        return cls(d["n"], d["window"][0], a)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def band_coefficients(grid, values, zmin, zmax):
    """c(z) = (1/K) sum_i exp(i k_i z) values[i] for z in [zmin, zmax].

    ``values`` may have trailing axes; the sum runs over axis 0.
    """
    K = grid.K
    if zmax - zmin + 1 > K:
        raise ResolutionError(
            f"position range {zmax - zmin + 1} exceeds the grid size {K}; "
            "positions would alias")
    z = np.arange(zmin, zmax + 1)
    full = np.fft.ifft(values, axis=0)
    out = full[np.mod(z, K)]
    ph = grid.phase(z)
    return out * ph.reshape((-1,) + (1,) * (out.ndim - 1))


def band_state(band, grid, f, xmin, xmax, tol=1e-6):
    """State (1/sqrt(2pi)) int f(k) |k>|psi(k)> dk restricted to [xmin, xmax].

    Raises TruncationError when more than ``tol`` of its probability lies
    outside the window.
    """
    if xmax < xmin:
        raise PreconditionError("empty window")
    n = band.n
    gb = band.on_grid(grid)
    f = np.asarray(f, dtype=complex)
    c = band_coefficients(grid, f[:, None] * gb.phi, xmin - n, xmax + n)
    w = family_weights(band.family, n)
    s = words.offsets(n)
    total = float(np.mean(np.abs(f) ** 2))
    state = ColumnState(n, xmin, xmax=xmax, source=(c, xmin - n, w, s), total=total)
    if tol is not None:
        outside = total - state.probabilities().sum()
        if outside > tol:
            raise TruncationError(
                f"{outside:.3e} of the probability lies outside the window [{xmin}, {xmax}]")
    return state
