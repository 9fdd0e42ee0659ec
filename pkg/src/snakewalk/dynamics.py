"""Localised band states on the line and their time evolution.

``eta_x`` is the equal-weight superposition of median-band eigenvectors with
phases exp(-i k x); it is concentrated near start position x. Its overlaps
after time t reduce to one-dimensional k-integrals, which are compared with
stationary-phase asymptotics.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma

from .bands import MomentumGrid
from .errors import ConsistencyError, PreconditionError, ResolutionError
from .line import median_band
from .propagator import band_evolve

DEFAULT_K = 4096


def auto_grid(span, minimum=DEFAULT_K):
    """Smallest power-of-two grid (>= minimum) resolving ``span`` positions."""
    need = max(int(minimum), int(math.ceil(span)))
    return MomentumGrid(1 << (need - 1).bit_length())


def build_eta(n, x=0, grid=None, window=None, tol=1e-6):
    """The localised state eta_x as a ColumnState on ``window`` (default x +- 3n)."""
    band = median_band(n)
    grid = grid or MomentumGrid(DEFAULT_K)
    lo, hi = window if window is not None else (x - 3 * n, x + 3 * n)
    if lo > x - 3 * n or hi < x + 3 * n:
        raise PreconditionError("the window must contain [x - 3n, x + 3n]")
    return band_evolve(band, grid, 0.0, lambda k: np.exp(-1j * k * x), (lo, hi), tol=tol)


def eta_overlap_evolved(n, omega, t, grid=None):
    """<eta_{omega t}| exp(-i H t) |eta_0> = (1/2pi) int exp(i t (omega k - lam(k))) dk."""
    shift = omega * t
    if abs(shift - round(shift)) > 1e-9:
        raise PreconditionError("omega * t must be an integer")
    shift = int(round(shift))
    band = median_band(n)
    vmax = 8.0 / (n + 2)
    need = 8 * (abs(t) * vmax + abs(shift))
    if grid is None:
        grid = auto_grid(need)
    elif grid.K < need:
        raise ResolutionError(f"grid of {grid.K} nodes cannot resolve the phase; need >= {need:.0f}")
    gb = band.on_grid(grid)
    ks = grid.nodes
    return complex(np.mean(np.exp(1j * (shift * ks - gb.lam * t))))


@dataclass
class StationaryPhasePrediction:
    regime: str
    amplitude: complex
    k_omega: float = None
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {"regime": self.regime,
                "amplitude_re": self.amplitude.real, "amplitude_im": self.amplitude.imag,
                "abs": abs(self.amplitude), "k_omega": self.k_omega, **self.details}


def edge_magnitude(n, t):
    return (n + 2) * gamma(1 / 3) / (2 * math.pi * (4 * math.sqrt(3) * (3 * n * n + 4)) ** (1 / 3)) \
        * t ** (-1 / 3)


def stationary_point(band, omega):
    """k in (pi/2, 3pi/2) with lam'(k) = omega."""
    if omega == 0:
        return math.pi

    def g(k):
        return float(band.derivatives_array(np.array([k]), 1)[1][0]) - omega

    a, b = math.pi / 2 + 1e-9, 3 * math.pi / 2 - 1e-9
    ga, gb = g(a), g(b)
    if ga * gb > 0:
        raise ConsistencyError(f"no stationary point for omega={omega} in (pi/2, 3pi/2)")
    k = brentq(g, a, b, xtol=1e-15, maxiter=200)
    if abs(g(k)) > 1e-10:
        raise ConsistencyError(f"stationary point not resolved: residual {g(k):.2e}")
    return k


def stationary_phase_predict(n, omega, t):
    if t <= 0:
        raise PreconditionError("t must be positive")
    band = median_band(n)
    edge = 8.0 / (n + 2)
    if abs(abs(omega) - edge) <= 1e-12:
        kstar = math.pi / 2 if omega < 0 else 3 * math.pi / 2
        phase = np.exp(1j * t * (omega * kstar - band.eigenvalue(kstar)))
        amp = phase * edge_magnitude(n, t)
        return StationaryPhasePrediction("edge", complex(amp), kstar)
    if abs(omega) > edge:
        return StationaryPhasePrediction("outside", 0j, None,
                                         {"note": "decays faster than any power of t"})
    k = stationary_point(band, omega)
    lam = band.eigenvalue(k)
    curv = band.derivative(k, 2, check=False) if abs(math.sin(k)) > 1e-9 \
        else band.derivative(k, 2)
    arg = t * (omega * (k - math.pi / 2) - lam) - math.pi / 4
    amp = np.exp(1j * math.pi / 2 * omega * t) * math.sqrt(2 / math.pi) * math.cos(arg) \
        / math.sqrt(t * abs(curv))
    return StationaryPhasePrediction("interior", complex(amp), k, {"lambda_dd": curv})


def locality_tail(n, grid=None, x=0):
    """Sum of slice 1-norms of eta_x over start positions at least n away from x."""
    grid = grid or MomentumGrid(DEFAULT_K)
    eta = build_eta(n, x, grid, window=(x - 4 * n, x + 4 * n))
    one = eta.one_norms()
    far = np.abs(eta.xs - x) >= n
    return float(one[far].sum())


def wavefront_profile(n, t, grid=None, window=None, tol=1e-6):
    """(xs, probabilities) of exp(-i H_n t) eta_0, evolved inside the band."""
    # band speed is at most 8/(n+2); 4n layers cover the front's tail
    reach = int(math.ceil(8 * abs(t) / (n + 2) + 4 * n))
    lo, hi = window if window is not None else (-reach, reach)
    if lo > -reach or hi < reach:
        raise PreconditionError(f"the window must contain [-{reach}, {reach}]")
    band = median_band(n)
    if grid is None:
        grid = auto_grid(4 * (hi - lo + 2 * n))
    state = band_evolve(band, grid, t, np.ones(grid.K), (lo, hi), tol=tol)
    return state.xs, state.probabilities()


def peak_positions(xs, prob, t, lo_frac=0.25):
    """Location and height of the largest probability on each side beyond lo_frac*t."""
    right = xs >= lo_frac * t
    left = xs <= -lo_frac * t
    ir = np.argmax(np.where(right, prob, -1))
    il = np.argmax(np.where(left, prob, -1))
    return (int(xs[il]), float(prob[il])), (int(xs[ir]), float(prob[ir]))


def peak_prominence(xs, prob, t, lo_frac=0.25):
    """Mean of the two side peaks over the mean probability on |x| <= lo_frac*t."""
    (_, pl), (_, pr) = peak_positions(xs, prob, t, lo_frac)
    plateau = prob[np.abs(xs) <= lo_frac * t].mean()
    return 0.5 * (pl + pr) / plateau
