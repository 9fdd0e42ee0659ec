"""Move words j = j_1...j_n and their per-word synthesis tables.

A word is stored as the integer ``sum_l j_l 2**(n-l)`` so ``j_1`` is the most
significant bit. Step ``l`` moves the snake by ``+1`` when ``j_l = 1`` and by
``-1`` otherwise.

A band vector in word space has the form

    psi_j(k) = sum_{y=1}^{n+1} W[j, y] * exp(i k S[j, y]) * phi_y(k)

with ``S`` the partial step sums. The weight tables below give ``W`` for the
line (all factors 1/sqrt2) and for the binary tree (factors 1/sqrt3 with
sqrt2 weights), matching the two hat-basis constructions.
"""
from functools import lru_cache

import numpy as np

MAX_WORD_BITS = 20


def word_bits(n):
    """Bit table of shape ``(2**n, n)``, most significant (first) step first."""
    words = np.arange(2 ** n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((words[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def word_from_bits(bits):
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def bits_from_word(j, n):
    return [(j >> (n - 1 - l)) & 1 for l in range(n)]


def parse_word(s):
    """'0110' -> (6, 4)."""
    s = s.strip()
    if not s or set(s) - {"0", "1"}:
        raise ValueError(f"not a bit-word: {s!r}")
    return int(s, 2), len(s)


def format_word(j, n):
    return format(j, f"0{n}b") if n else ""


@lru_cache(maxsize=32)
def step_sums(n):
    """Partial sums ``z_1..z_n`` of the +-1 steps, shape ``(2**n, n)``."""
    steps = 2 * word_bits(n).astype(np.int64) - 1
    out = np.cumsum(steps, axis=1)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=32)
def offsets(n):
    """Phase offsets ``S`` of shape ``(2**n, n+1)``; the root column uses z_n."""
    s = step_sums(n)
    out = np.concatenate([s, s[:, -1:]], axis=1)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=32)
def line_weights(n):
    bits = word_bits(n)
    w = np.empty((2 ** n, n + 1), dtype=np.complex128)
    w[:, :n] = np.where(bits == 1, -1.0, 1.0)
    w[:, n] = -1j
    w *= 2.0 ** (-n / 2)
    w.setflags(write=False)
    return w


@lru_cache(maxsize=32)
def tree_weights(n):
    r2 = np.sqrt(2.0)
    bits = word_bits(n).astype(bool)
    lead = np.where(bits, 1.0, r2)      # u0 factors
    pivot = np.where(bits, -r2, 1.0)    # u1 factor
    tail = np.where(bits, r2, 1.0)      # v0 factors
    nw = 2 ** n
    before = np.ones((nw, n + 1))
    before[:, 1:] = np.cumprod(lead, axis=1)
    after = np.ones((nw, n + 1))
    after[:, :n] = np.cumprod(tail[:, ::-1], axis=1)[:, ::-1]
    w = np.empty((nw, n + 1), dtype=np.complex128)
    for y in range(n):
        w[:, y] = before[:, y] * pivot[:, y] * after[:, y + 1]
    w[:, n] = -1j * before[:, n]
    w *= 3.0 ** (-n / 2)
    w.setflags(write=False)
    return w


def complement(n):
    """Index map j -> j xor 1^n."""
    return (2 ** n - 1) - np.arange(2 ** n)


@lru_cache(maxsize=32)
def span_table(n):
    """(low, high) of the visited layers relative to the start, per word."""
    s = step_sums(n)
    zero = np.zeros((2 ** n, 1), dtype=np.int64)
    z = np.concatenate([zero, s], axis=1)
    lo = z.min(axis=1)
    hi = z.max(axis=1)
    lo.setflags(write=False)
    hi.setflags(write=False)
    return lo, hi


def span_lengths(n):
    lo, hi = span_table(n)
    return hi - lo


def synthesize(weights, n, k, phi):
    """Word-space vector for a single ``k`` from chain components ``phi``."""
    ph = np.exp(1j * k * offsets(n))
    return (weights * ph * np.asarray(phi)[None, :]).sum(axis=1)
