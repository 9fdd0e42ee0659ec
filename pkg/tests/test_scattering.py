import math

import numpy as np
import pytest
import sympy

from snakewalk import scattering as sc
from snakewalk import words
from snakewalk.errors import PreconditionError

KS16 = np.linspace(math.pi + 0.1, 2 * math.pi - 0.1, 16)


def test_unitarity_on_fine_grid():
    ks = 2 * math.pi * (np.arange(1024) + 0.5) / 1024
    r = np.abs(sc.reflection_amplitude(ks)) ** 2
    t = np.abs(sc.transmission_amplitude(ks)) ** 2
    assert np.abs(r + t - 1).max() < 1e-12
    assert np.abs(t - sc.transmission_probability(ks)).max() < 1e-12


def test_transmission_at_three_half_pi_is_eight_ninths():
    k = sympy.Rational(3, 2) * sympy.pi
    E = lambda z: sympy.exp(sympy.I * z)
    T = sympy.sqrt(2) * (E(-2 * k) - 3 + 2 * E(2 * k)) / (5 - 2 * E(-2 * k) - 2 * E(2 * k))
    assert sympy.simplify(sympy.Abs(T) ** 2 - sympy.Rational(8, 9)) == 0
    assert abs(sc.transmission_probability(1.5 * math.pi) - 8 / 9) < 1e-15


def test_denominator_modulus():
    ks = np.linspace(0, 2 * math.pi, 50)
    assert np.allclose(np.abs(sc._denominator(ks)), 1 + 8 * np.sin(ks) ** 2)


def test_argmax_of_transmission():
    ks = np.linspace(math.pi, 2 * math.pi, 721)
    step = ks[1] - ks[0]
    table = sc.transmission_table(ks)
    assert abs(ks[np.argmax(table[:, 1])] - 1.5 * math.pi) <= step
    # T vanishes at k = pi, where its phase is undefined
    inner = (ks > math.pi + 0.05) & (ks < 2 * math.pi - 0.05)
    assert abs(ks[inner][np.argmin(table[inner, 2])] - 1.5 * math.pi) <= step


def test_effective_length():
    assert abs(sc.effective_length(1.5 * math.pi) - 1 / 3) < 1e-6
    c = sc.scattering_coefficients(4.0)
    assert abs(c.transmission + c.reflection - 1) < 1e-14
    assert c.effective_length > 1 / 3


@pytest.mark.parametrize("n", [2, 4, 6])
def test_scattering_ansatz_holds(n):
    for k in KS16:
        vec = sc.solve_scattering_vector(n, k, strict=True)
        assert vec.hypothesis_holds and vec.residual < 1e-8
        assert vec.method == "svd"


def test_rank_deficiency_is_reported():
    vec = sc.solve_scattering_vector(4, 1.5 * math.pi)
    assert vec.rank_deficient and vec.hypothesis_holds
    assert sc.solve_scattering_vector(2, 4.0).rank_deficient is False


def test_large_n_uses_iterative_solver():
    vec = sc.solve_scattering_vector(10, 1.5 * math.pi)
    assert vec.method == "lsqr" and vec.residual < 1e-8


def test_solver_preconditions():
    for n in (3, 12, 0):
        with pytest.raises(PreconditionError):
            sc.solve_scattering_vector(n, 4.0)


def test_outer_columns_follow_the_ansatz():
    vec = sc.solve_scattering_vector(4, 4.2)
    k = vec.k
    assert np.allclose(vec.column(-5), np.exp(-5j * k) * vec.incoming + vec.R * np.exp(5j * k) * vec.reflected)
    assert np.allclose(vec.column(6), vec.T * np.exp(6j * k) * vec.transmitted)
    assert vec.amplitudes((-6, 7)).shape == (14, 16)
    assert set(vec.report()) >= {"n", "k", "residual", "method", "hypothesis_holds"}


def test_single_span_class_vanishes_at_three_half_pi():
    vec = sc.solve_scattering_vector(10, 1.5 * math.pi)
    p1 = sc.span_probabilities(vec, 1)
    assert max(p1.values()) < 1e-20


@pytest.mark.parametrize("n,k", [(4, 4.1), (6, 1.5 * math.pi), (10, 1.5 * math.pi)])
def test_span_tables_integrate_to_column_norms(n, k):
    vec = sc.solve_scattering_vector(n, k)
    window = (-2 * n, 2 * n + 1)
    table = sc.span_class_table(vec, window)
    norms = (np.abs(vec.amplitudes(window)) ** 2).sum(axis=1)
    assert np.abs(table.sum(axis=1) - norms).max() < 1e-8
    total = sum(sum(sc.span_probabilities(vec, a, window).values()) for a in range(1, n + 1))
    zero = table[:, 0].sum()
    assert abs(total + zero - norms.sum()) < 1e-8


def test_span_probability_shape():
    vec = sc.solve_scattering_vector(10, 1.5 * math.pi)
    p2 = sc.span_probabilities(vec, 2)
    assert max(p2, key=p2.get) == 0
    p10 = sc.span_probabilities(vec, 10)
    assert p10[0] < max(p10.values())
    with pytest.raises(PreconditionError):
        sc.span_probabilities(vec, 0)


def test_transmitted_vector_is_complemented():
    vec = sc.solve_scattering_vector(4, 4.0)
    assert np.allclose(vec.transmitted, np.conj(vec.incoming[words.complement(4)]))
