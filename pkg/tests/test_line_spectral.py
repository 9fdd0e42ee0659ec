import math

import numpy as np
import pytest
import sympy

from snakewalk import line
from snakewalk.errors import CapacityError, PreconditionError

KS = [0.37, 1.2, 2.9, 4.4, 5.8]


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_hnk_hermitian_and_bounded(n):
    for k in KS:
        h = line.build_Hnk(n, k)
        assert np.abs(h - h.conj().T).max() < 1e-15
        assert np.abs(np.linalg.eigvalsh(h)).max() <= 4 + 1e-12
    assert np.abs(line.build_Hnk(4, 0.8, sparse=True).toarray() - line.build_Hnk(4, 0.8)).max() == 0


def test_hnk_limits():
    with pytest.raises(PreconditionError):
        line.build_Hnk(0, 0.1)
    with pytest.raises(CapacityError):
        line.build_Hnk(13, 0.1)
    with pytest.raises(CapacityError):
        line.build_Hnk(21, 0.1, sparse=True)


def test_hat_basis_n3_listing():
    k = 0.9
    b = line.hat_basis(3, k)
    assert np.abs(b.gram() - np.eye(8)).max() < 1e-14
    u0, u1, v0, v1 = line.line_factors(k)
    assert np.allclose(b[0], -1j * np.kron(np.kron(u0, u0), u0))
    assert np.allclose(b[1], np.kron(np.kron(u0, u0), u1))
    assert np.allclose(b[2], np.kron(np.kron(u0, u1), v0))
    assert np.allclose(b[3], np.kron(np.kron(u0, u1), v1))
    assert np.allclose(b[5], np.kron(np.kron(u1, v0), v1))
    assert np.allclose(b[6], np.kron(np.kron(u1, v1), v0))


def test_block_structure_n3():
    members = line.block_members(3)
    assert {l: len(m) for l, m in members.items()} == {1: 4, 3: 2, 5: 1, 7: 1}
    assert sorted(i for m in members.values() for i in m) == list(range(8))


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_cross_block_residuals_and_completeness(n):
    for k in KS[:3]:
        h = line.build_Hnk(n, k)
        proj = line.block_projectors(n, k)
        assert np.abs(sum(proj.values()) - np.eye(2 ** n)).max() < 1e-12
        for l1, p1 in proj.items():
            for l2, p2 in proj.items():
                if l1 != l2:
                    assert np.linalg.norm(p1 @ h @ p2, 2) < 1e-10


@pytest.mark.parametrize("n", [3, 4])
def test_other_blocks_are_k_independent(n):
    ref = None
    for k in KS[:3]:
        b = line.hat_basis(n, k)
        h = b.transform(line.build_Hnk(n, k))
        spec = {l: np.linalg.eigvalsh(h[np.ix_(m, m)]) for l, m in line.block_members(n).items()
                if l > 1}
        if ref is None:
            ref = spec
        for l in spec:
            assert np.abs(spec[l] - ref[l]).max() < 1e-12


@pytest.mark.parametrize("n", [2, 3, 5, 6])
def test_chain_matrix_is_block_one(n):
    for k in KS:
        u = line.isometry(n, k)
        assert np.abs(u.conj().T @ u - np.eye(n + 1)).max() < 1e-13
        assert np.abs(u.conj().T @ line.build_Hnk(n, k) @ u - line.phi_matrix(n, k)).max() < 1e-13


def test_phi_n2_at_half_pi():
    assert np.allclose(line.phi_matrix(2, math.pi / 2), [[0, 2, 0], [2, 0, 2], [0, 2, 0]])


def test_k_zero_spectrum_is_analytic():
    n = 3
    got = line.k_dependent_spectrum(n, 0.0)
    want = np.sort(np.linalg.eigvalsh(line.phi_matrix(n, 0.0)))[::-1]
    assert np.abs(got - want).max() < 1e-12
    with pytest.raises(PreconditionError):
        line.solve_p_equation(n, math.pi)


def test_p_roots_n2_at_half_pi():
    assert np.allclose(line.solve_p_equation(2, math.pi / 2), [math.pi / 4, math.pi / 2, 3 * math.pi / 4],
                       atol=1e-14)


@pytest.mark.parametrize("n", [1, 4, 8, 11])
def test_p_roots_are_chain_eigenvalues(n):
    for k in KS:
        p = line.solve_p_equation(n, k)
        assert len(p) == n + 1 and np.all(np.diff(p) > 0)
        assert np.all((p > 0) & (p < math.pi))
        lhs = 2 * (np.cos(p) - math.cos(k)) * np.sin((n + 1) * p)
        assert np.abs(lhs - math.sin(k) ** 2 * np.sin(n * p)).max() < 1e-12
        ev = np.sort(np.linalg.eigvalsh(line.phi_matrix(n, k)))
        assert np.abs(np.sort(4 * np.cos(p)) - ev).max() < 1e-10


def test_median_band_n2_is_two_cos():
    b = line.median_band(2)
    for k in KS:
        assert abs(b.eigenvalue(k) - 2 * math.cos(k)) < 1e-13
        assert abs(b.d1(k) + 2 * math.sin(k)) < 1e-9
        assert abs(b.d3(k) - 2 * math.sin(k)) < 1e-6
    with pytest.raises(PreconditionError):
        line.median_band(3)


@pytest.mark.parametrize("n", range(2, 21, 2))
def test_closed_form_derivatives_at_half_pi(n):
    b = line.median_band(n)
    assert abs(b.eigenvalue(math.pi / 2)) < 1e-13
    assert abs(b.d1(math.pi / 2) + 8 / (n + 2)) < 1e-9
    assert abs(b.d3(math.pi / 2) - 8 * (3 * n * n + 4) / (n + 2) ** 3) < 1e-6
    assert abs(b.d1(3 * math.pi / 2) - 8 / (n + 2)) < 1e-9


@pytest.mark.parametrize("n", [4, 8, 12])
def test_band_symmetries_and_range(n):
    b = line.median_band(n)
    assert abs(b.eigenvalue(0.0) - 4 * math.cos(n * math.pi / 2 / (n + 1))) < 1e-12
    assert abs(b.eigenvalue(math.pi) - 4 * math.cos((n / 2 + 1) * math.pi / (n + 1))) < 1e-12
    for k in KS:
        assert abs(b.eigenvalue(-k) - b.eigenvalue(k)) < 1e-12
        assert abs(b.eigenvalue(math.pi / 2 + k) + b.eigenvalue(math.pi / 2 - k)) < 1e-12
        assert abs(b.eigenvalue(k)) <= 4 * math.sin(math.pi / (2 * n + 2)) + 1e-12


def test_band_monotone_on_half_period():
    b = line.median_band(8)
    ks = np.linspace(0.01, math.pi - 0.01, 200)
    assert np.all(np.diff(b.derivatives_array(ks, 0)[0]) < 0)


@pytest.mark.parametrize("n", [8, 12, 16])
def test_derivative_bounds_and_second_derivative_rate(n):
    b = line.median_band(n)
    ks = np.linspace(0.01, 2 * math.pi - 0.01, 256)
    d = b.derivatives_array(ks, 2)
    L1 = line.Lambda_d1(ks) / n
    lo = np.minimum(L1 * (1 - 2 / n), L1 * (1 + 2 / n))
    hi = np.maximum(L1 * (1 - 2 / n), L1 * (1 + 2 / n))
    assert np.all((d[1] >= lo - 1e-14) & (d[1] <= hi + 1e-14))
    L0 = line.Lambda(ks) / n
    assert np.all(np.abs(d[0]) <= np.abs(L0) * (1 + 2 / n) + 1e-14)
    # fitted C = n^2 max|lambda'' - Lambda''/n| is about 20-24 for these n
    c = n * n * np.abs(d[2] - line.Lambda_d2(ks) / n).max()
    assert 15 < c < 30


def test_second_derivative_sign_away_from_half_pi():
    b = line.median_band(16)
    ks = np.linspace(0.02, math.pi / 2 - 0.02, 100)
    assert np.all(b.derivatives_array(ks, 2)[2] < 0)
    assert abs(b.derivative(math.pi / 2, 2)) < 1e-6


def test_Lambda_matches_symbolic_derivatives():
    k = sympy.symbols("k")
    expr = 4 * sympy.atan(2 * sympy.cos(k) / sympy.sin(k) ** 2)
    d1, d2 = sympy.diff(expr, k), sympy.diff(expr, k, 2)
    for val in [0.3, 1.1, 2.0, 2.8]:
        assert abs(float(expr.subs(k, val)) - line.Lambda(val)) < 1e-12
        assert abs(float(d1.subs(k, val)) - line.Lambda_d1(val)) < 1e-12
        assert abs(float(d2.subs(k, val)) - line.Lambda_d2(val)) < 1e-12


def test_scaled_band_converges():
    ks = np.linspace(0.1, 2 * math.pi - 0.1, 41)
    errs = []
    for n in [4, 8, 16, 32]:
        lam = line.median_band(n).derivatives_array(ks, 0)[0]
        errs.append(np.abs(n * lam - line.Lambda(ks)).max())
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.25


@pytest.mark.parametrize("n", [2, 4, 6])
def test_psi_is_word_space_eigenvector(n):
    b = line.median_band(n)
    for k in KS:
        v = line.psi(b, k)
        assert abs(np.linalg.norm(v) - 1) < 1e-12
        assert np.abs(line.build_Hnk(n, k) @ v - b.eigenvalue(k) * v).max() < 1e-12


def test_restricted_block_equivalence():
    full, restricted, diff = line.restricted_equivalence_check(2, 0, 5, "01", "10", 2.0)
    assert abs(full) > 1e-3
    assert diff < 1e-10


def test_restricted_block_needs_distance():
    with pytest.raises(PreconditionError):
        line.restricted_equivalence_check(2, 0, 4, "01", "10", 1.0)
    with pytest.raises(PreconditionError):
        line.restricted_equivalence_check(2, 0, 9, "011", "10", 1.0)
