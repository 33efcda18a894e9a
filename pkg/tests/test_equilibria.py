import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

import draws
from coinfect.equilibria import (
    CoexistencePolynomial,
    all_equilibria,
    boundary_equilibria,
    coexistence_matrix,
    coexistence_points,
    coexistence_polynomial,
    equilibrium_by_label,
    equilibrium_table,
    residual_ok,
    single_strain,
)
from coinfect.params import derive

P0 = draws.p0()


def _coords(label, K, p=P0):
    return np.asarray(equilibrium_by_label(p, K, label).coords)


def test_single_strain_examples():
    pts = {pt.label: pt for pt in single_strain(P0, 0.4, 1)}
    assert set(pts) == {"E1", "E2"}
    assert pts["E2"].stable and not pts["E1"].stable
    pts = {pt.label: pt for pt in single_strain(P0, 1.0, 1)}
    np.testing.assert_allclose(pts["E3"].coords, (0.5, 0.25, 0.0, 0.0))
    assert pts["E3"].stable and not pts["E1"].stable and not pts["E2"].stable
    with pytest.raises(ValueError):
        single_strain(P0, 1.0, 4)


@pytest.mark.parametrize("i", [1, 2, 3])
def test_single_strain_residuals(i):
    for pt in single_strain(P0, 5.0, i):
        assert residual_ok(pt)


def test_reference_coordinates():
    np.testing.assert_allclose(_coords("G3", 0.8), (0.5, 0.1875, 0, 0), atol=1e-15)
    np.testing.assert_allclose(_coords("G6", 2.0), (1.0, 1 / 6, 0, 1 / 3), atol=1e-14)
    np.testing.assert_allclose(_coords("G5", 8.0), (2.0, 0, 0, 1.5), atol=1e-15)


def test_boundary_points_solve_the_system():
    for K in (0.3, 0.8, 2.0, 8.0):
        pts = boundary_equilibria(P0, K)
        assert [pt.label for pt in pts] == ["G1", "G2", "G3", "G4", "G5", "G6", "G7"]
        assert all(residual_ok(pt) for pt in pts)


def test_admissibility_windows():
    # G3 needs K > sigma1, G6 needs K1 < K < K2
    assert not equilibrium_by_label(P0, 0.3, "G3").admissible
    assert equilibrium_by_label(P0, 0.8, "G3").admissible
    assert not equilibrium_by_label(P0, 0.8, "G6").admissible
    assert equilibrium_by_label(P0, 2.0, "G6").admissible
    assert not equilibrium_by_label(P0, 5.0, "G6").admissible


def test_face_points_meet_single_strain_points():
    # G6 -> G3 at K1 and G6 -> G5 at K2; G7 -> G4 at K3
    d = derive(P0)
    np.testing.assert_allclose(_coords("G6", d.K1), _coords("G3", d.K1), atol=1e-12)
    np.testing.assert_allclose(_coords("G6", d.K2), _coords("G5", d.K2), atol=1e-12)
    np.testing.assert_allclose(_coords("G7", d.K3), _coords("G4", d.K3), atol=1e-12)
    # I1 on G6 vanishes linearly at K2
    assert _coords("G6", 4.0)[1] == pytest.approx(0.0, abs=1e-14)


def _symbolic_polynomial(p, K):
    S = sympy.Symbol("S")
    r, K_ = sympy.nsimplify(p.r), sympy.nsimplify(K)
    a1, a2, a3 = map(sympy.nsimplify, p.alpha)
    m1, m2, m3 = map(sympy.nsimplify, p.mu)
    e1, e2 = map(sympy.nsimplify, p.eta)
    g1, g2 = map(sympy.nsimplify, p.gamma)
    M = sympy.Matrix([
        [m1, m2, m3, r / K_ * (S - K_) * S],
        [a1, a2, a3, r / K_ * (S - K_)],
        [0, g1, e1, m1 - a1 * S],
        [g2, 0, e2, m2 - a2 * S],
    ])
    poly = sympy.Poly(sympy.expand(M.det()), S)
    return [float(poly.coeff_monomial(S**k)) for k in (2, 1, 0)]


@pytest.mark.parametrize("K", [0.8, 2.0, 8.0])
def test_polynomial_matches_symbolic_determinant(K):
    got = coexistence_polynomial(P0, K).coefficients
    want = _symbolic_polynomial(P0, K)
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-14)


def test_gamma_zero_reference():
    p = draws.p0(gamma=(0.0, 0.0))
    poly = coexistence_polynomial(p, 2.0)
    # alpha1 alpha2 (sigma1 - sigma2) = -1, so P(S) = -(1.8 - 0.6 S)
    np.testing.assert_allclose(poly.coefficients, (0.0, 0.6, -1.8), atol=1e-14)
    assert poly.real_roots(scale=2.0) == pytest.approx([3.0])
    assert coexistence_points(p, 2.0) == []


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), logK=st.floats(-2.0, 3.0))
def test_leading_coefficient_cofactor(seed, logK):
    p = draws.any_regime(np.random.default_rng(seed))
    K = derive(p).sigma[0] * np.exp(logK)
    M = coexistence_matrix(p, K, 0.0)
    M[:, 3] = (p.r / K, 0.0, 0.0, 0.0)
    poly = coexistence_polynomial(p, K)
    scale = np.max(np.abs(poly.coefficients)) * (1 + derive(p).sigma[2]) ** 2
    assert abs(poly.p2 - np.linalg.det(M)) <= 1e-11 * scale


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), logK=st.floats(-2.0, 3.0))
def test_interpolation_matches_oversampled_determinant(seed, logK):
    p = draws.any_regime(np.random.default_rng(seed))
    K = derive(p).sigma[0] * np.exp(logK)
    poly = coexistence_polynomial(p, K)
    S = np.linspace(0.0, 1.5 * derive(p).sigma[2], 10)
    dets = np.array([np.linalg.det(coexistence_matrix(p, K, s)) for s in S])
    scale = 1 + np.max(np.abs(dets))
    assert np.max(np.abs(poly(S) - dets)) <= 1e-10 * scale


def test_reference_polynomial_oversampled():
    poly = coexistence_polynomial(P0, 2.0)
    S = np.linspace(-1.0, 5.0, 10)
    dets = [np.linalg.det(coexistence_matrix(P0, 2.0, s)) for s in S]
    assert np.max(np.abs(poly(S) - dets)) <= 1e-10


def test_real_roots_cases():
    assert CoexistencePolynomial(1.0, -3.0, 2.0).real_roots() == pytest.approx([1.0, 2.0])
    assert CoexistencePolynomial(1.0, 0.0, 1.0).real_roots() == []
    assert CoexistencePolynomial(0.0, 2.0, -1.0).real_roots() == pytest.approx([0.5])
    assert CoexistencePolynomial(0.0, 0.0, 0.0).real_roots() == []
    # cancellation-prone small root
    assert CoexistencePolynomial(1.0, -1e8, 1.0).real_roots()[0] == pytest.approx(1e-8, rel=1e-12)


def test_coexistence_point_in_competitive_regime():
    # eta2* < eta1*: G6 hands over to an interior point at K0
    p = draws.p0(eta=(3.0, 0.5))
    d = derive(p)
    K = 0.5 * (d.K0 + d.K2)
    pts = coexistence_points(p, K)
    assert len(pts) >= 1
    for pt in pts:
        assert pt.label == "G8" and residual_ok(pt)
        assert min(pt.coords) > 0
        assert d.sigma[0] < pt.S < min(K, d.sigma[2])


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), logK=st.floats(-2.0, 3.5))
def test_equilibrium_laws(seed, logK):
    # at any equilibrium with S > 0: sum alpha_i I_i = r (1 - S/K),
    # and sum mu_i I_i = r S (1 - S/K)
    p = draws.any_regime(np.random.default_rng(seed))
    K = derive(p).sigma[0] * np.exp(logK)
    for pt in all_equilibria(p, K):
        assert residual_ok(pt)
        S, *I = pt.coords
        if pt.label == "G1":
            continue
        scale = 1 + np.max(np.abs(pt.coords))
        assert np.dot(p.alpha, I) == pytest.approx(p.r * (1 - S / K), abs=1e-9 * scale)
        assert np.dot(p.mu, I) == pytest.approx(p.r * S * (1 - S / K), abs=1e-9 * scale)


def test_table_is_exact_and_stable():
    text = equilibrium_table(all_equilibria(P0, 2.0))
    lines = text.splitlines()
    assert lines[0] == "label,S,I1,I2,I12,admissible,residual"
    row = dict(zip(lines[0].split(","), lines[6].split(",")))
    assert row["label"] == "G6" and row["admissible"] == "true"
    assert float(row["I1"]) == _coords("G6", 2.0)[1]
    assert text == equilibrium_table(all_equilibria(P0, 2.0))
