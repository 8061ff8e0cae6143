import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from ziegler.charpoly import (CharPoly, MuPoly, char_poly, char_poly_2dof_trace, coeffs_at_loads, load_tensor,
                              mu_poly, polynomial_roots, roots, to_mu_poly)
from ziegler.errors import OddCoefficientsPresent
from ziegler.model import PendulumConfig, assemble, ziegler_config

from test_model import configs

lam, P = sp.symbols("lambda P")


def sympy_pencil(m, l, masses, stiff, damp):
    """Pencil built entry by entry from the matrix rules, in exact rationals."""
    M = sp.Matrix(m, m, lambda i, j: l**2 * sum(masses[max(i, j):]))
    K = sp.zeros(m, m)
    D = sp.zeros(m, m)
    for i in range(m):
        nxt = stiff[i + 1] if i + 1 < m else 0
        K[i, i] = stiff[i] + nxt
        D[i, i] = damp[i] + (damp[i + 1] if i + 1 < m else 0)
        if i + 1 < m:
            K[i, i + 1] = K[i + 1, i] = -stiff[i + 1]
            D[i, i + 1] = D[i + 1, i] = -damp[i + 1]
            K[i, i] -= P * l
            K[i, m - 1] += P * l
    return sp.Poly((lam**2 * M + lam * D + K).det(), lam)


def rationals(seq):
    return [sp.Rational(x).limit_denominator(1000) for x in seq]


def test_two_link_example():
    assert char_poly(assemble(ziegler_config(), 2.0)).coeffs == pytest.approx((2, 0, 3, 0, 1))


def test_two_link_damped_example():
    p = char_poly(assemble(ziegler_config(d1=1, d2=1), 1.0))
    assert p.coeffs == pytest.approx((2, 7, 6, 2, 1), abs=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_three_link_equal_stiffness_coefficients(seed):
    rng = np.random.default_rng(seed)
    masses = rationals(rng.uniform(0.1, 5, 3))
    c, l, load = (sp.Rational(x).limit_denominator(1000) for x in rng.uniform(0.2, 3, 3))
    m1, m2, m3 = masses
    expected = [
        l**6 * m1 * m2 * m3,
        c * l**4 * (6 * m2 * m3 + 5 * m1 * m3 + m1 * m2) - 2 * l**5 * load * m3 * (m1 + m2),
        3 * load**2 * l**4 * m3 - 2 * (7 * m3 + m2) * load * l**3 * c + (m1 + 5 * m2 + 14 * m3) * l**2 * c**2,
        c**3,
    ]
    cfg = PendulumConfig(3, float(l), tuple(map(float, masses)), (float(c),) * 3)
    got = mu_poly(cfg, float(load)).coeffs
    np.testing.assert_allclose(got, [float(e) for e in expected], rtol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_two_link_damped_coefficients(seed):
    rng = np.random.default_rng(100 + seed)
    m1, m2, c1, c2, d1, d2, l, load = (sp.Rational(x).limit_denominator(1000) for x in rng.uniform(0.1, 3, 8))
    expected = [
        l**4 * m1 * m2,
        l**2 * (m1 * d2 + d1 * m2 + 4 * m2 * d2),
        d1 * d2 + m1 * l**2 * c2 + 4 * m2 * l**2 * c2 + c1 * m2 * l**2 - 2 * load * l**3 * m2,
        d1 * c2 + c1 * d2,
        c1 * c2,
    ]
    cfg = PendulumConfig(2, float(l), (float(m1), float(m2)), (float(c1), float(c2)), (float(d1), float(d2)))
    got = char_poly(assemble(cfg, float(load))).coeffs
    np.testing.assert_allclose(got, [float(e) for e in expected], rtol=1e-12)


@pytest.mark.parametrize("m,damped", [(2, False), (3, True), (4, False), (4, True), (5, True)])
def test_matches_symbolic_determinant(m, damped):
    rng = np.random.default_rng(m)
    masses = rationals(rng.uniform(0.1, 4, m))
    stiff = rationals(rng.uniform(0.2, 4, m))
    damp = rationals(rng.uniform(0.1, 2, m)) if damped else [0] * m
    l = sp.Rational(3, 4)
    poly = sympy_pencil(m, l, masses, stiff, damp)
    load = sp.Rational(17, 10)
    expected = [float(cf.subs(P, load)) for cf in poly.all_coeffs()]
    cfg = PendulumConfig(m, 0.75, tuple(map(float, masses)), tuple(map(float, stiff)), tuple(map(float, damp)))
    got = char_poly(assemble(cfg, float(load))).coeffs
    np.testing.assert_allclose(got, expected, rtol=1e-11, atol=1e-13 * max(map(abs, expected)))


@given(configs(m=2), st.floats(0, 10))
def test_two_dof_trace_formula(cfg, load):
    t = assemble(cfg, load)
    np.testing.assert_allclose(char_poly(t).coeffs, char_poly_2dof_trace(t).coeffs, rtol=1e-10, atol=1e-12)


@given(configs(), st.floats(0, 10))
def test_leading_and_constant_coefficients(cfg, load):
    t = assemble(cfg, load)
    c = char_poly(t).coeffs
    assert c[0] == pytest.approx(np.linalg.det(t.M), rel=1e-9)
    assert c[-1] == pytest.approx(np.linalg.det(t.K), rel=1e-7, abs=1e-9)


@given(configs(m=3), st.floats(0, 10))
def test_vieta_on_mu_roots(cfg, load):
    p = mu_poly(cfg, load)
    z, inf = polynomial_roots(p.coeffs)
    a = np.asarray(p.coeffs)
    assert inf == 0
    assert np.sum(z) == pytest.approx(-a[1] / a[0], rel=1e-7, abs=1e-7)
    assert np.prod(z) == pytest.approx(-a[3] / a[0], rel=1e-7, abs=1e-9)


@given(configs(), st.floats(0, 8))
def test_roots_are_roots(cfg, load):
    p = mu_poly(cfg, load)
    spec = roots(p)
    a = np.asarray(p.coeffs)
    for z in spec.roots:
        scale = np.polyval(np.abs(a), abs(z))
        assert abs(np.polyval(a, z)) <= 1e-9 * scale


@given(configs(damped=True), st.floats(0, 5))
def test_load_tensor_reproduces_coefficients(cfg, load):
    T = load_tensor(cfg)
    got = coeffs_at_loads(T, [load])[0]
    want = char_poly(assemble(cfg, load)).coeffs
    np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-10 * max(map(abs, want)))


def test_vanishing_free_end_mass_gives_infinite_eigenvalue():
    p = mu_poly(ziegler_config(m2=0.0), 1.0)
    assert p.nominal_degree == 2
    assert p.effective_degree == 1
    assert p.infinite_count == 1
    assert roots(p).infinite_count == 1


def test_damped_polynomial_rejected_on_mu_path():
    with pytest.raises(OddCoefficientsPresent):
        to_mu_poly(char_poly(assemble(ziegler_config(d1=1, d2=1), 1.0)))


def test_cluster_of_double_root_at_default_radius():
    spec = roots(MuPoly((1.0, 2.0, 1.0)))
    assert spec.clusters == ((pytest.approx(-1.0), 2),)


def test_cluster_of_triple_root():
    # a triple root splits by about eps**(1/3), beyond the default radius
    assert len(roots(MuPoly((1.0, 3.0, 3.0, 1.0))).clusters) == 3
    spec = roots(MuPoly((1.0, 3.0, 3.0, 1.0)), cluster_radius=1e-4)
    assert len(spec.clusters) == 1
    center, mult = spec.clusters[0]
    assert mult == 3 and abs(center + 1) < 1e-4


def test_even_polynomial_flag():
    assert CharPoly((1.0, 0.0, 2.0, 0.0, 1.0)).is_even
    assert not CharPoly((1.0, 1.0, 2.0, 0.0, 1.0)).is_even


def test_companion_roots_of_ziegler_point():
    z, _ = polynomial_roots((2.0, 3.0, 1.0))
    assert sorted(z.real) == pytest.approx([-1.0, -0.5])
    assert math.isclose(np.max(np.abs(z.imag)), 0.0, abs_tol=1e-15)
