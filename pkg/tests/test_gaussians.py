import math

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from tacnode.config import EnsembleConfig
from tacnode.gaussians import (
    GaussianDerivative,
    basis_functions,
    gaussian_moments,
    gaussian_poly_moment,
    gaussian_product_integral,
    hermite_coefficients,
    hermite_values,
    poly_gaussian_gram,
    shift_polynomial,
    transition_density,
    weights,
)


def close(a, b, tol):
    return abs(a - b) <= tol * max(1, abs(b))


def polyval(c, x):
    return mp.fsum(ck * x**k for k, ck in enumerate(c))


def test_hermite_small_orders():
    assert hermite_coefficients(2) == (-1, 0, 1)
    assert hermite_coefficients(3) == (0, -3, 0, 1)
    assert hermite_coefficients(4) == (3, 0, -6, 0, 1)


@pytest.mark.parametrize("k", [0, 1, 5, 12])
def test_hermite_values_match_coefficients(k):
    y = mp.mpf("0.37")
    assert close(hermite_values(y, max(k, 1))[k], polyval(hermite_coefficients(k), y), mp.mpf(10) ** -60)


def test_hermite_orthogonality():
    w = lambda y: mp.exp(-y * y / 2) / mp.sqrt(2 * mp.pi)
    for j in range(5):
        for k in range(5):
            val = mp.quad(lambda y: polyval(hermite_coefficients(j), y) * polyval(hermite_coefficients(k), y) * w(y), [-mp.inf, 0, mp.inf])
            assert close(val, mp.factorial(k) if j == k else 0, mp.mpf(10) ** -30)


def test_transition_density_normalised_and_semigroup():
    N, x, z = 5, mp.mpf("0.3"), mp.mpf("-0.4")
    assert close(mp.quad(lambda y: transition_density(N, "0.7", x, y), [-mp.inf, x, mp.inf]), 1, mp.mpf(10) ** -30)
    lhs = mp.quad(lambda y: transition_density(N, "0.3", x, y) * transition_density(N, "0.4", y, z), [-mp.inf, 0, mp.inf])
    assert close(lhs, transition_density(N, "0.7", x, z), mp.mpf(10) ** -30)


def test_transition_density_rejects_nonpositive_time():
    with pytest.raises(ValueError):
        transition_density(3, 0, 0, 0)


@pytest.mark.parametrize("k", [0, 1, 2, 5])
def test_gaussian_derivative_against_numerical_derivative(k):
    c, var = mp.mpf("0.4"), mp.mpf("0.3")
    g = GaussianDerivative(c, var, k)
    phi = lambda x: mp.npdf(x, c, mp.sqrt(var))
    x = mp.mpf("0.9")
    assert close(g(x), mp.diff(phi, x, k), mp.mpf(10) ** -25)
    # the coefficient form agrees with direct evaluation
    assert close(polyval(g.coefficients(), x - c) * phi(x), g(x), mp.mpf(10) ** -50)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 5), st.floats(-3, 3), st.integers(0, 8))
def test_moments_against_quadrature(a, b, m):
    a, b = mp.mpf(a), mp.mpf(b)
    ref = mp.quad(lambda x: x**m * mp.exp(-a * x * x + b * x), [-mp.inf, b / (2 * a), mp.inf])
    assert close(gaussian_poly_moment(a, b, m), ref, mp.mpf(10) ** -25)


def test_moments_reject_bad_input():
    with pytest.raises(ValueError):
        gaussian_moments(0, 1, 2)
    with pytest.raises(ValueError):
        gaussian_moments(1, 1, -1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=7), st.floats(-2, 2), st.floats(-2, 2))
def test_shift_polynomial(coeffs, d, y):
    c = [mp.mpf(v) for v in coeffs]
    d, y = mp.mpf(d), mp.mpf(y)
    assert close(polyval(shift_polynomial(c, d), y), polyval(c, y + d), mp.mpf(10) ** -50)


def test_poly_gaussian_gram_against_quadrature():
    P = [[1], [0, 1], [1, -2, 3]]
    Q = [[2, 1], [0, 0, 1]]
    cP, cQ, A, mu = mp.mpf("0.2"), mp.mpf("-0.5"), mp.mpf("1.7"), mp.mpf("0.1")
    G = poly_gaussian_gram(P, cP, Q, cQ, A, mu, pref=3)
    for i, p in enumerate(P):
        for j, q in enumerate(Q):
            ref = 3 * mp.quad(lambda x: polyval(p, x - cP) * polyval(q, x - cQ) * mp.exp(-A * (x - mu) ** 2), [-mp.inf, mu, mp.inf])
            assert close(G[i][j], ref, mp.mpf(10) ** -30)


def test_gaussian_product_integral_against_quadrature():
    c1, s1, c2, s2 = mp.mpf("0.7"), mp.mpf("0.2"), mp.mpf("-0.3"), mp.mpf("0.5")
    P = [GaussianDerivative(c1, s1, k).coefficients() for k in range(3)]
    Q = [GaussianDerivative(c2, s2, k).coefficients() for k in range(3)]
    G = gaussian_product_integral(P, c1, s1, Q, c2, s2)
    for i in range(3):
        for j in range(3):
            ref = mp.quad(lambda x: GaussianDerivative(c1, s1, i)(x) * GaussianDerivative(c2, s2, j)(x), [-mp.inf, 0, mp.inf])
            assert close(G[i][j], ref, mp.mpf(10) ** -30)


def test_weights_reproduce_transition_densities():
    cfg = EnsembleConfig(6, 2, 1, -1, "0.5", "-0.5", "0.4")
    W = weights(cfg)
    x = mp.mpf("0.13")
    N = cfg.n / cfg.T
    for k, a in ((1, cfg.a1), (2, cfg.a2)):
        ratio = transition_density(N, cfg.t, a, x) / W.w1(k, x)
        ratio0 = transition_density(N, cfg.t, a, 0) / W.w1(k, 0)
        assert close(ratio, ratio0, mp.mpf(10) ** -40)
    for j in (1, 2):
        # w_{1,j} w_{2,j} = exp(-n V_j) up to a constant
        lhs = mp.log(W.w1(j, x) * W.w2(j, x)) + cfg.n * W.V(j, x)
        assert close(lhs, 0, mp.mpf(10) ** -40)
        assert close(W.V_prime(j, x), mp.diff(lambda y: W.V(j, y), x), mp.mpf(10) ** -20)


def test_basis_vectors_match_terms():
    cfg = EnsembleConfig(7, 3, 1, -1, "0.5", "-0.5", "0.6")
    B = basis_functions(cfg)
    x = mp.mpf("0.21")
    fv, gv = B.f_vector(x), B.g_vector(x)
    assert len(fv) == len(gv) == 7
    for i in range(1, 8):
        assert close(fv[i - 1], B.f(i, x), mp.mpf(10) ** -50)
        assert close(gv[i - 1], B.g(i, x), mp.mpf(10) ** -50)
    # f_2 is the x-derivative of P_N(t, a1, x)
    N = cfg.n / cfg.T
    d = mp.diff(lambda y: transition_density(N, cfg.t, cfg.a1, y), x)
    assert close(B.f(2, x), d, mp.mpf(10) ** -25)


def test_no_underflow_far_in_tail():
    g = GaussianDerivative(0, mp.mpf("1e-3"), 3)
    v = g(50)
    assert v != 0 and math.isfinite(float(mp.log(abs(v))))
