import warnings

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from tacnode._mp import PrecisionError, PrecisionWarning
from tacnode.biorthogonal import (
    TacnodeKernel,
    auto_precision,
    build_gram,
    kernel_trace,
    make_kernel_evaluator,
    recurrence_products,
    reproducing_integral,
    solve_y_rows,
    tacnode_rescaled_kernel,
)
from tacnode.config import EnsembleConfig, ScalingFamily
from tacnode.gaussians import basis_functions, weights


def close(a, b, tol):
    return abs(a - b) <= tol * max(1, abs(b))


def unequal_config():
    return EnsembleConfig(5, 2, "1.1", "-0.7", "0.4", "-0.6", "0.55")


def test_auto_precision_steps():
    assert auto_precision(10) == 128
    assert auto_precision(40) == 256
    assert auto_precision(80) == 512


def test_gram_entries_against_quadrature():
    cfg = unequal_config()
    G = build_gram(cfg).entries
    B = basis_functions(cfg)
    for i in (1, 3, 5):
        for j in (1, 2, 4):
            ref = mp.quad(lambda x: B.f(i, x) * B.g(j, x), [-mp.inf, -1, 0, 1, mp.inf])
            assert close(G[i - 1, j - 1], ref, mp.mpf(10) ** -25)


def test_gram_rejects_low_precision():
    with pytest.raises(ValueError):
        build_gram(unequal_config(), 32)


def test_ill_conditioned_gram_warns():
    cfg = EnsembleConfig.symmetric(40)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        build_gram(cfg, 64)
    assert any(issubclass(w.category, PrecisionWarning) for w in rec)


@pytest.mark.parametrize("cfg", [unequal_config(), EnsembleConfig.symmetric(6)])
def test_trace_is_n(cfg):
    ev = make_kernel_evaluator(cfg)
    assert close(kernel_trace(ev), cfg.n, mp.mpf(10) ** -25)


def test_reproducing_property():
    ev = make_kernel_evaluator(unequal_config())
    for x, y in [("0.1", "-0.2"), ("0.5", "0.3"), ("-0.4", "0.0")]:
        assert close(reproducing_integral(ev, x, y), ev(x, y), mp.mpf(10) ** -25)


def _det_ratio(cfg, pts):
    B = basis_functions(cfg)
    A = build_gram(cfg).entries
    F = mp.matrix([[B.f(i, x) for x in pts] for i in range(1, cfg.n + 1)])
    Gm = mp.matrix([[B.g(i, x) for x in pts] for i in range(1, cfg.n + 1)])
    return mp.det(F) * mp.det(Gm) / mp.det(A)


@pytest.mark.parametrize(
    "cfg, pts",
    [
        (EnsembleConfig(2, 1, 1, -1, "0.5", "-0.5", "0.6"), ["0.2", "-0.3"]),
        (EnsembleConfig(3, 1, "1.2", "-0.4", "0.3", "-0.9", "0.45"), ["0.4", "-0.1", "-0.6"]),
        (EnsembleConfig(3, 2, "1.2", "-0.4", "0.3", "-0.9", "0.45"), ["0.7", "0.1", "-0.5"]),
    ],
)
def test_top_correlation_matches_determinant_formula(cfg, pts):
    # rho_n = det F det G / det A must equal det [K(x_i, x_j)]
    ev = make_kernel_evaluator(cfg)
    K = mp.matrix([[ev(x, y) for y in pts] for x in pts])
    assert close(mp.det(K), _det_ratio(cfg, pts), mp.mpf(10) ** -25)


def test_one_point_function_from_marginal():
    cfg = EnsembleConfig(2, 1, 1, -1, "0.5", "-0.5", "0.6")
    ev = make_kernel_evaluator(cfg)
    x = mp.mpf("0.15")
    marg = mp.quad(lambda y: _det_ratio(cfg, [x, y]), [-mp.inf, -1, 0, 1, mp.inf])
    assert close(ev(x, x), marg, mp.mpf(10) ** -20)


# Y_1 against quadrature for one path per group


def _y1_by_quadrature(cfg):
    W = weights(cfg)
    w1 = [lambda x, k=k: W.w1(k, x) for k in (1, 2)]
    w2 = [lambda x, l=l: W.w2(l, x) for l in (1, 2)]
    I = lambda f: mp.quad(f, [-mp.inf, -1, 0, 1, mp.inf])
    tpi = 2 * mp.pi * mp.mpc(0, 1)
    Y = [[None] * 4 for _ in range(4)]
    for j in range(2):
        o = 1 - j
        # P_jj = x + c, P_jo = kappa; Q orthogonal to w21 and w22
        M = mp.matrix([[I(lambda x: w1[j](x) * w2[l](x)), I(lambda x: w1[o](x) * w2[l](x))] for l in range(2)])
        r = mp.matrix([-I(lambda x: x * w1[j](x) * w2[l](x)) for l in range(2)])
        c, kappa = mp.lu_solve(M, r)
        Q = lambda x: (x + c) * w1[j](x) + kappa * w1[o](x)
        Y[j][j], Y[j][o] = c, kappa
        for l in range(2):
            Y[j][2 + l] = -I(lambda x: Q(x) * x * w2[l](x)) / tpi
    for l in range(2):
        o = 1 - l
        # Q = al w11 + be w12 with int Q w2o = 0 and int Q w2l = -2 pi i
        M = mp.matrix([[I(lambda x: w1[k](x) * w2[l](x)) for k in range(2)], [I(lambda x: w1[k](x) * w2[o](x)) for k in range(2)]])
        al, be = mp.lu_solve(M, mp.matrix([-tpi, 0]))
        Q = lambda x: al * w1[0](x) + be * w1[1](x)
        Y[2 + l][0], Y[2 + l][1] = al, be
        for lp in range(2):
            Y[2 + l][2 + lp] = -I(lambda x: Q(x) * x * w2[lp](x)) / tpi
    return Y


@pytest.mark.parametrize("basis", ["hermite", "monomial"])
def test_y1_matches_quadrature_for_two_paths(basis):
    cfg = EnsembleConfig(2, 1, "0.9", "-1.1", "0.6", "-0.3", "0.55")
    y1 = solve_y_rows(cfg, basis=basis)
    ref = _y1_by_quadrature(cfg)
    for i in range(4):
        for j in range(4):
            assert abs(y1[i + 1, j + 1] - ref[i][j]) < mp.mpf(10) ** -20 * max(1, abs(ref[i][j]))


def test_y1_real_imaginary_split():
    y1 = solve_y_rows(unequal_config())
    for i in range(4):
        for j in range(4):
            z = y1[i + 1, j + 1]
            assert mp.re(z) == y1.real_part[i][j] and mp.im(z) == y1.imag_part[i][j]
            assert z.real == 0 or z.imag == 0


def test_y1_bases_and_precisions_agree():
    cfg = EnsembleConfig.symmetric(12)
    a = recurrence_products(solve_y_rows(cfg, 128, "hermite"))
    b = recurrence_products(solve_y_rows(cfg, 256, "monomial"))
    for x, y in zip(a, b):
        assert close(x, y, mp.mpf(10) ** -20)


def test_y1_reports_precision_shortfall():
    with pytest.raises(PrecisionError) as err:
        solve_y_rows(EnsembleConfig.symmetric(40), 64, "monomial")
    assert err.value.suggested_bits > 64


def test_recurrence_product_signs_for_symmetric_family():
    c12, c14 = recurrence_products(solve_y_rows(EnsembleConfig.symmetric(10)))
    assert c12 < 0 < c14


def test_y1_to_dict():
    d = solve_y_rows(EnsembleConfig.symmetric(4)).to_dict(10)
    assert d["n"] == 4 and len(d["Y1"]) == 4 and float(d["c12"]) < 0


# rescaled kernel


def test_balanced_gauge_symmetry():
    K = TacnodeKernel(ScalingFamily.symmetric(), 10)
    for u, v in [(0.5, -1.0), (1.5, 0.25), (-2, 2)]:
        assert close(K(u, v), K(-v, -u), mp.mpf(10) ** -25)


@settings(max_examples=10, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_gauges_agree_on_invariants(u, v):
    fam = ScalingFamily.symmetric(L1=1)
    a = lambda x, y: tacnode_rescaled_kernel(fam, 8, x, y, gauge="balanced")
    b = lambda x, y: tacnode_rescaled_kernel(fam, 8, x, y, gauge="linear")
    assert close(a(u, u), b(u, u), mp.mpf(10) ** -25)
    assert close(a(u, v) * a(v, u), b(u, v) * b(v, u), mp.mpf(10) ** -25)


def test_rescaled_diagonal_matches_unscaled_kernel():
    fam = ScalingFamily.symmetric()
    K = TacnodeKernel(fam, 6)
    u = mp.mpf("0.7")
    x = K.point(u)
    assert close(K(u, u), K.evaluator(x, x) / K.scale, mp.mpf(10) ** -30)
    assert K(u, u) > 0


def test_unknown_gauge_rejected():
    with pytest.raises(ValueError):
        TacnodeKernel(ScalingFamily.symmetric(), 4, gauge="other")
