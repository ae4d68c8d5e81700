"""Gaussian primitives: transition densities, weights, basis functions, moments.

Every object here is a polynomial times a Gaussian.  Derivatives of Gaussian
densities are kept as probabilists' Hermite polynomials with integer
coefficients, so the only rounding is in the floating point arithmetic of the
current mpmath context.

mpmath floats have an unbounded exponent, so e^{-nV} cannot underflow on the
extended precision path.  Log weights are still exposed for double precision
consumers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp


__all__ = [
    "GaussianKernel",
    "GaussianDerivative",
    "WeightSet",
    "BasisFunctions",
    "transition_density",
    "weights",
    "basis_functions",
    "gaussian_poly_moment",
    "gaussian_moments",
    "hermite_coefficients",
    "shift_polynomial",
    "gaussian_product_integral",
    "poly_gaussian_gram",
    "hermite_values",
]


@lru_cache(maxsize=None)
def hermite_coefficients(k):
    """Integer coefficients of He_k, lowest degree first."""
    if k == 0:
        return (1,)
    if k == 1:
        return (0, 1)
    prev, cur = [1], [0, 1]
    for m in range(1, k):
        # He_{m+1} = y He_m - m He_{m-1}
        nxt = [0] + cur
        for i, c in enumerate(prev):
            nxt[i] -= m * c
        prev, cur = cur, nxt
    return tuple(cur)


def hermite_values(y, kmax):
    """[He_0(y), ..., He_kmax(y)] by the three-term recurrence."""
    out = [mp.mpf(1), y]
    for m in range(1, kmax):
        out.append(y * out[m] - m * out[m - 1])
    return out[: kmax + 1]


def transition_density(N, t, x, y):
    """Brownian transition density with variance t/N."""
    t = mp.mpf(t)
    if t <= 0:
        raise ValueError("transition time must be positive")
    var = t / mp.mpf(N)
    d = mp.mpf(x) - mp.mpf(y)
    return mp.exp(-d * d / (2 * var)) / mp.sqrt(2 * mp.pi * var)


@dataclass(frozen=True)
class GaussianKernel:
    """P_N(time, x, y) as an object."""

    variance_scale: mp.mpf
    time: mp.mpf

    def __call__(self, x, y):
        return transition_density(1 / self.variance_scale, self.time, x, y)


@dataclass(frozen=True)
class GaussianDerivative:
    """k-th x-derivative of the normal density with mean ``center`` and variance ``var``.

    Equal to ``(-1)^k var^(-k/2) He_k((x-center)/sqrt(var)) * phi(x)``.
    """

    center: mp.mpf
    var: mp.mpf
    order: int

    def coefficients(self):
        """Coefficients of the polynomial factor in powers of (x - center)."""
        k = self.order
        h = hermite_coefficients(k)
        sign = -1 if k % 2 else 1
        out = []
        for m, hm in enumerate(h):
            if hm == 0:
                out.append(mp.mpf(0))
            else:
                # k + m is even whenever hm != 0
                out.append(sign * hm / self.var ** ((k + m) // 2))
        return out

    def __call__(self, x):
        x = mp.mpf(x)
        rs = mp.sqrt(self.var)
        y = (x - self.center) / rs
        he = hermite_values(y, self.order)[self.order]
        sign = -1 if self.order % 2 else 1
        phi = mp.exp(-y * y / 2) / mp.sqrt(2 * mp.pi * self.var)
        return sign * he * phi / rs**self.order


def gaussian_poly_moment(a, b, m):
    """Exact integral of x^m exp(-a x^2 + b x) over the real line."""
    return gaussian_moments(a, b, m)[m]


def gaussian_moments(a, b, mmax):
    """[M_0, ..., M_mmax] with M_m the integral of x^m exp(-a x^2 + b x)."""
    a = mp.mpf(a)
    b = mp.mpf(b)
    if a <= 0:
        raise ValueError("quadratic coefficient a must be positive")
    if mmax < 0:
        raise ValueError("moment order must be non-negative")
    M = [mp.sqrt(mp.pi / a) * mp.exp(b * b / (4 * a))]
    if mmax >= 1:
        M.append(b / (2 * a) * M[0])
    for k in range(2, mmax + 1):
        M.append(((k - 1) * M[k - 2] + b * M[k - 1]) / (2 * a))
    return M


def shift_polynomial(coeffs, d):
    """Coefficients of p(y + d) given those of p(x), lowest degree first."""
    n = len(coeffs)
    out = [mp.mpf(0)] * n
    dp = [mp.mpf(1)]
    for _ in range(n):
        dp.append(dp[-1] * d)
    for k in range(n):
        ck = coeffs[k]
        if not ck:
            continue
        for m in range(k + 1):
            out[m] += ck * mp.binomial(k, m) * dp[k - m]
    return out


def poly_gaussian_gram(P, cP, Q, cQ, A, mu, pref=1):
    """Matrix of pref * integral of P_i(x-cP) Q_j(x-cQ) exp(-A (x-mu)^2).

    P and Q are lists of coefficient lists.  Both families are re-expanded
    around mu, where the centred moments of exp(-A y^2) form a Hankel
    matrix H, and the result is P H Q^T.
    """
    Ps = [shift_polynomial(p, mu - cP) for p in P]
    Qs = [shift_polynomial(q, mu - cQ) for q in Q]
    dp = max(len(p) for p in Ps) - 1
    dq = max(len(q) for q in Qs) - 1
    M = gaussian_moments(A, 0, dp + dq)
    T = [[mp.fsum(M[r + s] * q[s] for s in range(len(q)) if q[s]) for q in Qs] for r in range(dp + 1)]
    return [
        [pref * mp.fsum(p[r] * T[r][j] for r in range(len(p)) if p[r]) for j in range(len(Qs))]
        for p in Ps
    ]


def gaussian_product_integral(p_list, c1, s1, q_list, c2, s2):
    """Matrix of integrals of (p_i(x-c1) phi_{c1,s1}) (q_j(x-c2) phi_{c2,s2}).

    phi_{c,s} is the normal density with mean c and variance s.  The two
    Gaussians are merged into one exponent -A (x-mu)^2 - C first.
    """
    A = (s1 + s2) / (2 * s1 * s2)
    mu = (c1 * s2 + c2 * s1) / (s1 + s2)
    C = (c1 - c2) ** 2 / (2 * (s1 + s2))
    pref = mp.exp(-C) / (2 * mp.pi * mp.sqrt(s1 * s2))
    return poly_gaussian_gram(p_list, c1, q_list, c2, A, mu, pref)


@dataclass(frozen=True)
class WeightSet:
    """The four Gaussian weights as quadratic exponents.

    ``w_{1,k}(x) = exp(q1 x^2 + l1[k] x)`` and ``w_{2,l}(x) = exp(q2 x^2 + l2[l] x)``.
    """

    q1: mp.mpf
    l1: tuple
    q2: mp.mpf
    l2: tuple
    n: int
    t: mp.mpf
    T: mp.mpf
    centres: tuple

    def log_w1(self, k, x):
        x = mp.mpf(x)
        return self.q1 * x * x + self.l1[k - 1] * x

    def log_w2(self, l, x):
        x = mp.mpf(x)
        return self.q2 * x * x + self.l2[l - 1] * x

    def w1(self, k, x):
        return mp.exp(self.log_w1(k, x))

    def w2(self, l, x):
        return mp.exp(self.log_w2(l, x))

    def V(self, j, x):
        """External field V_j with w_{1,j} w_{2,j} = exp(-n V_j)."""
        x = mp.mpf(x)
        return (x * x - 2 * self.centres[j - 1] * x) / (2 * self.T * self.t * (1 - self.t))

    def V_prime(self, j, x):
        return (x - self.centres[j - 1]) / (self.T * self.t * (1 - self.t))

    def W(self, x):
        """Rank-one 2x2 block [w_{1,k} w_{2,l}]."""
        return mp.matrix([[self.w1(k, x) * self.w2(l, x) for l in (1, 2)] for k in (1, 2)])

    def pair_exponent(self, k, l):
        """(A, B) with w_{1,k} w_{2,l} = exp(-A x^2 + B x)."""
        return -(self.q1 + self.q2), self.l1[k - 1] + self.l2[l - 1]


def weights(cfg):
    n, t, T = cfg.n, cfg.t, cfg.T
    q1 = -mp.mpf(n) / (2 * T * t)
    q2 = -mp.mpf(n) / (2 * T * (1 - t))
    l1 = (n * cfg.a1 / (T * t), n * cfg.a2 / (T * t))
    l2 = (n * cfg.b1 / (T * (1 - t)), n * cfg.b2 / (T * (1 - t)))
    centres = ((1 - t) * cfg.a1 + t * cfg.b1, (1 - t) * cfg.a2 + t * cfg.b2)
    return WeightSet(q1, l1, q2, l2, n, t, T, centres)


class BasisFunctions:
    """f_i and g_j of the biorthogonal ensemble, indices starting at 1.

    f_i (i <= n1) is the (i-1)-th x-derivative of P_N(t, a1, x); the next n2
    use a2.  g_j likewise with P_N(1-t, x, b_l).
    """

    def __init__(self, cfg):
        self.cfg = cfg
        N = mp.mpf(cfg.n) / cfg.T
        self.sf = cfg.t / N
        self.sg = (1 - cfg.t) / N
        self.groups = ((cfg.n1, cfg.a1, cfg.b1), (cfg.n2, cfg.a2, cfg.b2))
        self.f_terms = [GaussianDerivative(a, self.sf, k) for (nk, a, _) in self.groups for k in range(nk)]
        self.g_terms = [GaussianDerivative(b, self.sg, k) for (nk, _, b) in self.groups for k in range(nk)]

    def f(self, i, x):
        return self.f_terms[i - 1](x)

    def g(self, j, x):
        return self.g_terms[j - 1](x)

    def _vector(self, x, s, which):
        x = mp.mpf(x)
        rs = mp.sqrt(s)
        norm = 1 / mp.sqrt(2 * mp.pi * s)
        out = []
        for nk, a, b in self.groups:
            c = a if which == "f" else b
            y = (x - c) / rs
            phi = mp.exp(-y * y / 2) * norm
            he = hermite_values(y, max(nk - 1, 1))
            scale = phi
            for k in range(nk):
                out.append(he[k] * scale)
                scale = -scale / rs
        return out

    def f_vector(self, x):
        return self._vector(x, self.sf, "f")

    def g_vector(self, x):
        return self._vector(x, self.sg, "g")


def basis_functions(cfg):
    return BasisFunctions(cfg)


