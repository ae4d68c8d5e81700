"""Finite-n biorthogonal ensemble: Gram matrix, kernel K_n and the residue matrix Y_1.

Kernel orientation.  With A_ij = int f_i g_j, the kernel that reproduces and
has trace n is

    K_n(x, y) = sum_{i,j} f_i(x) (A^{-1})_{ji} g_j(y) = g(y) . (A^{-1} f(x)),

that is the double sum taken with A^{-T}.  The untransposed sum has the wrong
trace as soon as A is not symmetric (n >= 4 for the balanced config).

Gauge.  K_n is only fixed up to K(x,y) -> h(x)/h(y) K(x,y).  For the
balanced configuration K_n(x,y) = K_n(-x,-y) holds exactly, but
K_n(x,y) != K_n(y,x), so reflection checks of the form (x,y) -> (-y,-x)
are only meaningful for gauge invariant combinations such as
K_n(x,y) K_n(y,x) and the diagonal.

Y_1.  Row j of the 4x4 RH solution is a pair of polynomials (P_j1, P_j2) and
the Cauchy transforms of Q_j = P_j1 w_11 + P_j2 w_12 against w_21, w_22.
The degree and moment bookkeeping (see :func:`solve_y_rows`) turns every row
into an n x n real linear system.  All four rows share the same matrix, so
one pivoted LU factorisation serves them all.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath as mp

from ._mp import DEFAULT_PREC, PrecisionError, PrecisionWarning
from .config import EnsembleConfig, scaled_config, tacnode_parameters
from .gaussians import basis_functions, hermite_coefficients, poly_gaussian_gram, weights

__all__ = [
    "GramMatrix",
    "KernelEvaluator",
    "Y1Matrix",
    "TacnodeKernel",
    "build_gram",
    "make_kernel_evaluator",
    "kernel",
    "tacnode_rescaled_kernel",
    "solve_y_rows",
    "recurrence_products",
    "auto_precision",
    "gauss_hermite",
    "kernel_trace",
    "reproducing_integral",
]


def auto_precision(n):
    """Working precision used when the caller does not pick one."""
    if n < 30:
        return DEFAULT_PREC
    return 256 if n <= 60 else 512


class _LU:
    """Pivoted LU factorisation held for repeated solves."""

    def __init__(self, M):
        try:
            self.lu, self.p = mp.mp.LU_decomp(mp.matrix(M))
        except ZeroDivisionError as exc:
            raise PrecisionError("matrix is numerically singular") from exc
        self.n = self.lu.rows

    def solve(self, b):
        y = mp.mp.L_solve(self.lu, mp.matrix(b), self.p)
        return mp.mp.U_solve(self.lu, y)

    def inverse(self):
        cols = [self.solve([mp.mpf(1) if i == j else mp.mpf(0) for i in range(self.n)]) for j in range(self.n)]
        return mp.matrix([[cols[j][i] for j in range(self.n)] for i in range(self.n)])


def _equilibrated_condition(M, lu=None):
    """1-norm condition number after scaling rows and columns to unit max.

    Row and column scaling does not change the solution accuracy of a
    pivoted solve in any essential way but removes the trivial scale spread
    between Hermite orders.  Returns a float log2 of the estimate.
    """
    n = M.rows
    r = [max(abs(M[i, j]) for j in range(n)) for i in range(n)]
    S = mp.matrix(n, n)
    for i in range(n):
        for j in range(n):
            S[i, j] = M[i, j] / r[i]
    c = [max(abs(S[i, j]) for i in range(n)) for j in range(n)]
    for i in range(n):
        for j in range(n):
            S[i, j] = S[i, j] / c[j]
    inv = _LU(S).inverse()
    k = mp.mnorm(S, 1) * mp.mnorm(inv, 1)
    return float(mp.log(k, 2))


@dataclass(frozen=True)
class GramMatrix:
    entries: mp.matrix
    precision_bits: int
    condition_estimate: float  # log2 of the equilibrated 1-norm condition number

    @property
    def n(self):
        return self.entries.rows


def build_gram(cfg, precision_bits=DEFAULT_PREC):
    """A_ij = int f_i g_j from closed-form Gaussian moments."""
    if precision_bits < 64:
        raise ValueError("precision_bits must be at least 64")
    with mp.workprec(precision_bits):
        B = basis_functions(cfg)
        n = cfg.n
        A = mp.matrix(n, n)
        offs = (0, cfg.n1)
        for k, (nk, a, _) in enumerate(B.groups):
            P = [term.coefficients() for term in B.f_terms[offs[k] : offs[k] + nk]]
            for l, (nl, _, b) in enumerate(B.groups):
                Q = [term.coefficients() for term in B.g_terms[offs[l] : offs[l] + nl]]
                s1, s2 = B.sf, B.sg
                Amu = (s1 + s2) / (2 * s1 * s2)
                mu = (a * s2 + b * s1) / (s1 + s2)
                pref = mp.exp(-((a - b) ** 2) / (2 * (s1 + s2))) / (2 * mp.pi * mp.sqrt(s1 * s2))
                blk = poly_gaussian_gram(P, a, Q, b, Amu, mu, pref)
                for i in range(nk):
                    for j in range(nl):
                        A[offs[k] + i, offs[l] + j] = blk[i][j]
        cond = _equilibrated_condition(A)
    if cond > precision_bits / 2:
        warnings.warn(
            f"Gram matrix condition ~2^{cond:.0f} exceeds 2^{precision_bits // 2} at {precision_bits} bits",
            PrecisionWarning,
            stacklevel=2,
        )
    return GramMatrix(A, precision_bits, cond)


class KernelEvaluator:
    """K_n(x, y) through a stored LU factorisation of A.

    Solves A z = f(x) once per distinct x (cached) and returns g(y) . z.
    Evaluation is read-only apart from the cache, so sharing an evaluator
    between threads only risks duplicate work.
    """

    def __init__(self, cfg, gram=None, precision_bits=DEFAULT_PREC):
        self.config = cfg
        self.precision_bits = precision_bits
        self.gram = gram or build_gram(cfg, precision_bits)
        with mp.workprec(precision_bits):
            self.basis = basis_functions(cfg)
            self.factorization = _LU(self.gram.entries)
        self._z = {}

    def _solve_x(self, x):
        key = mp.mpf(x)
        z = self._z.get(key)
        if z is None:
            z = self.factorization.solve(self.basis.f_vector(key))
            self._z[key] = z
        return z

    def __call__(self, x, y):
        with mp.workprec(self.precision_bits):
            z = self._solve_x(x)
            g = self.basis.g_vector(y)
            return mp.fsum(g[j] * z[j] for j in range(len(g)))

    def transposed_coefficients(self):
        """B = A^{-T}, so that K = sum f_i B_ij g_j."""
        with mp.workprec(self.precision_bits):
            return self.factorization.inverse().T


def make_kernel_evaluator(cfg, precision_bits=DEFAULT_PREC):
    return KernelEvaluator(cfg, precision_bits=precision_bits)


def kernel(ev, x, y):
    return ev(x, y)


@lru_cache(maxsize=None)
def _gh_rule(m, prec):
    with mp.workprec(prec):
        return mp.gauss_quadrature(m, "hermite")


def gauss_hermite(m, prec=DEFAULT_PREC):
    """Nodes and weights for the weight exp(-y^2), m nodes."""
    return _gh_rule(int(m), int(prec))


def _block_quadrature(fun, centre, A, m, prec):
    # int fun(x) dx with fun(x) exp(A (x-centre)^2) polynomial
    X, W = gauss_hermite(m, prec)
    ra = mp.sqrt(A)
    tot = []
    for y, w in zip(X, W):
        tot.append(w * mp.exp(y * y) * fun(centre + y / ra))
    return mp.fsum(tot) / ra


def _pair_centre(ev, k, l):
    B = ev.basis
    s1, s2 = B.sf, B.sg
    a = B.groups[k][1]
    b = B.groups[l][2]
    return (a * s2 + b * s1) / (s1 + s2), (s1 + s2) / (2 * s1 * s2)


def kernel_trace(ev, nodes=None):
    """int K_n(x, x) dx by Gauss-Hermite quadrature, one rule per group pair.

    Each group pair contributes polynomial x Gaussian with its own centre,
    so the rule with 4n+40 nodes is exact up to rounding.
    """
    cfg = ev.config
    m = nodes or 4 * cfg.n + 40
    with mp.workprec(ev.precision_bits):
        Bt = ev.transposed_coefficients()
        offs = (0, cfg.n1)
        sizes = (cfg.n1, cfg.n2)
        total = []
        for k in range(2):
            for l in range(2):
                centre, A = _pair_centre(ev, k, l)

                def block(x, k=k, l=l):
                    f = ev.basis.f_vector(x)
                    g = ev.basis.g_vector(x)
                    return mp.fsum(
                        f[offs[k] + i] * Bt[offs[k] + i, offs[l] + j] * g[offs[l] + j]
                        for i in range(sizes[k])
                        for j in range(sizes[l])
                    )

                total.append(_block_quadrature(block, centre, A, m, ev.precision_bits))
        return mp.fsum(total)


def reproducing_integral(ev, x, y, nodes=None):
    """int K_n(x, z) K_n(z, y) dz by blockwise Gauss-Hermite quadrature."""
    cfg = ev.config
    m = nodes or 4 * cfg.n + 40
    with mp.workprec(ev.precision_bits):
        zx = ev._solve_x(x)  # K(x, z) = g(z) . zx
        Bt = ev.transposed_coefficients()
        gy = ev.basis.g_vector(y)
        n = cfg.n
        wy = [mp.fsum(Bt[i, j] * gy[j] for j in range(n)) for i in range(n)]  # K(z, y) = f(z) . wy
        offs = (0, cfg.n1)
        sizes = (cfg.n1, cfg.n2)
        total = []
        for k in range(2):  # f group in K(z, y)
            for l in range(2):  # g group in K(x, z)
                centre, A = _pair_centre(ev, k, l)

                def block(z, k=k, l=l):
                    f = ev.basis.f_vector(z)
                    g = ev.basis.g_vector(z)
                    left = mp.fsum(g[offs[l] + j] * zx[offs[l] + j] for j in range(sizes[l]))
                    right = mp.fsum(f[offs[k] + i] * wy[offs[k] + i] for i in range(sizes[k]))
                    return left * right

                total.append(_block_quadrature(block, centre, A, m, ev.precision_bits))
        return mp.fsum(total)


class TacnodeKernel:
    """Rescaled kernel (1/(c n^{2/3})) K_n(x_t + u/(c n^{2/3}), x_t + v/(c n^{2/3})) in a gauge.

    ``x_t`` is the point where the limiting supports touch.  The kernel is
    only defined up to K(x, y) -> h(x) K(x, y) / h(y); correlation functions
    do not see h.  Two choices are offered:

    ``gauge="linear"``
        h(x)/h(y) = exp(c2 n^{1/3} (u - v)), the gauge used in the limit
        theorem.
    ``gauge="balanced"`` (default)
        h(x) = exp(n ((x - a1*)^2 / t - (x - b1*)^2 / (1 - t)) / 4), i.e. the
        square root of the ratio of the two Gaussian factors of group 1.  Its
        linear part at the tacnode is the linear gauge; the quadratic part
        removes an exp(O(n^{-1/3}) (u^2 - v^2)) asymmetry, so the symmetric
        family gives an exactly (u, v) -> (-v, -u) symmetric kernel at every n.
    """

    def __init__(self, fam, n, precision_bits=None, gauge="balanced"):
        if gauge not in ("balanced", "linear"):
            raise ValueError("gauge must be 'balanced' or 'linear'")
        self.family = fam
        self.n = int(n)
        self.gauge_kind = gauge
        self.precision_bits = precision_bits or auto_precision(self.n)
        self.config = scaled_config(fam, self.n)
        with mp.workprec(self.precision_bits):
            self.params = tacnode_parameters(fam, prec=self.precision_bits)
            self.x_crit = fam.x_tangency
            self.scale = self.params.c * mp.cbrt(self.n) ** 2
            self.gauge = self.params.c2 * mp.cbrt(self.n)
        self.evaluator = KernelEvaluator(self.config, precision_bits=self.precision_bits)

    def point(self, u):
        with mp.workprec(self.precision_bits):
            return self.x_crit + mp.mpf(u) / self.scale

    def log_gauge(self, x):
        """log h(x) of the balanced gauge."""
        fam, t = self.family, self.config.t
        return self.n * ((x - fam.a1_star) ** 2 / t - (x - fam.b1_star) ** 2 / (1 - t)) / 4

    def __call__(self, u, v):
        with mp.workprec(self.precision_bits):
            u, v = mp.mpf(u), mp.mpf(v)
            x, y = self.point(u), self.point(v)
            k = self.evaluator(x, y)
            if self.gauge_kind == "linear":
                g = self.gauge * (u - v)
            else:
                g = self.log_gauge(x) - self.log_gauge(y)
            return mp.exp(g) / self.scale * k

    def grid(self, us, vs):
        return [[self(u, v) for v in vs] for u in us]


@lru_cache(maxsize=32)
def _tacnode_kernel(fam, n, bits, gauge):
    return TacnodeKernel(fam, n, bits, gauge)


def tacnode_rescaled_kernel(fam, n, u, v, precision_bits=None, gauge="balanced"):
    bits = precision_bits or auto_precision(n)
    return _tacnode_kernel(fam, int(n), int(bits), gauge)(u, v)


# ---------------------------------------------------------------------------
# Y_1 from multiple Hermite polynomials of mixed type


@dataclass(frozen=True)
class _Basis:
    """Polynomial basis phi_m(x) = He_m((x-c)/h) or x^m."""

    kind: str
    c: mp.mpf
    h: mp.mpf

    def coeffs(self, m):
        # coefficients in powers of (x - c)
        if self.kind == "monomial":
            return [mp.mpf(0)] * m + [mp.mpf(1)]
        return [hc / self.h**j if hc else mp.mpf(0) for j, hc in enumerate(hermite_coefficients(m))]

    def top(self, m):
        """Coefficients of x^m and x^(m-1)."""
        if self.kind == "monomial":
            return mp.mpf(1), mp.mpf(0)
        lead = self.h ** (-m)
        return lead, -m * self.c * lead

    @property
    def centre(self):
        return self.c if self.kind == "hermite" else mp.mpf(0)


@dataclass(frozen=True)
class Y1Matrix:
    """Residue matrix Y_1 with Y(z) diag(z^-n1, z^-n2, z^n1, z^n2) = I + Y_1/z + ...

    Entries are stored as mpc.  ``real_part``/``imag_part`` expose the exact
    decomposition: the real linear algebra only ever produces a purely real
    or a purely imaginary number for each entry.
    """

    entries: tuple  # 4 x 4 nested tuples of mpc
    n: int
    n1: int
    n2: int
    precision_bits: int
    basis: str
    condition_estimate: float
    real_part: tuple = field(repr=False)
    imag_part: tuple = field(repr=False)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i - 1][j - 1]

    @property
    def c12(self):
        return recurrence_products(self)[0]

    @property
    def c14(self):
        return recurrence_products(self)[1]

    def to_dict(self, digits=30):
        c12, c14 = recurrence_products(self)
        return {
            "n": self.n,
            "n1": self.n1,
            "n2": self.n2,
            "Y1": [[[mp.nstr(mp.re(z), digits), mp.nstr(mp.im(z), digits)] for z in row] for row in self.entries],
            "c12": mp.nstr(c12, digits),
            "c14": mp.nstr(c14, digits),
            "precision_bits": self.precision_bits,
        }


def _y_system(cfg, kind):
    """Moment matrices G[k][l][m][m'] = int phi_{k,m} psi_{l,m'} w_1k w_2l."""
    ws = weights(cfg)
    n, t, T = cfg.n, cfg.t, cfg.T
    h = mp.sqrt(T * t * (1 - t) / n)
    sizes = (cfg.n1, cfg.n2)
    slot = [_Basis(kind, ws.centres[k], h) for k in range(2)]
    test = [_Basis(kind, ws.centres[l], h) for l in range(2)]
    G = [[None, None], [None, None]]
    for k in range(2):
        P = [slot[k].coeffs(m) for m in range(sizes[k] + 1)]
        for l in range(2):
            Q = [test[l].coeffs(m) for m in range(sizes[l] + 1)]
            Aq, Bl = ws.pair_exponent(k + 1, l + 1)
            mu = Bl / (2 * Aq)
            pref = mp.exp(Bl * Bl / (4 * Aq))
            G[k][l] = poly_gaussian_gram(P, slot[k].centre, Q, test[l].centre, Aq, mu, pref)
    return G, slot, test, sizes


def solve_y_rows(cfg, precision_bits=DEFAULT_PREC, basis="hermite", min_bits_left=40):
    """Y_1 from the four rows of the RH problem for multiple Hermite polynomials.

    Row j (j = 1, 2): P_jj monic of degree n_j, the other slot of degree
    < n_k, and Q_j x^m w_2l integrates to 0 for m < n_l.
    Row 2+l: both slots of degree < n_k, vanishing moments against w_2l' for
    m < n_l' (l' != l) and for m < n_l - 1 against w_2l, normalised by
    int Q x^(n_l - 1) w_2l = -2 pi i.

    All four share the matrix S[(l,m'), (k,m)] = G[k][l][m][m'].  If the
    equilibrated condition number leaves fewer than ``min_bits_left`` bits,
    a :class:`PrecisionError` carrying a suggested precision is raised.
    """
    if basis not in ("hermite", "monomial"):
        raise ValueError("basis must be 'hermite' or 'monomial'")
    if cfg.n1 < 1 or cfg.n2 < 1:
        raise ValueError("both groups need at least one path")
    with mp.workprec(precision_bits):
        G, slot, test, sizes = _y_system(cfg, basis)
        n = cfg.n
        offs = (0, sizes[0])
        S = mp.matrix(n, n)
        for l in range(2):
            for mm in range(sizes[l]):
                for k in range(2):
                    for m in range(sizes[k]):
                        S[offs[l] + mm, offs[k] + m] = G[k][l][m][mm]
        cond = _equilibrated_condition(S)
        if cond > precision_bits - min_bits_left:
            need = int(64 * math.ceil((cond + min_bits_left + 24) / 64))
            raise PrecisionError(
                f"Y1 moment system has condition ~2^{cond:.0f}; {precision_bits} bits are not enough",
                suggested_bits=need,
            )
        lu = _LU(S)

        def moments(xs, extra):
            # int Q psi_{l,m'} w_2l for m' = 0..n_l, Q built from xs (+ monic part)
            out = []
            for l in range(2):
                row = []
                for mm in range(sizes[l] + 1):
                    v = mp.fsum(G[k][l][m][mm] * xs[offs[k] + m] for k in range(2) for m in range(sizes[k]))
                    if extra is not None:
                        k0, scale = extra
                        v += scale * G[k0][l][sizes[k0]][mm]
                    row.append(v)
                out.append(row)
            return out

        def top_coeff(xs, k, extra):
            # coefficient of x^(n_k - 1) in slot k
            lead, _ = slot[k].top(sizes[k] - 1)
            v = xs[offs[k] + sizes[k] - 1] * lead
            if extra is not None and extra[0] == k:
                lead_n, sub_n = slot[k].top(sizes[k])
                v += extra[1] * sub_n
            return v

        twopii = 2 * mp.pi * mp.mpc(0, 1)
        Y = [[None] * 4 for _ in range(4)]
        re = [[mp.mpf(0)] * 4 for _ in range(4)]
        im = [[mp.mpf(0)] * 4 for _ in range(4)]

        # rows 1 and 2
        for j in range(2):
            lead_n, _ = slot[j].top(sizes[j])
            scale = 1 / lead_n
            rhs = [-scale * G[j][l][sizes[j]][mm] for l in range(2) for mm in range(sizes[l])]
            xs = lu.solve(rhs)
            mom = moments(xs, (j, scale))
            for k in range(2):
                v = top_coeff(xs, k, (j, scale))
                re[j][k] = v
                Y[j][k] = mp.mpc(v)
            for l in range(2):
                lead, _ = test[l].top(sizes[l])
                mu_n = mom[l][sizes[l]] / lead
                # -mu/(2 pi i) = i mu/(2 pi)
                im[j][2 + l] = mu_n / (2 * mp.pi)
                Y[j][2 + l] = -mu_n / twopii

        # rows 3 and 4: solve with real normalisation 1, then scale by -2 pi i
        for l in range(2):
            lead_nm1, _ = test[l].top(sizes[l] - 1)
            rhs = [mp.mpf(0)] * n
            rhs[offs[l] + sizes[l] - 1] = lead_nm1
            xs = lu.solve(rhs)
            mom = moments(xs, None)
            for k in range(2):
                v = top_coeff(xs, k, None)
                # times -2 pi i
                im[2 + l][k] = -2 * mp.pi * v
                Y[2 + l][k] = -twopii * v
            for lp in range(2):
                lead, sub = test[lp].top(sizes[lp])
                if lp == l:
                    # lower moment int Q x^(n_l - 1) w = 1 in the real normalisation
                    mu_n = (mom[lp][sizes[lp]] - sub) / lead
                else:
                    mu_n = mom[lp][sizes[lp]] / lead
                # entry = -(-2 pi i) mu / (2 pi i) = mu
                re[2 + l][2 + lp] = mu_n
                Y[2 + l][2 + lp] = mp.mpc(mu_n)

    return Y1Matrix(
        tuple(tuple(r) for r in Y),
        cfg.n,
        cfg.n1,
        cfg.n2,
        precision_bits,
        basis,
        cond,
        tuple(tuple(r) for r in re),
        tuple(tuple(r) for r in im),
    )


def recurrence_products(y1):
    """c12 = (Y1)_12 (Y1)_21 and c14 = (Y1)_14 (Y1)_41.

    Both products are real.  (Y1)_14 and (Y1)_41 are purely imaginary, and
    their product is taken as is; for the critical symmetric family it comes
    out positive, matching the positive leading constant of the asymptotics.
    """
    c12 = y1.real_part[0][1] * y1.real_part[1][0]
    # (i x)(i y) = -x y
    c14 = -y1.imag_part[0][3] * y1.imag_part[3][0]
    return c12, c14
