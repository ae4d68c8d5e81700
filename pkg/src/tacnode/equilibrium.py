"""Modified equilibrium measures, xi- and lambda-functions and local maps.

Coordinates are shifted so that the tacnode (where the two limiting supports
touch) is the origin.  Group 1 then has the signed measure mu_1 on [0, beta]
and group 2 has mu_2 on [-alpha, 0].  With tau = T t (1-t):

    dmu_1 = (x - delta_1) / (2 pi tau) sqrt((beta - x)/x) dx
    dmu_2 = (delta_2 - x) / (2 pi tau) sqrt((x + alpha)/(-x)) dx

Branches.  ``xi_1`` and ``lambda_1`` are analytic off [0, inf); ``xi_2`` and
``lambda_2`` off (-inf, 0].  Off the real axis the closed forms use principal
square roots and, for lambda_1, a logarithm with arg in (0, 2 pi); for
lambda_2 the principal logarithm.  On a cut the caller must pass
``side='+'`` (limit from the upper half plane) or ``side='-'``; otherwise
:class:`BranchError` is raised.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import mpmath as mp

from ._mp import DEFAULT_PREC, fmt
from .config import scaled_config

__all__ = [
    "BranchError",
    "EquilibriumData",
    "LocalMaps",
    "modified_measure",
    "xi",
    "lambda_",
    "lambda_star",
    "xi_star",
    "ell",
    "ell_closed_form",
    "density",
    "local_maps",
    "density_csv",
    "lambda_csv",
]


class BranchError(ValueError):
    """A multivalued function was evaluated on its cut without a side."""


def _is_real(z):
    return not isinstance(z, mp.mpc) or z.imag == 0


def _check_side(side):
    if side not in ("+", "-"):
        raise BranchError("point lies on a branch cut; pass side='+' or side='-'")
    return 1 if side == "+" else -1


@dataclass(frozen=True)
class EquilibriumData:
    """Endpoints, zeros and masses of the two modified equilibrium measures.

    ``beta``/``delta1`` belong to group 1, ``alpha``/``delta2`` to group 2,
    all in coordinates centred at ``shift``.  Starred copies are those of the
    limiting geometry (where delta_1 = delta_2 = 0).
    """

    beta: mp.mpf
    delta1: mp.mpf
    alpha: mp.mpf
    delta2: mp.mpf
    p1: mp.mpf
    p2: mp.mpf
    t: mp.mpf
    tau: mp.mpf
    beta_star: mp.mpf = None
    alpha_star: mp.mpf = None
    p1_star: mp.mpf = None
    p2_star: mp.mpf = None
    shift: mp.mpf = 0
    centres: tuple = None

    @classmethod
    def from_supports(cls, alpha1, beta1, alpha2, beta2, p1, p2, t, T=1, **extra):
        """Build from the semicircle supports [alpha1, beta1], [alpha2, beta2]."""
        alpha1, beta1, alpha2, beta2, p1, p2, t, T = (
            mp.mpf(v) for v in (alpha1, beta1, alpha2, beta2, p1, p2, t, T))
        if not beta1 > 0:
            raise ValueError("need beta_1 > 0")
        if not alpha2 < 0:
            raise ValueError("need alpha_2 < 0")
        R1 = mp.sqrt(alpha1**2 + beta1**2 - alpha1 * beta1)
        R2 = mp.sqrt(alpha2**2 + beta2**2 - alpha2 * beta2)
        beta = (alpha1 + beta1 + 2 * R1) / 3
        delta1 = (alpha1 + beta1 - R1) / 3
        alpha = (-alpha2 - beta2 + 2 * R2) / 3
        delta2 = (alpha2 + beta2 + R2) / 3
        tau = T * t * (1 - t)
        centres = ((alpha1 + beta1) / 2, (alpha2 + beta2) / 2)
        return cls(beta, delta1, alpha, delta2, p1, p2, t, tau, centres=centres, **extra)

    @classmethod
    def from_config(cls, cfg, shift=0, p1=None, p2=None, star=None):
        """Equilibrium data of ``cfg`` with the origin moved to ``shift``.

        ``p1``/``p2`` override the group masses n_j/n; the supports are then
        semicircles of those masses.  ``star`` is an optional (beta*, alpha*,
        p1*, p2*) tuple recorded for starred evaluations.
        """
        shift = mp.mpf(shift)
        p1 = mp.mpf(cfg.n1) / cfg.n if p1 is None else mp.mpf(p1)
        p2 = mp.mpf(cfg.n2) / cfg.n if p2 is None else mp.mpf(p2)
        t, T = cfg.t, cfg.T
        tau = T * t * (1 - t)
        sup = []
        for pj, (_, aj, bj) in zip((p1, p2), (cfg.group(1), cfg.group(2))):
            c = (1 - t) * aj + t * bj - shift
            h = 2 * mp.sqrt(pj * tau)
            sup.append((c - h, c + h))
        extra = {}
        if star is not None:
            extra = dict(zip(("beta_star", "alpha_star", "p1_star", "p2_star"), star))
        return cls.from_supports(sup[0][0], sup[0][1], sup[1][0], sup[1][1], p1, p2, t, T,
                                 shift=shift, **extra)

    def V(self, k, z):
        """External field V_k in shifted coordinates."""
        return (z * z - 2 * self.centres[k - 1] * z) / (2 * self.tau)

    def params(self, k, starred=False):
        """(endpoint, zero, mass) of measure k, optionally the starred triple."""
        if starred:
            if self.beta_star is None:
                raise ValueError("no starred data attached")
            return (self.beta_star, mp.mpf(0), self.p1_star) if k == 1 else (
                self.alpha_star, mp.mpf(0), self.p2_star)
        return (self.beta, self.delta1, self.p1) if k == 1 else (self.alpha, self.delta2, self.p2)


def modified_measure(cfg, j, shift=0, p1=None, p2=None, prec=DEFAULT_PREC):
    """(endpoint, zero, density) of the modified measure mu_j.

    j=1 gives (beta, delta_1, x -> dmu_1/dx) on [0, beta]; j=2 gives
    (alpha, delta_2, x -> dmu_2/dx) on [-alpha, 0].
    """
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    with mp.workprec(prec):
        eq = EquilibriumData.from_config(cfg, shift, p1, p2)
    return (eq.beta, eq.delta1, _density(eq, 1)) if j == 1 else (eq.alpha, eq.delta2, _density(eq, 2))


def _density(eq, k):
    tau = eq.tau
    if k == 1:
        beta, d = eq.beta, eq.delta1

        def mu1(x):
            x = mp.mpf(x)
            if not 0 < x < beta:
                return mp.mpf(0)
            return (x - d) / (2 * mp.pi * tau) * mp.sqrt((beta - x) / x)

        return mu1
    alpha, d = eq.alpha, eq.delta2

    def mu2(x):
        x = mp.mpf(x)
        if not -alpha < x < 0:
            return mp.mpf(0)
        return (d - x) / (2 * mp.pi * tau) * mp.sqrt((x + alpha) / (-x))

    return mu2


def density(eq, k):
    """Density of mu_k as a callable."""
    return _density(eq, k)


# square roots ((z - beta)/z)^{1/2} and ((z + alpha)/z)^{1/2}, positive at +inf


def _root1(z, beta, side):
    if _is_real(z):
        x = mp.re(z)
        if x == 0:
            raise ZeroDivisionError("xi_1 is singular at 0")
        if 0 < x < beta:
            return _check_side(side) * mp.mpc(0, 1) * mp.sqrt((beta - x) / x)
        return mp.mpc(mp.sqrt((x - beta) / x))
    return mp.sqrt((z - beta) / z)


def _root2(z, alpha, side):
    if _is_real(z):
        x = mp.re(z)
        if x == 0:
            raise ZeroDivisionError("xi_2 is singular at 0")
        if -alpha < x < 0:
            # the upper side of (-alpha, 0) sees arg((z + alpha)/z) -> -pi
            return -_check_side(side) * mp.mpc(0, 1) * mp.sqrt((x + alpha) / (-x))
        return mp.mpc(mp.sqrt((x + alpha) / x))
    return mp.sqrt((z + alpha) / z)


def _xi(k, beta_or_alpha, delta, tau, z, side):
    z = mp.mpmathify(z)
    if k == 1:
        return (z - delta) / (2 * tau) * _root1(z, beta_or_alpha, side)
    return (z - delta) / (2 * tau) * _root2(z, beta_or_alpha, side)


def xi(eq, k, z, side=None):
    """xi_k(z); on the cut of xi_k pass ``side``."""
    e, d, _ = eq.params(k)
    return _xi(k, e, d, eq.tau, z, side)


def xi_star(eq, k, z, side=None):
    e, _, _ = eq.params(k, starred=True)
    return _xi(k, e, 0, eq.tau, z, side)


def _log_0_2pi(w, side):
    """log with arg in (0, 2 pi); on the positive axis ``side`` picks the sheet."""
    if _is_real(w) and mp.re(w) > 0:
        s = _check_side(side)
        return mp.mpc(mp.log(mp.re(w)), 0 if s > 0 else 2 * mp.pi)
    a = mp.arg(w)
    if a <= 0:
        a += 2 * mp.pi
    return mp.mpc(mp.log(abs(w)), a)


def _log_principal(w, side):
    """Principal log; on the negative axis ``side`` picks arg = +-pi."""
    if _is_real(w) and mp.re(w) < 0:
        s = _check_side(side)
        return mp.mpc(mp.log(-mp.re(w)), s * mp.pi)
    return mp.log(w)


def _lambda(k, e, delta, p, tau, z, side):
    z = mp.mpmathify(z)
    if z == 0:
        return mp.mpc(0)
    if k == 1:
        beta = e
        R = z * _root1(z, beta, side)
        w = z - beta / 2 + R
        head = (2 * z - beta - 4 * delta) / (8 * tau) * R
        return head - p * (_log_0_2pi(w, side) - mp.mpc(mp.log(beta / 2), mp.pi))
    alpha = e
    R = z * _root2(z, alpha, side)
    w = z + alpha / 2 + R
    head = (2 * z + alpha - 4 * delta) / (8 * tau) * R
    return head - p * (_log_principal(w, side) - mp.log(alpha / 2))


def lambda_(eq, k, z, side=None):
    """lambda_k(z) = integral of xi_k from 0 to z, closed form.

    ``side`` is required on the cut: [0, inf) for k=1, (-inf, 0] for k=2.
    """
    e, d, p = eq.params(k)
    _guard(k, z, side)
    return _lambda(k, e, d, p, eq.tau, z, side)


def lambda_star(eq, k, z, side=None):
    """The limiting lambda_k^* (beta*, 0, p1*) or (alpha*, 0, p2*)."""
    e, d, p = eq.params(k, starred=True)
    _guard(k, z, side)
    return _lambda(k, e, d, p, eq.tau, z, side)


def _guard(k, z, side):
    z = mp.mpmathify(z)
    if _is_real(z) and z != 0:
        on_cut = mp.re(z) > 0 if k == 1 else mp.re(z) < 0
        if on_cut:
            _check_side(side)


def ell(eq, k, R0=64, levels=8):
    """The constant l_k in lambda_k = V_k/2 - p_k log z + l_k + O(1/z).

    Evaluated along z = -R (k=1, with arg z = pi) or z = +R (k=2) and
    extrapolated with Richardson's scheme in powers of 1/R.
    """
    e, d, p = eq.params(k)
    vals = []
    for j in range(levels):
        R = mp.mpf(R0) * 2**j
        if k == 1:
            z = -R
            logz = mp.mpc(mp.log(R), mp.pi)
        else:
            z = R
            logz = mp.log(R)
        lam = _lambda(k, e, d, p, eq.tau, z, None)
        vals.append(lam - eq.V(k, z) / 2 + p * logz)
    T = [vals]
    for m in range(1, levels):
        prev = T[-1]
        T.append([(2**m * prev[i + 1] - prev[i]) / (2**m - 1) for i in range(len(prev) - 1)])
    return T[-1][0]


def ell_closed_form(eq, k):
    """Expansion constant of lambda_k at infinity, from the closed forms."""
    tau = eq.tau
    if k == 1:
        b, d, p = eq.beta, eq.delta1, eq.p1
        return mp.mpc((b * b + 8 * b * d) / (32 * tau) + p * mp.log(b / 4), mp.pi * p)
    a, d, p = eq.alpha, eq.delta2, eq.p2
    return mp.mpc((a * a - 8 * a * d) / (32 * tau) + p * mp.log(a / 4))


# local maps near the tacnode


class LocalMaps:
    """Conformal map f and the local parameters r_2(z), s_1(z), s_2(z).

    Built for a critical family at finite n, with the group masses pinned to
    p1*, p2* so that the n-dependence enters only through the endpoints.
    The maps are analytic in the disk |z| < ``radius`` = min(alpha*, beta*)/2.
    On the real axis every multivalued factor is taken from the upper side
    and the combinations are single valued.
    """

    def __init__(self, fam, n, prec=DEFAULT_PREC):
        self.fam = fam
        self.n = n
        self.prec = prec
        with mp.workprec(prec):
            cfg = scaled_config(fam, n)
            self.cfg = cfg
            self.shift = fam.x_tangency
            star = (fam.beta_star, fam.alpha_star, fam.p1_star, fam.p2_star)
            self.eq = EquilibriumData.from_config(cfg, self.shift, fam.p1_star, fam.p2_star, star)
            self.radius = min(fam.alpha_star, fam.beta_star) / 2
            self.r1 = fam.p1_star ** mp.mpf(0.25)

    def _point(self, z):
        z = mp.mpmathify(z)
        if abs(z) >= self.radius:
            raise ValueError(f"|z| must be below the disk radius {fmt(self.radius, 8)}")
        return z

    def _H1(self, z):
        """lambda_1*(z) / (-z)^{3/2}, analytic near 0."""
        eq = self.eq
        if z == 0:
            return mp.mpc(mp.sqrt(eq.beta_star) / (3 * eq.tau))
        lam = lambda_star(eq, 1, z, "+")
        if _is_real(z) and mp.re(z) > 0:
            x = mp.re(z)
            return lam / (mp.mpc(0, 1) * x**1.5)
        return lam / mp.power(-z, 1.5)

    def _H2(self, z):
        """lambda_2*(z) / z^{3/2}, analytic near 0."""
        eq = self.eq
        if z == 0:
            return mp.mpc(mp.sqrt(eq.alpha_star) / (3 * eq.tau))
        lam = lambda_star(eq, 2, z, "+")
        if _is_real(z) and mp.re(z) < 0:
            x = -mp.re(z)
            return lam / (mp.mpc(0, -1) * x**1.5)
        return lam / mp.power(z, 1.5)

    def _D1(self, z):
        """(lambda_1 - lambda_1*)(z) / (-z)^{1/2}."""
        eq = self.eq
        if z == 0:
            return mp.mpc(eq.delta1 * mp.sqrt(eq.beta) / eq.tau)
        diff = lambda_(eq, 1, z, "+") - lambda_star(eq, 1, z, "+")
        if _is_real(z) and mp.re(z) > 0:
            return diff / (mp.mpc(0, -1) * mp.sqrt(mp.re(z)))
        return diff / mp.sqrt(-z)

    def _D2(self, z):
        """(lambda_2 - lambda_2*)(z) / z^{1/2}."""
        eq = self.eq
        if z == 0:
            return mp.mpc(-eq.delta2 * mp.sqrt(eq.alpha) / eq.tau)
        diff = lambda_(eq, 2, z, "+") - lambda_star(eq, 2, z, "+")
        if _is_real(z) and mp.re(z) < 0:
            return diff / (mp.mpc(0, 1) * mp.sqrt(-mp.re(z)))
        return diff / mp.sqrt(z)

    def _g(self, z):
        """f(z)/z; the branch of the 2/3 power is fixed by f'(0) > 0."""
        return self.fam.p1_star ** (-mp.mpf(1) / 6) * mp.power(mp.mpf(3) / 2 * self._H1(z), mp.mpf(2) / 3)

    def f(self, z):
        with mp.workprec(self.prec):
            z = self._point(z)
            out = z * self._g(z)
            return mp.re(out) if _is_real(z) else out

    def f_prime0(self):
        with mp.workprec(self.prec):
            return mp.re(self._g(mp.mpf(0)))

    def r2(self, z):
        with mp.workprec(self.prec):
            z = self._point(z)
            out = self.r1 * self._H2(z) / self._H1(z)
            return mp.re(out) if _is_real(z) else out

    def s1(self, z):
        with mp.workprec(self.prec):
            z = self._point(z)
            out = self._D1(z) / (2 * mp.sqrt(self._g(z)))
            return mp.re(out) if _is_real(z) else out

    def s2(self, z):
        with mp.workprec(self.prec):
            z = self._point(z)
            out = self._D2(z) / (2 * mp.sqrt(self._g(z)))
            return mp.re(out) if _is_real(z) else out

    def at_zero(self):
        """Values at 0: f, f', r2, s1, s2."""
        z = mp.mpf(0)
        return {"f": mp.mpf(0), "f_prime": self.f_prime0(), "r2": self.r2(z),
                "s1": self.s1(z), "s2": self.s2(z)}

    def sqrt_minus_f(self, z):
        """(-f)^{1/2} on the branch analytic in the disk cut along f > 0."""
        z = self._point(z)
        return mp.sqrt(-z) * mp.sqrt(self._g(z))

    def sqrt_f(self, z):
        z = self._point(z)
        return mp.sqrt(z) * mp.sqrt(self._g(z))

    def theta1(self, z):
        """(2/3) r1 (-f)^{3/2} + 2 s1 (-f)^{1/2}; equals lambda_1(z) off the cut."""
        with mp.workprec(self.prec):
            q = self.sqrt_minus_f(z)
            return mp.mpf(2) / 3 * self.r1 * q**3 + 2 * self.s1(z) * q

    def theta2(self, z):
        """(2/3) r2(z) f^{3/2} + 2 s2 f^{1/2}; equals lambda_2(z) off the cut."""
        with mp.workprec(self.prec):
            q = self.sqrt_f(z)
            return mp.mpf(2) / 3 * self.r2(z) * q**3 + 2 * self.s2(z) * q


def local_maps(fam, n, prec=DEFAULT_PREC):
    return LocalMaps(fam, n, prec)


def density_csv(eq, xs):
    mu1, mu2 = _density(eq, 1), _density(eq, 2)
    buf = io.StringIO()
    buf.write("x,mu1,mu2\n")
    for x in xs:
        buf.write(f"{fmt(mp.mpf(x))},{fmt(mu1(x))},{fmt(mu2(x))}\n")
    return buf.getvalue()


def lambda_csv(eq, xs):
    """Upper boundary values of both lambda-functions on a real grid."""
    buf = io.StringIO()
    buf.write("x,Re_lambda1_plus,Im_lambda1_plus,Re_lambda2_plus,Im_lambda2_plus\n")
    for x in xs:
        x = mp.mpf(x)
        l1 = mp.mpc(lambda_(eq, 1, x, "+"))
        l2 = mp.mpc(lambda_(eq, 2, x, "+"))
        buf.write(f"{fmt(x)},{fmt(l1.real)},{fmt(l1.imag)},{fmt(l2.real)},{fmt(l2.imag)}\n")
    return buf.getvalue()
