"""Hastings-McLeod solution of Painlevé II and the scalars built from it.

q'' = s q + 2 q^3 with q(s) ~ Ai(s) as s -> +inf.  Since q > 0 we solve for
v = log q, which turns the exponential decay on the right into a gentle
-(2/3) s^(3/2) profile:

    v'' + v'^2 = s + 2 e^(2v).

The boundary value problem is discretised by Chebyshev collocation on a
chain of patches (Lobatto nodes, value and slope matched across interfaces)
and solved by damped Newton.  Right end: v = log Ai(s_max).  Left end: a
Robin condition v' = (log q_as)' from the standard large negative s series

    q ~ sqrt(-s/2) (1 + 1/(8 s^3) - 73/(128 s^6) + ...),

whose coefficients follow from substituting the series into the equation.
Perturbations of the solution oscillate rather than decay for s < 0, so a
crude left condition such as v' = 1/(2s) would leave a visible ripple.

Airy values come from scipy; double precision is ample since the Newton
solve itself is done in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath as mp
import numpy as np
from scipy import special
from scipy.integrate import solve_ivp

from .config import sigma_from_local, tacnode_parameters

__all__ = [
    "PainleveSolution",
    "M1Scalars",
    "ConvergenceError",
    "airy",
    "log_airy",
    "hastings_mcleod",
    "default_solution",
    "hamiltonian",
    "m1_scalars",
    "asymptotic_d",
    "recurrence_prediction",
    "shooting_hastings_mcleod",
    "left_asymptotic",
]

# coefficients c_k of s^(-3k) in the left series
_LEFT_SERIES = (1.0, 1 / 8, -73 / 128, 10657 / 1024, -13912277 / 32768, 8045883943 / 262144)


class ConvergenceError(RuntimeError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


def airy(s):
    """(Ai(s), Ai'(s)) in double precision."""
    ai, aip, _, _ = special.airy(float(s))
    return float(ai), float(aip)


def log_airy(s):
    """(log Ai(s), Ai'(s)/Ai(s)) for s > -2.3, stable for large s."""
    s = float(s)
    ai, aip, _, _ = special.airye(s)
    zeta = 2.0 / 3.0 * s * math.sqrt(s) if s > 0 else 0.0
    return math.log(ai) - zeta, aip / ai


def left_asymptotic(s, terms=6):
    """Series value of q and q'/q for large negative s."""
    s = float(s)
    w = 0.0
    dw = 0.0
    for k, ck in enumerate(_LEFT_SERIES[:terms]):
        w += ck * s ** (-3 * k)
        if k:
            dw += -3 * k * ck * s ** (-3 * k - 1)
    q = math.sqrt(-s / 2) * w
    return q, 1 / (2 * s) + dw / w


@lru_cache(maxsize=None)
def _cheb(m):
    """Lobatto nodes on [-1, 1] (ascending), differentiation matrix, barycentric weights."""
    k = np.arange(m)
    x = -np.cos(np.pi * k / (m - 1))
    c = np.ones(m)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** k
    X = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (X + np.eye(m))
    D -= np.diag(D.sum(axis=1))
    w = (-1.0) ** k * np.ones(m)
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, D, w


@dataclass(frozen=True)
class PainleveSolution:
    """Collocation solution.  Node arrays are double precision.

    ``s``, ``q``, ``q_prime``, ``u`` hold all nodes, patch by patch (interface
    points appear twice).  Interpolation is barycentric within the patch
    containing the requested point, of degree ``order``.
    """

    s: np.ndarray
    q: np.ndarray
    q_prime: np.ndarray
    u: np.ndarray
    s_min: float
    s_max: float
    order: int
    breaks: np.ndarray
    residual_max: float
    iterations: int
    trace: tuple = field(default=(), repr=False)

    def _patch(self, s):
        if not (self.s_min - 1e-12 <= s <= self.s_max + 1e-12):
            raise ValueError(f"s = {s} outside the solution range [{self.s_min}, {self.s_max}]")
        p = int(np.searchsorted(self.breaks, s, side="right")) - 1
        return min(max(p, 0), len(self.breaks) - 2)

    def _interp(self, arr, s):
        s = float(s)
        p = self._patch(s)
        m = self.order + 1
        lo, hi = self.breaks[p], self.breaks[p + 1]
        x, _, w = _cheb(m)
        xs = 2 * (s - lo) / (hi - lo) - 1
        vals = arr[p * m : (p + 1) * m]
        d = xs - x
        hit = np.flatnonzero(np.abs(d) < 1e-15)
        if hit.size:
            return float(vals[hit[0]])
        t = w / d
        return float(np.dot(t, vals) / t.sum())

    def _logq(self, s):
        return self._interp(self._v, s)

    @property
    def _v(self):
        return np.log(self.q)

    def q_at(self, s):
        return math.exp(self._interp(self._v, s))

    def qprime_at(self, s):
        vp = self.q_prime / self.q
        return self.q_at(s) * self._interp(vp, s)

    def u_at(self, s):
        q = self.q_at(s)
        qp = self.qprime_at(s)
        return qp * qp - float(s) * q * q - q**4

    def contains(self, s):
        return self.s_min <= float(s) <= self.s_max

    def residual(self, s):
        """q'' - s q - 2 q^3 at an arbitrary point via the interpolant of v."""
        # differentiate the patch polynomial of v'
        s = float(s)
        p = self._patch(s)
        m = self.order + 1
        lo, hi = self.breaks[p], self.breaks[p + 1]
        _, D, _ = _cheb(m)
        sl = slice(p * m, (p + 1) * m)
        vp = (self.q_prime / self.q)[sl]
        vpp = (2 / (hi - lo)) * (D @ vp)
        arr = np.zeros(len(self.q))
        arr[sl] = vpp
        q = self.q_at(s)
        v1 = self._interp(self.q_prime / self.q, s)
        v2 = self._interp(arr, s)
        return q * (v2 + v1 * v1) - s * q - 2 * q**3

    def to_csv(self):
        lines = ["s,q,qprime,u"]
        m = self.order + 1
        for i in range(len(self.s)):
            if i % m == 0 and i > 0:
                continue  # interface duplicate
            lines.append(f"{self.s[i]!r},{self.q[i]!r},{self.q_prime[i]!r},{self.u[i]!r}")
        return "\n".join(lines) + "\n"


def _seed(s):
    out = np.empty_like(s)
    for i, si in enumerate(s):
        if si > -2.3:
            out[i] = max(airy(si)[0], math.sqrt(max(-si, 0.0) / 2))
        else:
            out[i] = math.sqrt(-si / 2)
    return np.log(out)


def hastings_mcleod(s_min=-10.0, s_max=10.0, tol=1e-10, nodes=400, patches=None, max_iter=60):
    """Hastings-McLeod solution on [s_min, s_max] by patched Chebyshev collocation."""
    s_min, s_max = float(s_min), float(s_max)
    if not (s_min < 0 < s_max):
        raise ValueError("need s_min < 0 < s_max")
    if s_max < 6:
        raise ValueError("s_max must be at least 6 for the Airy boundary condition")
    P = patches or max(1, int(round((s_max - s_min) / 2)))
    m = max(8, nodes // P)
    x, D0, _ = _cheb(m)
    breaks = np.linspace(s_min, s_max, P + 1)
    N = P * m
    s = np.empty(N)
    Ds = []
    for p in range(P):
        lo, hi = breaks[p], breaks[p + 1]
        s[p * m : (p + 1) * m] = lo + (x + 1) * (hi - lo) / 2
        Ds.append(D0 * (2 / (hi - lo)))

    vR, _ = log_airy(s_max)
    _, gL = left_asymptotic(s_min)

    def F_and_J(v):
        F = np.empty(N)
        J = np.zeros((N, N))
        for p in range(P):
            sl = slice(p * m, (p + 1) * m)
            D = Ds[p]
            vp = v[sl]
            d1 = D @ vp
            d2 = D @ d1
            e2 = np.exp(2 * vp)
            Fi = d2 + d1 * d1 - s[sl] - 2 * e2
            Jp = D @ D + 2 * d1[:, None] * D - 4 * np.diag(e2)
            F[p * m + 1 : (p + 1) * m - 1] = Fi[1:-1]
            J[p * m + 1 : (p + 1) * m - 1, sl] = Jp[1:-1]
            first, last = p * m, (p + 1) * m - 1
            if p == 0:
                F[first] = d1[0] - gL
                J[first, sl] = D[0]
            else:
                # value continuity with the previous patch
                F[first] = v[first - 1] - v[first]
                J[first, first - 1] = 1.0
                J[first, first] = -1.0
            if p == P - 1:
                F[last] = v[last] - vR
                J[last, last] = 1.0
            else:
                # slope continuity with the next patch
                nxt = slice((p + 1) * m, (p + 2) * m)
                Dn = Ds[p + 1]
                F[last] = d1[-1] - Dn[0] @ v[nxt]
                J[last, sl] = D[-1]
                J[last, nxt] = -Dn[0]
        return F, J

    v = _seed(s)
    trace = []
    F, J = F_and_J(v)
    norm = np.max(np.abs(F))
    for it in range(1, max_iter + 1):
        dv = np.linalg.solve(J, -F)
        lam = 1.0
        while True:
            v_new = v + lam * dv
            F_new, J_new = F_and_J(v_new)
            n_new = np.max(np.abs(F_new))
            if n_new < norm or lam < 1e-4:
                break
            lam /= 2
        v, F, J, norm = v_new, F_new, J_new, n_new
        step = lam * np.max(np.abs(dv))
        trace.append((it, norm, step, lam))
        # the v-residual has a roundoff floor near 1e-10 where |v| is large, so
        # stop once Newton steps no longer move the iterate
        if norm < 1e-13 or step < 1e-12:
            break
    else:
        raise ConvergenceError(f"Newton did not converge in {max_iter} iterations", tuple(trace))

    q = np.exp(v)
    vp = np.concatenate([Ds[p] @ v[p * m : (p + 1) * m] for p in range(P)])
    qp = q * vp
    u = qp * qp - s * q * q - q**4
    # residual of the original equation at interior nodes
    vpp = np.concatenate([Ds[p] @ vp[p * m : (p + 1) * m] for p in range(P)])
    res = q * (vpp + vp * vp) - s * q - 2 * q**3
    interior = np.ones(N, dtype=bool)
    interior[0] = interior[-1] = False
    res_max = float(np.max(np.abs(res[interior])))
    if res_max > tol:
        raise ConvergenceError(f"collocation residual {res_max:.3e} exceeds tol {tol:.1e}", tuple(trace))
    return PainleveSolution(s, q, qp, u, s_min, s_max, m - 1, breaks, res_max, len(trace), tuple(trace))


@lru_cache(maxsize=8)
def _cached_solution(s_min, s_max):
    return hastings_mcleod(s_min, s_max)


def default_solution():
    """Shared solution on [-10, 10]."""
    return _cached_solution(-10.0, 10.0)


def _covering(sol, s):
    """sol itself, or a re-solve on a domain enlarged to contain s."""
    s = float(s)
    if sol.contains(s):
        return sol
    lo = min(sol.s_min, math.floor(s) - 2)
    hi = max(sol.s_max, math.ceil(s) + 2)
    return _cached_solution(float(lo), float(hi))


def hamiltonian(sol, s):
    """u(s) = q'(s)^2 - s q(s)^2 - q(s)^4 from the interpolant."""
    return sol.u_at(s)


def shooting_hastings_mcleod(s_eval, s0=8.0, s_left=-12.0, rtol=1e-13, atol=1e-300):
    """Independent value of q(s_eval) by bisection on lambda in q(s0) = lambda Ai(s0).

    Too large a lambda blows up while integrating leftwards, too small a one
    crosses zero; the separating value is the Hastings-McLeod solution.
    """

    def rhs(s, y):
        return [y[1], s * y[0] + 2 * y[0] ** 3]

    def crossing(s, y):
        return y[0]

    crossing.terminal = True

    def blowup(s, y):
        return y[0] - 10.0

    blowup.terminal = True

    ai, aip = airy(s0)

    def classify(lam):
        sol = solve_ivp(
            rhs, (s0, s_left), [lam * ai, lam * aip], method="DOP853", rtol=rtol, atol=atol,
            events=(crossing, blowup),
        )
        if sol.t_events[0].size:
            return -1
        if sol.t_events[1].size:
            return 1
        return 0

    lo, hi = 0.5, 1.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        c = classify(mid)
        if c < 0:
            lo = mid
        elif c > 0:
            hi = mid
        else:
            lo = hi = mid
            break
    lam = 0.5 * (lo + hi)
    sol = solve_ivp(rhs, (s0, float(s_eval)), [lam * ai, lam * aip], method="DOP853", rtol=rtol, atol=atol)
    return float(sol.y[0, -1]), float(sol.y[1, -1]), lam


@dataclass(frozen=True)
class M1Scalars:
    """Scalars of the residue matrix M_1 expressed through q and u."""

    d: float
    c: float
    c_tilde: float
    a: float
    a_tilde: float
    b: float
    b_tilde: float
    sigma: float
    dd_ds1: float
    r1: float
    r2: float
    s1: float
    s2: float

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _prefactors(r1, r2):
    S = r1 * r1 + r2 * r2
    cs = S ** (1 / 3)
    alpha_d = (r1 * r2) ** (1 / 6) / cs
    alpha_c = r2 ** (2 / 3) / (r1 ** (1 / 3) * cs)
    alpha_ct = r1 ** (2 / 3) / (r2 ** (1 / 3) * cs)
    dsig_ds1 = 2 * r2 / ((r1 * r2) ** (1 / 3) * cs)
    return alpha_d, alpha_c, alpha_ct, dsig_ds1


def m1_scalars(sol, r1, r2, s1, s2):
    """d, c, c~ from q and u at sigma; a, a~, b, b~ from the compatibility relations.

    a and a~ solve (2a + c^2) r1 = r2 d^2 + s1 and its partner.  b~ and b come
    from dd/ds1 = 2 c d - 2 b~ = (r2/r1)(2 c~ d - 2 b), with dd/ds1 taken
    analytically through sigma and q'.
    """
    r1, r2, s1, s2 = float(r1), float(r2), float(s1), float(s2)
    if r1 <= 0 or r2 <= 0:
        raise ValueError("r1 and r2 must be positive")
    sigma = 2 * (r1 * s2 + r2 * s1) / ((r1 * r2) ** (1 / 3) * (r1 * r1 + r2 * r2) ** (1 / 3))
    sol = _covering(sol, sigma)
    al_d, al_c, al_ct, dsig = _prefactors(r1, r2)
    q = sol.q_at(sigma)
    qp = sol.qprime_at(sigma)
    u = sol.u_at(sigma)
    d = al_d * q
    c = -al_c * u + s1 * s1 / r1
    ct = -al_ct * u + s2 * s2 / r2
    a = ((r2 * d * d + s1) / r1 - c * c) / 2
    at = ((r1 * d * d + s2) / r2 - ct * ct) / 2
    dd = al_d * qp * dsig
    bt = c * d - dd / 2
    b = ct * d - r1 / (2 * r2) * dd
    return M1Scalars(d, c, ct, a, at, b, bt, sigma, dd, r1, r2, s1, s2)


def asymptotic_d(r1, r2, s1, s2):
    """Large s1 approximation of d through the leading Airy decay."""
    r1, r2, s1, s2 = float(r1), float(r2), float(s1), float(s2)
    if s1 <= 0:
        raise ValueError("asymptotic_d needs s1 > 0")
    sigma = 2 * (r1 * s2 + r2 * s1) / ((r1 * r2) ** (1 / 3) * (r1 * r1 + r2 * r2) ** (1 / 3))
    if sigma <= 0:
        raise ValueError("asymptotic_d needs sigma > 0")
    pref = 1 / (2 * math.sqrt(math.pi) * s1 ** 0.25) * (r1 / (2 * (r1 * r1 + r2 * r2))) ** 0.25
    return pref * math.exp(-2 / 3 * sigma**1.5)


def recurrence_prediction(fam, sol, n, via_tcrit=False):
    """Leading order c12 and c14 for size n.

    With ``via_tcrit`` the time factors are rewritten through the gaps
    (t = ag/(ag+bg)), which must give the same numbers.
    """
    with mp.workprec(128):
        tp = tacnode_parameters(fam)
        sigma = float(tp.sigma)
        sol = _covering(sol, sigma)
        q2 = mp.mpf(sol.q_at(sigma)) ** 2
        K2 = tp.K**2
        ag, bg = fam.a_gap, fam.b_gap
        scale = 1 / mp.cbrt(n) ** 2
        if via_tcrit:
            c12 = -K2 * (ag * bg / (ag + bg)) ** 2 * q2 * scale
            c14 = K2 * (ag * bg) ** 2 / (ag + bg) ** 2 * q2 * scale
        else:
            t = fam.t_crit
            c12 = -K2 * t**2 * bg**2 * q2 * scale
            c14 = K2 * t * (1 - t) * ag * bg * q2 * scale
    return c12, c14


def sigma_of(r1, r2, s1, s2):
    return float(sigma_from_local(mp.mpf(r1), mp.mpf(r2), mp.mpf(s1), mp.mpf(s2)))
