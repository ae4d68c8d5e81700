"""Model parameters, regime classification and double-scaling constants.

Two groups of non-intersecting Brownian bridges with variance 1/N per unit
time.  Group j holds n_j paths running from a_j at time 0 to b_j at time 1.
In the critical regime the two limiting ellipses touch at one space-time
point, the tacnode (t_crit, x_crit).  A :class:`ScalingFamily` fixes the
starred limiting geometry plus perturbations L1..L4 at scale n^(-2/3), and
hands out a concrete :class:`EnsembleConfig` for every n.

All reals are stored as mpmath floats with plenty of guard bits.  JSON
configs are read with decimal parsing, so that "1.4" means exactly 1.4 up to
the storage precision and not the nearest double.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field, fields
from decimal import Decimal
from pathlib import Path

import mpmath as mp

from ._mp import DEFAULT_PREC, to_mpf

__all__ = [
    "EnsembleConfig",
    "Geometry",
    "RegimeKind",
    "Regime",
    "ScalingFamily",
    "TacnodeParams",
    "classify_separation",
    "critical_point",
    "semicircle_support",
    "scaled_config",
    "tacnode_parameters",
    "sigma_from_local",
    "hull_boundary",
    "hull_csv",
    "load_family",
]


def _mass_term(p1):
    # (sqrt(p1) + sqrt(p2))^2 written so the symmetric case p1 = 1/2 is exact
    return 1 + 2 * mp.sqrt(p1 * (1 - p1))


class RegimeKind(str, enum.Enum):
    LARGE = "Large"
    SMALL = "Small"
    CRITICAL = "Critical"


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    margin: mp.mpf

    def __str__(self):
        return self.kind.value


def classify_separation(p1s, a_gap, b_gap, T=1, tol="1e-12", prec=DEFAULT_PREC):
    """Large, small or critical separation of the two groups.

    The margin is ``a_gap*b_gap - T*(sqrt(p1)+sqrt(p2))**2``.  It is compared
    against zero with relative tolerance ``tol``.
    """
    p1s, a_gap, b_gap, T, tol = (to_mpf(v) for v in (p1s, a_gap, b_gap, T, tol))
    if not 0 < p1s < 1:
        raise ValueError(f"p1 must lie in (0,1), got {p1s}")
    if a_gap <= 0 or b_gap <= 0:
        raise ValueError("gaps a1-a2 and b1-b2 must be positive")
    if T <= 0:
        raise ValueError("temperature T must be positive")
    with mp.workprec(prec):
        scale = T * _mass_term(p1s)
        margin = a_gap * b_gap - scale
        if abs(margin) <= tol * scale:
            kind = RegimeKind.CRITICAL
        elif margin > 0:
            kind = RegimeKind.LARGE
        else:
            kind = RegimeKind.SMALL
    return Regime(kind, margin)


@dataclass(frozen=True)
class EnsembleConfig:
    """Finite-n model.  Group 1 runs a1 -> b1, group 2 runs a2 -> b2."""

    n: int
    n1: int
    a1: mp.mpf
    a2: mp.mpf
    b1: mp.mpf
    b2: mp.mpf
    t: mp.mpf
    T: mp.mpf = field(default=1)

    def __post_init__(self):
        for f in fields(self):
            if f.name not in ("n", "n1"):
                object.__setattr__(self, f.name, to_mpf(getattr(self, f.name)))
        if int(self.n) != self.n or int(self.n1) != self.n1:
            raise ValueError("n and n1 must be integers")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "n1", int(self.n1))
        if not (1 <= self.n1 < self.n):
            raise ValueError(f"need 1 <= n1 < n, got n={self.n}, n1={self.n1}")
        if not (self.a1 > self.a2 and self.b1 > self.b2):
            raise ValueError("need a1 > a2 and b1 > b2")
        if not (0 < self.t < 1):
            raise ValueError(f"t must lie in (0,1), got {self.t}")
        if self.T <= 0:
            raise ValueError("T must be positive")

    @property
    def n2(self):
        return self.n - self.n1

    @property
    def p1(self):
        return mp.mpf(self.n1) / self.n

    @property
    def p2(self):
        return mp.mpf(self.n2) / self.n

    @property
    def N(self):
        return self.n / self.T

    def group(self, j):
        """(n_j, a_j, b_j) for j in {1, 2}."""
        if j == 1:
            return self.n1, self.a1, self.b1
        if j == 2:
            return self.n2, self.a2, self.b2
        raise ValueError(f"group index must be 1 or 2, got {j}")

    def with_time(self, t):
        return EnsembleConfig(self.n, self.n1, self.a1, self.a2, self.b1, self.b2, t, self.T)

    @classmethod
    def symmetric(cls, n, t="2/3", a=1, b="0.5"):
        """Balanced config with a = (a, -a), b = (b, -b)."""
        if isinstance(t, str) and "/" in t:
            num, den = t.split("/")
            t = to_mpf(num) / to_mpf(den)
        a, b = to_mpf(a), to_mpf(b)
        return cls(n, n // 2, a, -a, b, -b, t)


def semicircle_support(cfg, j, t=None, prec=DEFAULT_PREC):
    """Support [alpha_j, beta_j] and semicircle density of group j at time t.

    Returns ``(alpha, beta, density)`` where ``density`` is a callable.
    """
    t = cfg.t if t is None else to_mpf(t)
    if not 0 < t < 1:
        raise ValueError("t must lie in (0,1)")
    nj, aj, bj = cfg.group(j)
    pj = mp.mpf(nj) / cfg.n
    with mp.workprec(prec):
        return _semicircle(pj, aj, bj, t, cfg.T)


def _semicircle(pj, aj, bj, t, T):
    centre = (1 - t) * aj + t * bj
    var = T * t * (1 - t)
    half = 2 * mp.sqrt(pj * var)
    lo, hi = centre - half, centre + half

    def density(x):
        x = mp.mpf(x)
        if x <= lo or x >= hi:
            return mp.mpf(0)
        return mp.sqrt((hi - x) * (x - lo)) / (2 * mp.pi * var)

    return lo, hi, density


@dataclass(frozen=True)
class Geometry:
    """Starred two-group geometry without a criticality requirement."""

    p1_star: mp.mpf
    a1_star: mp.mpf
    a2_star: mp.mpf
    b1_star: mp.mpf
    b2_star: mp.mpf
    T: mp.mpf = 1

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, to_mpf(getattr(self, f.name)))

    @property
    def p2_star(self):
        return 1 - self.p1_star

    def regime(self, tol="1e-12"):
        return classify_separation(
            self.p1_star, self.a1_star - self.a2_star, self.b1_star - self.b2_star, self.T, tol
        )


@dataclass(frozen=True)
class ScalingFamily:
    """Critical starred geometry plus n^(-2/3) perturbations of the endpoints.

    The tacnode sits at ``x_crit``, which is zero for families in the
    normalisation where both groups' limiting supports touch at the origin.
    Families with the tacnode elsewhere are accepted; the equilibrium code
    works in coordinates centred at ``x_crit``.
    """

    p1_star: mp.mpf
    a1_star: mp.mpf
    a2_star: mp.mpf
    b1_star: mp.mpf
    b2_star: mp.mpf
    L1: mp.mpf = 0
    L2: mp.mpf = 0
    L3: mp.mpf = 0
    L4: mp.mpf = 0
    tol: mp.mpf = field(default="1e-12", compare=False)

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, to_mpf(getattr(self, f.name)))
        if self.a1_star <= self.a2_star or self.b1_star <= self.b2_star:
            raise ValueError("need a1* > a2* and b1* > b2*")
        reg = self.geometry.regime(self.tol)
        if reg.kind is not RegimeKind.CRITICAL:
            raise ValueError(f"family is not critical: {reg.kind.value}, margin {mp.nstr(reg.margin, 10)}")

    @property
    def p2_star(self):
        return 1 - self.p1_star

    @property
    def geometry(self):
        return Geometry(self.p1_star, self.a1_star, self.a2_star, self.b1_star, self.b2_star)

    @property
    def a_gap(self):
        return self.a1_star - self.a2_star

    @property
    def b_gap(self):
        return self.b1_star - self.b2_star

    @property
    def L5(self):
        return self.b_gap * self.L1 + self.a_gap * self.L3

    @property
    def L6(self):
        return self.b_gap * self.L2 + self.a_gap * self.L4

    @property
    def t_crit(self):
        return critical_point(self)[0]

    @property
    def x_crit(self):
        return critical_point(self)[1]

    @property
    def x_tangency(self):
        """Point where the two limiting supports touch (alpha_1* = beta_2*).

        Equals ``x_crit`` when p1* = p2*; for unbalanced masses the midpoint
        formula of ``x_crit`` is off by sqrt(t(1-t)) (sqrt(p2*) - sqrt(p1*)).
        """
        t = self.t_crit
        return (1 - t) * self.a1_star + t * self.b1_star - 2 * mp.sqrt(self.p1_star * t * (1 - t))

    @property
    def alpha_star(self):
        t = self.t_crit
        return 4 * mp.sqrt(self.p2_star * t * (1 - t))

    @property
    def beta_star(self):
        t = self.t_crit
        return 4 * mp.sqrt(self.p1_star * t * (1 - t))

    def with_L(self, L1=0, L2=0, L3=0, L4=0):
        return ScalingFamily(
            self.p1_star, self.a1_star, self.a2_star, self.b1_star, self.b2_star, L1, L2, L3, L4, self.tol
        )

    @classmethod
    def symmetric(cls, L1=0, L2=0, L3=0, L4=0):
        """p* = 1/2, a* = (1, -1), b* = (1/2, -1/2)."""
        return cls("0.5", 1, -1, "0.5", "-0.5", L1, L2, L3, L4)

    @classmethod
    def from_dict(cls, d):
        a = d.get("a_star", [d.get("a1_star"), d.get("a2_star")])
        b = d.get("b_star", [d.get("b1_star"), d.get("b2_star")])
        L = list(d.get("L", [0, 0, 0, 0]))
        if len(L) != 4:
            raise ValueError("L must have four entries")
        return cls(d["p1_star"], a[0], a[1], b[0], b[1], *L, tol=d.get("tol", "1e-12"))

    def to_dict(self):
        return {
            "p1_star": mp.nstr(self.p1_star, 30),
            "a_star": [mp.nstr(self.a1_star, 30), mp.nstr(self.a2_star, 30)],
            "b_star": [mp.nstr(self.b1_star, 30), mp.nstr(self.b2_star, 30)],
            "L": [mp.nstr(x, 30) for x in (self.L1, self.L2, self.L3, self.L4)],
        }


def load_family(path):
    """Read a JSON config.  Returns ``(family_or_geometry, raw_dict)``.

    A config whose geometry is not critical comes back as a :class:`Geometry`.
    """
    text = Path(path).read_text(encoding="utf-8")
    raw = json.loads(text, parse_float=Decimal)
    a = raw["a_star"]
    b = raw["b_star"]
    geo = Geometry(raw["p1_star"], a[0], a[1], b[0], b[1])
    if geo.regime(raw.get("tol", "1e-12")).kind is RegimeKind.CRITICAL:
        return ScalingFamily.from_dict(raw), raw
    return geo, raw


def critical_point(fam):
    """Critical time and place (t_crit, x_crit) of the tangency."""
    ag = fam.a1_star - fam.a2_star
    bg = fam.b1_star - fam.b2_star
    with mp.workprec(max(mp.mp.prec, DEFAULT_PREC)):
        t = ag / (ag + bg)
        x = (1 - t) * (fam.a1_star + fam.a2_star) / 2 + t * (fam.b1_star + fam.b2_star) / 2
    return t, x


def _n_to_minus_two_thirds(n):
    return 1 / mp.cbrt(n) ** 2


def scaled_config(fam, n):
    """EnsembleConfig for the family at size n, at the critical time.

    n1 is p1*·n rounded to nearest with ties going down, so
    |n1/n - p1*| <= 1/(2n).
    """
    n = int(n)
    if n < 2:
        raise ValueError("n must be at least 2")
    with mp.workprec(DEFAULT_PREC * 2):
        n1 = int(mp.ceil(fam.p1_star * n - mp.mpf(1) / 2))
        if n1 < 1 or n1 > n - 1:
            raise ValueError(f"rounding p1*·n gives an empty group (n={n}, n1={n1})")
        h = _n_to_minus_two_thirds(n)
        a1 = fam.a1_star + fam.L1 * h
        a2 = fam.a2_star + fam.L2 * h
        b1 = fam.b1_star + fam.L3 * h
        b2 = fam.b2_star + fam.L4 * h
        t = fam.t_crit
    return EnsembleConfig(n, n1, a1, a2, b1, b2, t, 1)


@dataclass(frozen=True)
class TacnodeParams:
    r1: mp.mpf
    r2: mp.mpf
    s1: mp.mpf
    s2: mp.mpf
    sigma: mp.mpf
    K: mp.mpf
    c: mp.mpf
    c2: mp.mpf
    L5: mp.mpf
    L6: mp.mpf


def sigma_from_local(r1, r2, s1, s2):
    """Painlevé argument sigma expressed through the local parameters."""
    return 2 * (r1 * s2 + r2 * s1) / (mp.cbrt(r1 * r2) * mp.cbrt(r1**2 + r2**2))


def tacnode_parameters(fam, t=None, prec=DEFAULT_PREC):
    """Limiting local parameters (r1, r2, s1, s2), sigma, K and the constants c, c2.

    Only the critical time is meaningful; passing a different ``t`` raises.
    """
    with mp.workprec(prec):
        tc = fam.t_crit
        if t is not None and abs(to_mpf(t) - tc) > mp.mpf(2) ** (-prec // 2):
            raise ValueError("tacnode parameters are defined only at t = t_crit")
        p1, p2 = fam.p1_star, fam.p2_star
        S = mp.sqrt(p1) + mp.sqrt(p2)
        L5, L6 = fam.L5, fam.L6
        r1 = mp.root(p1, 4)
        r2 = mp.root(p2, 4)
        s1 = r1 * L5 / (2 * S)
        s2 = -r2 * L6 / (2 * S)
        K = mp.cbrt(mp.sqrt(p1 * p2)) / mp.cbrt(S**4)
        sigma = K * (L5 - L6)
        c = 1 / mp.sqrt(tc * (1 - tc))
        c2 = c * (-(1 - tc) * fam.a1_star / 2 + tc * fam.b1_star / 2)
    return TacnodeParams(r1, r2, s1, s2, sigma, K, c, c2, L5, L6)


def hull_boundary(geom, t_grid, prec=DEFAULT_PREC):
    """Rows (t, alpha1, beta1, alpha2, beta2) of the limiting supports.

    ``geom`` is a ScalingFamily or Geometry.  The small-separation boundary
    is not a pair of ellipses and is refused.
    """
    if isinstance(geom, ScalingFamily):
        geom = geom.geometry
    reg = geom.regime()
    if reg.kind is RegimeKind.SMALL:
        raise ValueError("hull boundary is only available for large or critical separation")
    rows = []
    with mp.workprec(prec):
        for t in t_grid:
            t = to_mpf(t)
            if not 0 < t < 1:
                raise ValueError("hull times must lie in (0,1)")
            al1, be1, _ = _semicircle(geom.p1_star, geom.a1_star, geom.b1_star, t, geom.T)
            al2, be2, _ = _semicircle(geom.p2_star, geom.a2_star, geom.b2_star, t, geom.T)
            rows.append((t, al1, be1, al2, be2))
    return rows


def hull_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "alpha1", "beta1", "alpha2", "beta2"])
    for r in rows:
        w.writerow([mp.nstr(v, 20) for v in r])
    return buf.getvalue()
