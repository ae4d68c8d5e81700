"""Small helpers around mpmath precision handling."""

from __future__ import annotations

from decimal import Decimal
from fractions import Fraction

import mpmath as mp

DEFAULT_PREC = 128
# inputs are stored with generous headroom so that later work at any
# supported precision sees them essentially exactly
STORE_PREC = 1100


class PrecisionError(ArithmeticError):
    """A linear system was too ill-conditioned for the working precision."""

    def __init__(self, message, suggested_bits=None):
        super().__init__(message)
        self.suggested_bits = suggested_bits


class PrecisionWarning(UserWarning):
    pass


def to_mpf(x):
    """Convert ints, floats, strings, Decimals and Fractions to a stored mpf."""
    with mp.workprec(STORE_PREC):
        if isinstance(x, Fraction):
            return mp.mpf(x.numerator) / x.denominator
        if isinstance(x, Decimal):
            return mp.mpf(str(x))
        if isinstance(x, mp.mpf):
            return +x
        return mp.mpf(x)


def bits(prec):
    return DEFAULT_PREC if prec is None else int(prec)


def fmt(x, digits=None):
    """Full-precision, locale independent decimal string."""
    if isinstance(x, (int, str)):
        return str(x)
    if isinstance(x, float):
        return repr(x)
    d = digits or max(17, int(mp.mp.prec * 0.30103))
    s = mp.nstr(x, d, min_fixed=-5, max_fixed=8)
    return s


def as_float(x):
    return float(mp.re(x)) if isinstance(x, mp.mpc) else float(x)
