"""Normal distribution and incomplete beta helpers.

Thin wrappers over the Cephes routines in :mod:`scipy.special`; the
upper tail is always evaluated directly (never as ``1 - cdf``) so that
relative accuracy survives far into the tail.
"""

import numpy as np
from scipy import special as _sp

from .errors import InvalidArgument


def norm_cdf(x):
    return _sp.ndtr(x)


def norm_sf(x):
    """Upper tail 1 - Phi(x), accurate in relative terms for large x."""
    return _sp.ndtr(np.negative(x))


def log_norm_sf(x):
    return _sp.log_ndtr(np.negative(x))


def norm_ppf(u):
    return _sp.ndtri(u)


def norm_isf(p):
    """Inverse of the upper tail: returns t with 1 - Phi(t) = p."""
    return -_sp.ndtri(p)


def betainc(a, b, x):
    """Regularized incomplete beta I_x(a, b)."""
    return _sp.betainc(a, b, x)


def check_probability(p, name="p"):
    p = float(p)
    if not (0.0 < p < 1.0):
        raise InvalidArgument(f"{name} must lie in (0, 1), got {p!r}")
    return p
