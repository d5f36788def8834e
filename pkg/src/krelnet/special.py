"""Regularized incomplete gamma function.

Power series below x = a + 1, Lentz continued fraction above, in the usual
Numerical Recipes arrangement.
"""

from __future__ import annotations

import math

from .errors import InvalidArgument, NumericError

_EPS = 1e-15
_TINY = 1e-300


def _max_iter(a: float, x: float) -> int:
    # both expansions need O(sqrt(max(a, x))) terms near the transition
    return 1000 + int(50 * math.sqrt(max(a, x)))


def _log_prefactor(a: float, x: float) -> float:
    return -x + a * math.log(x) - math.lgamma(a)


def _series(a: float, x: float) -> float:
    term = total = 1.0 / a
    ap = a
    limit = _max_iter(a, x)
    for _ in range(limit):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(_log_prefactor(a, x))
    raise NumericError(
        f"incomplete gamma series did not converge: a={a}, x={x}, "
        f"iterations={limit}, last term={term:.3e}, partial sum={total:.6e}")


def _continued_fraction(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    limit = _max_iter(a, x)
    for i in range(1, limit + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < _EPS:
            return h * math.exp(_log_prefactor(a, x))
    raise NumericError(
        f"incomplete gamma continued fraction did not converge: a={a}, x={x}, "
        f"iterations={limit}, last step={step!r}")


def gammainc_lower(a: float, x: float) -> float:
    """P(a, x): the Gamma(a, 1) cdf evaluated at x."""
    if a <= 0 or x < 0 or math.isnan(x):
        raise InvalidArgument(f"gammainc_lower needs a > 0 and x >= 0, got a={a}, x={x}")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _series(a, x))
    return max(0.0, 1.0 - _continued_fraction(a, x))


def gammainc_upper(a: float, x: float) -> float:
    """Q(a, x) = 1 - P(a, x)."""
    if a <= 0 or x < 0 or math.isnan(x):
        raise InvalidArgument(f"gammainc_upper needs a > 0 and x >= 0, got a={a}, x={x}")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _series(a, x))
    return min(1.0, _continued_fraction(a, x))
