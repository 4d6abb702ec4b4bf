"""Bessel J0 by its power series and the first positive zero by Newton."""

import math
from functools import lru_cache


def _series(x, order):
    # J_order(x) = sum_m (-1)^m (x/2)^(2m+order) / (m! (m+order)!)
    half = 0.5 * x
    term = half ** order / math.factorial(order)
    total = term
    m = 0
    while abs(term) > 1e-18 * max(1.0, abs(total)):
        m += 1
        term *= -(half * half) / (m * (m + order))
        total += term
    return total


def j0_series(x):
    return _series(x, 0)


def j1_series(x):
    return _series(x, 1)


@lru_cache(maxsize=None)
def bessel_j0_zero(guess=2.4, tol=1e-15):
    """First positive zero of J0 (about 2.404825557695773)."""
    x = guess
    for _ in range(50):
        step = j0_series(x) / -j1_series(x)
        x -= step
        if abs(step) < tol * x:
            break
    return x
