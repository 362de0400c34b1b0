"""Digamma function for the Bayesian (exp-digamma) M-step.

Upward recurrence Psi(x) = Psi(x + 1) - 1/x moves the argument above
`_SHIFT`, where the asymptotic series is accurate to well below 1e-13
relative. Only positive real arguments are supported.
"""
import math

import numpy as np

_SHIFT = 10.0

# Bernoulli-number coefficients B_2k / (2k) of the asymptotic series in 1/x^2.
_SERIES = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def _asymptotic(x, log):
    inv2 = 1.0 / (x * x)
    tail = 0.0
    for coef in reversed(_SERIES):
        tail = tail * inv2 + coef
    return log(x) - 0.5 / x - tail * inv2


def digamma(x):
    """Digamma of a positive float."""
    if not x > 0.0:
        raise ValueError('digamma is only defined here for x > 0, got %r' % (x,))
    shift = 0.0
    while x < _SHIFT:
        shift -= 1.0 / x
        x += 1.0
    return shift + _asymptotic(x, math.log)


def digamma_array(x):
    """Vectorized digamma over an array of positive values."""
    x = np.array(x, dtype=np.float64, copy=True)
    if np.any(~(x > 0.0)):
        raise ValueError('digamma is only defined here for x > 0')
    shift = np.zeros_like(x)
    for _ in range(int(_SHIFT)):
        small = x < _SHIFT
        if not small.any():
            break
        shift[small] -= 1.0 / x[small]
        x[small] += 1.0
    return shift + _asymptotic(x, np.log)
