r"""Modified Bessel functions of the second kind of integer order.

Two regimes are used:

* ``x <= 2``: the ascending series with the logarithmic term,

  .. math::
      K_0(x) = -\left(\ln\tfrac{x}{2}\right) I_0(x)
               + \sum_{k\ge0} \psi(k+1)\,\frac{(x^2/4)^k}{(k!)^2},

  and the analogous series for :math:`K_1`.
* ``x > 2``: Steed's continued fraction (Temme's CF2) for
  :math:`e^x K_0(x)` together with the ratio :math:`K_1/K_0`.

Both regimes deliver about 1e-15 relative accuracy. All internal consumers
should work with the scaled values ``e^x K_n(x)``; the unscaled values
underflow to zero for ``x`` above roughly 700.

Higher orders come from the upward recurrence
``K_{n+1}(x) = K_{n-1}(x) + (2n/x) K_n(x)``, which is stable for ``K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "BesselEval",
    "k0",
    "k1",
    "kn",
    "k0_scaled",
    "k1_scaled",
    "kn_scaled",
    "k0_prime",
    "k1_prime",
    "k_ratio",
    "evaluate",
]

_EULER_GAMMA = 0.57721566490153286061
_SERIES_TERMS = 30
_CF_MAXIT = 10000
_CF_EPS = 1e-17
_SWITCH = 2.0


@dataclass(frozen=True)
class BesselEval:
    """Value of ``K_n`` at ``x`` with its exponentially scaled companion."""

    order: int
    x: float
    value: float
    scaled_value: float


def _as_positive(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("modified Bessel K requires x > 0")
    return arr


def _restore(arr, like):
    if np.ndim(like) == 0:
        return float(arr)
    return arr


def _series_01(x):
    """Scaled K0, K1 for 0 < x <= 2 from the ascending series."""
    y = 0.25 * x * x
    lg = np.log(0.5 * x)
    term = np.ones_like(x)  # (x^2/4)^k / (k!)^2
    psi = -_EULER_GAMMA  # psi(k+1)
    i0 = np.zeros_like(x)
    s0 = np.zeros_like(x)
    i1 = np.zeros_like(x)
    s1 = np.zeros_like(x)
    for k in range(_SERIES_TERMS):
        term_k1 = term / (k + 1)  # (x^2/4)^k / (k! (k+1)!)
        psi_next = psi + 1.0 / (k + 1)
        i0 += term
        s0 += psi * term
        i1 += term_k1
        s1 += (psi + psi_next) * term_k1
        term = term * y / ((k + 1) * (k + 1))
        psi = psi_next
    i1 *= 0.5 * x
    k0v = -lg * i0 + s0
    k1v = 1.0 / x + lg * i1 - 0.25 * x * s1
    scale = np.exp(x)
    return k0v * scale, k1v * scale


def _steed_01(x):
    """Scaled K0, K1 for x > 2 by Steed's continued fraction."""
    # Order mu = 0 specialisation of Temme's CF2.
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    for i in range(1, _CF_MAXIT):
        a -= 2 * i
        c = -a * c / (i + 1.0)
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels / s) < _CF_EPS):
            break
    h = a1 * h
    k0s = np.sqrt(np.pi / (2.0 * x)) / s
    k1s = k0s * (x + 0.5 - h) / x
    return k0s, k1s


def _series_01_scalar(x):
    y = 0.25 * x * x
    lg = math.log(0.5 * x)
    term = 1.0
    psi = -_EULER_GAMMA
    i0 = s0 = i1 = s1 = 0.0
    for k in range(_SERIES_TERMS):
        term_k1 = term / (k + 1)
        psi_next = psi + 1.0 / (k + 1)
        i0 += term
        s0 += psi * term
        i1 += term_k1
        s1 += (psi + psi_next) * term_k1
        term = term * y / ((k + 1) * (k + 1))
        psi = psi_next
    i1 *= 0.5 * x
    scale = math.exp(x)
    return (-lg * i0 + s0) * scale, (1.0 / x + lg * i1 - 0.25 * x * s1) * scale


def _steed_01_scalar(x):
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(1, _CF_MAXIT):
        a -= 2 * i
        c = -a * c / (i + 1.0)
        q1, q2 = q2, (q1 - b * q2) / a
        q += c * q2
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _CF_EPS:
            break
    h *= a1
    k0s = math.sqrt(math.pi / (2.0 * x)) / s
    return k0s, k0s * (x + 0.5 - h) / x


def _scaled_01(x):
    if x.size == 1:
        # scalar fast path for root finders; same algorithms without array overhead
        v = float(x.ravel()[0])
        pair = _series_01_scalar(v) if v <= _SWITCH else _steed_01_scalar(v)
        return np.array([pair[0]]).reshape(x.shape), np.array([pair[1]]).reshape(x.shape)
    x = np.atleast_1d(x)
    k0s = np.empty_like(x)
    k1s = np.empty_like(x)
    lo = x <= _SWITCH
    if np.any(lo):
        k0s[lo], k1s[lo] = _series_01(x[lo])
    hi = ~lo
    if np.any(hi):
        k0s[hi], k1s[hi] = _steed_01(x[hi])
    return k0s, k1s


def _unscale(scaled, x):
    with np.errstate(under="ignore"):
        return scaled * np.exp(-x)


def k0_scaled(x):
    """``e^x K_0(x)``."""
    arr = _as_positive(x)
    return _restore(_scaled_01(arr.ravel())[0].reshape(arr.shape), x)


def k1_scaled(x):
    """``e^x K_1(x)``."""
    arr = _as_positive(x)
    return _restore(_scaled_01(arr.ravel())[1].reshape(arr.shape), x)


def k0(x):
    """Modified Bessel function ``K_0(x)`` for ``x > 0``.

    Returns 0 where the value underflows (``x`` above about 700).
    """
    arr = _as_positive(x)
    s = _scaled_01(arr.ravel())[0].reshape(arr.shape)
    return _restore(_unscale(s, arr), x)


def k1(x):
    """Modified Bessel function ``K_1(x)`` for ``x > 0``."""
    arr = _as_positive(x)
    s = _scaled_01(arr.ravel())[1].reshape(arr.shape)
    return _restore(_unscale(s, arr), x)


def _kn_scaled_arr(n, arr):
    k0s, k1s = _scaled_01(arr.ravel())
    if n == 0:
        out = k0s
    else:
        prev, cur = k0s, k1s
        for m in range(1, n):
            prev, cur = cur, prev + (2.0 * m / arr.ravel()) * cur
        out = cur
    return out.reshape(arr.shape)


def kn_scaled(n, x):
    """``e^x K_n(x)`` for integer ``n >= 0`` (negative ``n`` uses ``K_{-n} = K_n``)."""
    n = abs(int(n))
    arr = _as_positive(x)
    return _restore(_kn_scaled_arr(n, arr), x)


def kn(n, x):
    """``K_n(x)`` by upward recurrence from ``K_0`` and ``K_1``."""
    n = abs(int(n))
    arr = _as_positive(x)
    return _restore(_unscale(_kn_scaled_arr(n, arr), arr), x)


def k0_prime(x):
    """``K_0'(x) = -K_1(x)``."""
    return -k1(x)


def k1_prime(x):
    """``K_1'(x) = -K_0(x) - K_1(x)/x``."""
    arr = _as_positive(x)
    k0s, k1s = _scaled_01(arr.ravel())
    d = (-k0s - k1s / arr.ravel()).reshape(arr.shape)
    return _restore(_unscale(d, arr), x)


def k_ratio(x):
    """``K_0(x)/K_1(x)``, formed from scaled values so it never underflows."""
    arr = _as_positive(x)
    k0s, k1s = _scaled_01(arr.ravel())
    return _restore((k0s / k1s).reshape(arr.shape), x)


def evaluate(n: int, x: float) -> BesselEval:
    """Bundle ``K_n(x)`` and ``e^x K_n(x)`` for a scalar argument."""
    s = kn_scaled(n, float(x))
    return BesselEval(order=abs(int(n)), x=float(x), value=kn(n, float(x)), scaled_value=s)
