"""Gauss-Legendre panels for integrals over ``[a, inf)`` with exponential decay."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ConvergenceError

__all__ = ["semi_infinite"]


@lru_cache(maxsize=8)
def _rule(order):
    return np.polynomial.legendre.leggauss(order)


def _panel(fun, lower, scale, u0, u1, order):
    x, w = _rule(order)
    u = 0.5 * (u1 - u0) * (x + 1) + u0
    w = 0.5 * (u1 - u0) * w
    jac = scale * np.cosh(u)
    r = np.asarray(lower)[..., None] + scale * np.sinh(u)
    return np.sum(fun(r) * (w * jac), axis=-1)


def semi_infinite(fun, lower, scale, *, panel=0.5, order=16, tol=1e-16, check=1e-12, max_panels=64):
    """Integrate ``fun(r)`` over ``r in [lower, inf)``.

    Uses ``r = lower + scale * sinh(u)`` with Gauss-Legendre panels of width
    ``panel`` in ``u``. ``scale`` should be the decay length of the integrand.
    Panels are added until a panel contributes less than ``tol`` of the
    running total. ``fun`` receives ``r`` with a trailing node axis and must
    broadcast against the shape of ``lower``.

    Each panel is evaluated at ``order`` and ``2*order`` points; a relative
    disagreement above ``check`` raises :class:`ConvergenceError`.
    """
    total = 0.0
    coarse = 0.0
    u0 = 0.0
    for _ in range(max_panels):
        fine = _panel(fun, lower, scale, u0, u0 + panel, 2 * order)
        coarse = coarse + _panel(fun, lower, scale, u0, u0 + panel, order)
        total = total + fine
        u0 += panel
        if np.all(np.abs(fine) <= tol * np.abs(total)):
            break
    else:
        raise ConvergenceError("semi-infinite quadrature did not reach its tail tolerance")
    denom = np.maximum(np.abs(total), np.finfo(float).tiny)
    if np.any(np.abs(total - coarse) > check * denom):
        raise ConvergenceError("semi-infinite quadrature failed its self-estimate")
    return total
