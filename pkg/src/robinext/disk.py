"""Exact negative Robin spectrum on the exterior of a disk.

Separating variables in polar coordinates splits the operator into radial
fibre problems indexed by the angular momentum ``n``. On fibre ``n`` the
decaying solution is ``K_n(w r)`` and the Robin condition ``f'(R) = alpha f(R)``
becomes, with ``x = w R``,

    x K_{n-1}(x) / K_n(x) = -(alpha R + n),          K_{-1} = K_1.

For ``n = 0`` this is ``xi K_1(xi R) + alpha K_0(xi R) = 0`` and for ``n = 1``
it is ``-x K_0(x)/K_1(x) = alpha R + 1``. The left-hand side tends to 0 as
``x -> 0+`` and to infinity as ``x -> infinity``, so a root exists iff
``alpha R + n < 0``. All ratios are formed from exponentially scaled
Bessel values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import specfun
from .errors import RootFindingError

__all__ = [
    "DiskSpectrum",
    "fiber_equation",
    "lambda1_disk",
    "lambda2_disk",
    "critical_coupling_disk",
    "fiber_lowest",
    "fiber_root",
    "disk_spectrum_full",
    "FIBER_CAP",
]

FIBER_CAP = 64

_X_MIN = 1e-300
_X_MAX = 1e6


def _ratio(n, x):
    """``K_{n-1}(x) / K_n(x)``."""
    if n == 0:
        return 1.0 / specfun.k_ratio(x)
    if n == 1:
        return specfun.k_ratio(x)
    return specfun.kn_scaled(n - 1, x) / specfun.kn_scaled(n, x)


def fiber_equation(n: int, x: float, alpha_r: float) -> float:
    """Residual ``x K_{n-1}(x)/K_n(x) + alpha R + n`` of fibre ``n``."""
    return x * _ratio(n, x) + alpha_r + n


def _fiber_equation_slope(n, x):
    r = _ratio(n, x)
    return 2 * n * r + x * (r * r - 1.0)


def fiber_root(n: int, alpha_r: float) -> float | None:
    """Root ``x = w R`` of the fibre-``n`` equation, or ``None`` if absent.

    Brackets by geometric expansion from ``max(|alpha R + 1|, 1e-8)``, then
    solves with Brent's method and one safeguarded Newton step.
    """
    target = -(alpha_r + n)
    if not target > 0:
        return None

    def h(x):
        return fiber_equation(n, x, alpha_r)

    x0 = max(abs(alpha_r + 1.0), 1e-8)
    lo = hi = x0
    if h(x0) < 0:
        while h(hi) <= 0:
            lo = hi
            hi *= 2.0
            if hi > _X_MAX:
                raise RootFindingError(f"cannot bracket fibre {n} root for alpha*R={alpha_r}")
    else:
        while h(lo) >= 0:
            hi = lo
            lo *= 0.5 if lo > 1e-12 else 1e-4
            if lo < _X_MIN:
                # root below the representable range; alpha R is essentially 0
                return _X_MIN
    x = brentq(h, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
    # one safeguarded Newton step cleans up the last ulp or two
    slope = _fiber_equation_slope(n, x)
    if slope != 0:
        trial = x - h(x) / slope
        if lo <= trial <= hi and abs(h(trial)) < abs(h(x)):
            x = trial
    return x


def lambda1_disk(R: float, alpha: float) -> tuple[float, float]:
    """Ground state ``(xi, -xi**2)`` of the exterior of the disk of radius ``R``.

    ``xi`` solves ``xi K_1(xi R) + alpha K_0(xi R) = 0``; exists for every
    ``alpha < 0``.
    """
    if not R > 0:
        raise ValueError("radius must be positive")
    if not alpha < 0:
        raise ValueError("lambda1_disk requires alpha < 0")
    x = fiber_root(0, alpha * R)
    if x is None:
        raise RootFindingError("ground state root missing")
    xi = x / R
    return xi, -xi * xi


def lambda2_disk(R: float, alpha: float) -> tuple[float, float] | None:
    """Second eigenvalue ``(omega, -omega**2)`` or ``None`` if ``alpha >= -1/R``.

    ``omega`` solves ``-omega R K_0(omega R)/K_1(omega R) = alpha R + 1``.
    The eigenvalue is double, with eigenfunctions ``K_1(omega r) cos(theta)``
    and ``K_1(omega r) sin(theta)``.
    """
    if not R > 0:
        raise ValueError("radius must be positive")
    x = fiber_root(1, alpha * R)
    if x is None:
        return None
    omega = x / R
    return omega, -omega * omega


def critical_coupling_disk(R: float) -> float:
    """``-1/R``: below it the disk exterior has at least two negative eigenvalues."""
    if not R > 0:
        raise ValueError("radius must be positive")
    return -1.0 / R


def fiber_lowest(R: float, alpha: float, n: int) -> float | None:
    """Negative eigenvalue of the radial fibre operator with angular momentum ``n``."""
    if not R > 0:
        raise ValueError("radius must be positive")
    x = fiber_root(abs(int(n)), alpha * R)
    if x is None:
        return None
    w = x / R
    return -w * w


@dataclass(frozen=True)
class DiskSpectrum:
    """Negative spectrum of the Robin Laplacian outside a disk."""

    radius: float
    alpha: float
    xi: float
    omega: float | None
    n_star: int
    fiber_values: list[tuple[int, float]] = field(default_factory=list)

    @property
    def lambda1(self) -> float:
        return -self.xi**2

    @property
    def lambda2(self) -> float | None:
        return None if self.omega is None else -self.omega**2

    @property
    def critical_coupling(self) -> float:
        return -1.0 / self.radius

    @property
    def count(self) -> int:
        """``N_alpha``: total number of negative eigenvalues with multiplicity."""
        return 2 * self.n_star + 1

    def eigenvalues(self) -> list[float]:
        """Negative eigenvalues in non-decreasing order, repeated by multiplicity."""
        out = []
        for n, lam in self.fiber_values:
            out.extend([lam] if n == 0 else [lam, lam])
        return out


def disk_spectrum_full(R: float, alpha: float, cap: int = FIBER_CAP) -> DiskSpectrum:
    """Enumerate fibres ``n = 0, 1, ...`` until the first one without a negative eigenvalue."""
    xi, lam1 = lambda1_disk(R, alpha)
    values = [(0, lam1)]
    n = 1
    while True:
        lam = fiber_lowest(R, alpha, n)
        if lam is None:
            break
        if n > cap:
            raise RootFindingError(f"more than {cap} negative fibres; raise the cap")
        values.append((n, lam))
        n += 1
    second = lambda2_disk(R, alpha)
    return DiskSpectrum(
        radius=float(R),
        alpha=float(alpha),
        xi=xi,
        omega=None if second is None else second[0],
        n_star=n - 1,
        fiber_values=values,
    )
