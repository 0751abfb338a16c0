"""Strictly star-shaped smooth domains described by a radial Fourier series.

The boundary is ``theta -> rho(theta) (cos theta, sin theta)`` with

    rho(theta) = a0 + sum_k a_k cos(k theta) + b_k sin(k theta),   rho > 0.

Boundary integrals over a uniform theta grid use the trapezoidal rule, which
is spectrally accurate for smooth periodic integrands. Curvature is signed
so that it is positive on convex domains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InvalidShapeError

__all__ = [
    "DomainShape",
    "GeometrySummary",
    "ShapeFileError",
    "rho_derivatives",
    "curvature_polar",
    "summarize",
    "min_rho",
    "max_rho",
    "contains_disk",
    "inradius_centered",
    "matched_disk_radius",
    "normalize",
    "arclength_tables",
    "random_shape",
    "read_shape",
    "write_shape",
    "format_shape",
    "parse_shape",
    "min_inradius_isoelastic",
    "CONVEXITY_TOL",
    "SYMMETRY_TOL",
    "CONSTRAINTS",
]

CONVEXITY_TOL = 1e-10
SYMMETRY_TOL = 1e-12
CONSTRAINTS = ("area", "perimeter", "elastic")


@dataclass(frozen=True)
class DomainShape:
    """Radial Fourier coefficients of a star-shaped boundary.

    ``cos_coeffs[k-1]`` and ``sin_coeffs[k-1]`` hold ``a_k`` and ``b_k``.
    """

    a0: float
    cos_coeffs: tuple[float, ...] = ()
    sin_coeffs: tuple[float, ...] = ()
    n_samples: int = 1024

    def __post_init__(self):
        a = tuple(float(v) for v in self.cos_coeffs)
        b = tuple(float(v) for v in self.sin_coeffs)
        k = max(len(a), len(b))
        a = a + (0.0,) * (k - len(a))
        b = b + (0.0,) * (k - len(b))
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "cos_coeffs", a)
        object.__setattr__(self, "sin_coeffs", b)
        n = int(self.n_samples)
        if n < 8 or n & (n - 1):
            raise ValueError("n_samples must be a power of two >= 8")
        if 2 * k >= n:
            raise ValueError("n_samples too small for the number of modes")
        object.__setattr__(self, "n_samples", n)

    @classmethod
    def disk(cls, radius: float, n_samples: int = 1024) -> "DomainShape":
        return cls(radius, n_samples=n_samples)

    @classmethod
    def cos_perturbation(cls, eps: float, k: int, a0: float = 1.0, n_samples: int = 1024):
        """``rho = a0 (1 + eps cos(k theta))``."""
        a = [0.0] * k
        a[k - 1] = a0 * eps
        return cls(a0, tuple(a), (0.0,) * k, n_samples)

    @property
    def modes(self) -> int:
        return len(self.cos_coeffs)

    @property
    def is_disk(self) -> bool:
        return all(v == 0.0 for v in self.cos_coeffs + self.sin_coeffs)

    def scaled(self, c: float) -> "DomainShape":
        """Dilation by ``c`` about the origin."""
        return replace(
            self,
            a0=c * self.a0,
            cos_coeffs=tuple(c * v for v in self.cos_coeffs),
            sin_coeffs=tuple(c * v for v in self.sin_coeffs),
        )

    def rotated(self, phi: float) -> "DomainShape":
        """Rotation by ``phi``: the new radius is ``rho(theta - phi)``."""
        a, b = [], []
        for k, (ak, bk) in enumerate(zip(self.cos_coeffs, self.sin_coeffs), start=1):
            c, s = math.cos(k * phi), math.sin(k * phi)
            a.append(ak * c - bk * s)
            b.append(ak * s + bk * c)
        return replace(self, cos_coeffs=tuple(a), sin_coeffs=tuple(b))

    def with_samples(self, n_samples: int) -> "DomainShape":
        return replace(self, n_samples=n_samples)

    def grid(self) -> np.ndarray:
        n = self.n_samples
        return 2 * np.pi * np.arange(n) / n


@dataclass(frozen=True)
class GeometrySummary:
    perimeter: float
    area: float
    elastic_energy: float
    total_curvature: float
    min_rho: float
    max_rho: float
    min_curvature: float
    max_curvature: float
    convex: bool
    centrally_symmetric: bool


def rho_derivatives(shape: DomainShape, theta):
    """``(rho, rho', rho'')`` at ``theta`` (scalar or array)."""
    th = np.asarray(theta, dtype=float)
    rho = np.full(th.shape, shape.a0)
    d1 = np.zeros(th.shape)
    d2 = np.zeros(th.shape)
    for k, (ak, bk) in enumerate(zip(shape.cos_coeffs, shape.sin_coeffs), start=1):
        if ak == 0.0 and bk == 0.0:
            continue
        c, s = np.cos(k * th), np.sin(k * th)
        rho += ak * c + bk * s
        d1 += k * (bk * c - ak * s)
        d2 -= k * k * (ak * c + bk * s)
    if th.ndim == 0:
        return float(rho), float(d1), float(d2)
    return rho, d1, d2


def _curvature(rho, d1, d2):
    return (rho**2 + 2 * d1**2 - rho * d2) / (rho**2 + d1**2) ** 1.5


def curvature_polar(shape: DomainShape, theta):
    """Signed curvature ``(rho^2 + 2 rho'^2 - rho rho'') / (rho^2 + rho'^2)^{3/2}``."""
    return _curvature(*rho_derivatives(shape, theta))


def _polished_extremum(shape: DomainShape, sign: float) -> float:
    """Global min (``sign=+1``) or max (``sign=-1``) of rho, Newton-polished."""
    n = max(4096, 64 * (shape.modes + 1))
    th = 2 * np.pi * np.arange(n) / n
    rho = sign * rho_derivatives(shape, th)[0]
    if shape.is_disk:
        return shape.a0
    # candidate local minima of sign*rho on the grid
    idx = np.flatnonzero((rho <= np.roll(rho, 1)) & (rho <= np.roll(rho, -1)))
    t = th[idx]
    for _ in range(30):
        _, d1, d2 = rho_derivatives(shape, t)
        # freeze candidates where sign*rho is not locally convex
        step = np.where(d2 * sign > 0, d1 / np.where(d2 == 0, 1.0, d2), 0.0)
        t = t - step
        if np.max(np.abs(step)) < 1e-15:
            break
    t = np.where(np.abs(t - th[idx]) > 4 * np.pi / n, th[idx], t)
    polished = sign * rho_derivatives(shape, t)[0]
    return sign * min(float(np.min(polished)), float(np.min(rho[idx])))


def min_rho(shape: DomainShape) -> float:
    return _polished_extremum(shape, 1.0)


def max_rho(shape: DomainShape) -> float:
    return _polished_extremum(shape, -1.0)


def _check_valid(shape):
    m = min_rho(shape)
    if not m > 0:
        raise InvalidShapeError(f"rho is not positive (min rho = {m:.6g})")
    return m


def _odd_magnitude(shape):
    odd = [
        abs(v)
        for k, pair in enumerate(zip(shape.cos_coeffs, shape.sin_coeffs), start=1)
        if k % 2 == 1
        for v in pair
    ]
    return max(odd, default=0.0)


def summarize(shape: DomainShape) -> GeometrySummary:
    """Perimeter, area, elastic energy and the hypothesis predicates."""
    lo = _check_valid(shape)
    th = shape.grid()
    h = 2 * np.pi / shape.n_samples
    rho, d1, d2 = rho_derivatives(shape, th)
    speed = np.sqrt(rho**2 + d1**2)
    kappa = _curvature(rho, d1, d2)
    return GeometrySummary(
        perimeter=float(h * speed.sum()),
        area=float(0.5 * h * (rho**2).sum()),
        elastic_energy=float(0.5 * h * (kappa**2 * speed).sum()),
        total_curvature=float(h * (kappa * speed).sum()),
        min_rho=lo,
        max_rho=max_rho(shape),
        min_curvature=float(kappa.min()),
        max_curvature=float(kappa.max()),
        convex=bool(kappa.min() >= -CONVEXITY_TOL),
        centrally_symmetric=_odd_magnitude(shape) <= SYMMETRY_TOL,
    )


def contains_disk(shape: DomainShape, R: float) -> bool:
    """Whether the centred disk of radius ``R`` lies in the closed domain."""
    return min_rho(shape) >= R


def inradius_centered(shape: DomainShape) -> float:
    """Distance from the origin to the boundary.

    For convex centrally symmetric domains this is the in-radius.
    """
    return min_rho(shape)


def matched_disk_radius(shape: DomainShape, constraint: str, summary: GeometrySummary | None = None) -> float:
    """Radius of the disk with the same area, perimeter or elastic energy."""
    g = summary or summarize(shape)
    if constraint == "area":
        return math.sqrt(g.area / math.pi)
    if constraint == "perimeter":
        return g.perimeter / (2 * math.pi)
    if constraint == "elastic":
        return math.pi / g.elastic_energy
    raise ValueError(f"unknown constraint {constraint!r}")


def normalize(shape: DomainShape, constraint: str, target_radius: float) -> DomainShape:
    """Dilate ``shape`` so its matched disk radius equals ``target_radius``.

    ``constraint="inclusion"`` scales so that ``min rho = target_radius``.
    """
    if not target_radius > 0:
        raise ValueError("target_radius must be positive")
    current = min_rho(shape) if constraint == "inclusion" else matched_disk_radius(shape, constraint)
    return shape.scaled(target_radius / current)


def _arclength_map(shape: DomainShape, n: int):
    """Counter-clockwise arclength S(theta) on a uniform grid, spectrally integrated."""
    th = 2 * np.pi * np.arange(n) / n
    rho, d1, _ = rho_derivatives(shape, th)
    speed = np.sqrt(rho**2 + d1**2)
    coef = np.fft.rfft(speed) / n
    total = 2 * np.pi * coef[0].real
    k = np.arange(coef.size)
    anti = np.zeros_like(coef)
    anti[1:] = coef[1:] / (1j * k[1:])

    def S(t):
        t = np.asarray(t, dtype=float)
        phase = np.exp(1j * np.multiply.outer(t, k[1:]))
        periodic = 2 * np.real(phase @ anti[1:])
        periodic -= 2 * np.real(anti[1:].sum())
        return coef[0].real * t + periodic

    def dS(t):
        r, p, _ = rho_derivatives(shape, t)
        return np.sqrt(r**2 + p**2)

    return total, S, dS


def arclength_tables(shape: DomainShape, M: int):
    """Boundary sampled at ``M`` equispaced arclength nodes, traversed clockwise.

    Returns ``(s, theta, kappa, tau)`` with ``tau`` of shape ``(M, 2)``. The
    outer normal is ``(-tau_2, tau_1)`` and ``d tau/ds = -kappa nu``.
    """
    if M < 64:
        raise ValueError("M must be at least 64")
    _check_valid(shape)
    n = max(shape.n_samples, 2 * M)
    L, S, dS = _arclength_map(shape, n)
    s = L * np.arange(M) / M
    # clockwise from theta = 0: the counter-clockwise arclength at node j is L - s_j
    target = np.where(s > 0, L - s, 0.0)
    th_grid = np.linspace(0.0, 2 * np.pi, n + 1)
    t = PchipInterpolator(S(th_grid), th_grid)(target)
    for _ in range(8):
        step = (S(t) - target) / dS(t)
        t = t - step
        if np.max(np.abs(step)) < 1e-15:
            break
    theta = np.mod(t, 2 * np.pi)
    rho, d1, d2 = rho_derivatives(shape, theta)
    speed = np.sqrt(rho**2 + d1**2)
    er = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    et = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
    tau = -(d1[:, None] * er + rho[:, None] * et) / speed[:, None]
    return s, theta, _curvature(rho, d1, d2), tau


def random_shape(rng: np.random.Generator, modes: int = 6, amplitude: float = 0.25, n_samples: int = 1024) -> DomainShape:
    """Random smooth star-shaped domain with ``a0 = 1`` and decaying coefficients."""
    while True:
        k = np.arange(1, modes + 1)
        scale = amplitude * rng.uniform(0.2, 1.0) / k**1.5
        a = rng.normal(size=modes) * scale
        b = rng.normal(size=modes) * scale
        shape = DomainShape(1.0, tuple(a), tuple(b), n_samples)
        if min_rho(shape) > 0.3:
            return shape


def min_inradius_isoelastic() -> float:
    """Smallest in-radius of a convex domain with elastic energy ``pi``.

    ``(2/pi) (int_0^{pi/2} sqrt(cos t) dt)^2``, integrated after ``t = pi/2 - u^2``
    which removes the square-root endpoint singularity.
    """
    u, w = np.polynomial.legendre.leggauss(60)
    b = math.sqrt(math.pi / 2)
    u = 0.5 * b * (u + 1)
    w = 0.5 * b * w
    integral = float(np.sum(w * 2 * u * np.sqrt(np.sin(u * u))))
    return 2 / math.pi * integral**2


class ShapeFileError(ValueError):
    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


def format_shape(shape: DomainShape) -> str:
    lines = [f"{shape.modes} {shape.n_samples}", repr(shape.a0)]
    lines += [f"{a!r} {b!r}" for a, b in zip(shape.cos_coeffs, shape.sin_coeffs)]
    return "\n".join(lines) + "\n"


def parse_shape(text: str) -> DomainShape:
    """Parse the plain-text shape format.

    Line 1 ``K n_samples``, line 2 ``a0``, then ``K`` lines ``a_k b_k``.
    """
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ShapeFileError(1, "empty shape file")

    def floats(entry, count):
        lineno, ln = entry
        parts = ln.split()
        if len(parts) != count:
            raise ShapeFileError(lineno, f"expected {count} numbers, got {len(parts)}")
        try:
            return [float(p) for p in parts]
        except ValueError as exc:
            raise ShapeFileError(lineno, str(exc)) from None

    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise ShapeFileError(lineno, "header must be 'K n_samples'")
    K, n_samples = int(parts[0]), int(parts[1])
    if len(lines) < 2:
        raise ShapeFileError(lineno + 1, "missing a0")
    (a0,) = floats(lines[1], 1)
    if len(lines) != K + 2:
        where = lines[-1][0] + 1 if len(lines) < K + 2 else lines[K + 2][0]
        raise ShapeFileError(where, f"expected {K} coefficient lines, got {len(lines) - 2}")
    ab = [floats(entry, 2) for entry in lines[2:]]
    try:
        return DomainShape(a0, tuple(p[0] for p in ab), tuple(p[1] for p in ab), n_samples)
    except ValueError as exc:
        raise ShapeFileError(lineno, str(exc)) from None


def read_shape(path) -> DomainShape:
    return parse_shape(Path(path).read_text())


def write_shape(shape: DomainShape, path) -> None:
    Path(path).write_text(format_shape(shape))
