"""Upper bounds on the second exterior eigenvalue from explicit trial functions.

Two constructions are evaluated numerically:

* Inclusion (star-shaped, centrally symmetric ``Omega`` containing the
  centred disk of radius ``R``). The trial function is the restriction of a
  second disk eigenfunction ``K_1(w r) cos(theta)`` or ``K_1(w r) sin(theta)``,
  picked by the sign of ``gamma_omega``. Integrating by parts,

      lambda_2(Omega^c) <= lambda_2(B^c) + boundary_term / ||u||^2,

  and the boundary term is negative under the hypotheses.

* Isoelastic (convex ``Omega``, disk radius ``R = pi / E``). Trial functions
  ``f(t)`` and ``g(t) (tau_1 + i tau_2)`` in parallel coordinates ``(s, t)``
  built from the disk eigenfunctions; their exact Rayleigh quotients lie below
  the disk eigenvalues.

All radial integrals use :func:`robinext.quadrature.semi_infinite` and
exponentially scaled Bessel values; common exponential factors cancel in
the Rayleigh quotients and are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry, specfun
from .disk import lambda1_disk, lambda2_disk
from .errors import HypothesisError
from .geometry import DomainShape
from .quadrature import semi_infinite

__all__ = [
    "TrialBoundReport",
    "IsoelasticReport",
    "CriticalCouplingBounds",
    "gamma_omega",
    "monotonicity_hypotheses",
    "monotonicity_boundary_term",
    "boundary_term_estimates",
    "monotonicity_bound",
    "g_profile",
    "isoelastic_hypotheses",
    "isoelastic_rayleigh",
    "critical_coupling_bounds",
]


@dataclass(frozen=True)
class TrialBoundReport:
    alpha: float
    disk_radius: float
    lambda2_disk: float
    gamma_omega: float
    chosen_branch: str
    boundary_term: float
    trial_norm_sq: float
    upper_bound: float
    orthogonality_residuals: tuple[float, float, float]
    residual_source: str
    hypothesis_flags: dict = field(default_factory=dict)
    estimates: tuple[float, float] = (math.nan, math.nan)


@dataclass(frozen=True)
class IsoelasticReport:
    alpha: float
    R: float
    perimeter: float
    rayleigh_u: float
    rayleigh_v: float
    rayleigh_v_surrogate: float
    lambda1_disk: float
    lambda2_disk: float
    jensen_margin: float
    curvature_term: float
    curvature_term_surrogate: float
    orthogonality_residuals: tuple[float, float, float]
    hypothesis_flags: dict = field(default_factory=dict)

    @property
    def upper_bound(self) -> float:
        """Min-max bound on ``lambda_2`` from the two orthogonal trial functions."""
        return max(self.rayleigh_u, self.rayleigh_v)


@dataclass(frozen=True)
class CriticalCouplingBounds:
    from_inscribed: float | None
    from_elastic: float | None
    from_inradius: float | None


def _omega(R, alpha):
    second = lambda2_disk(R, alpha)
    if second is None:
        raise HypothesisError(["alpha_below_critical"])
    return second[0]


def _boundary_samples(shape):
    th = shape.grid()
    rho, d1, d2 = geometry.rho_derivatives(shape, th)
    return th, rho, d1, d2


def gamma_omega(shape: DomainShape, omega: float) -> float:
    """``int_0^{2pi} (rho'/rho) K_1(omega rho)^2 sin(theta) cos(theta) d theta``."""
    th, rho, d1, _ = _boundary_samples(shape)
    x = omega * rho
    x0 = x.min()
    weight = specfun.k1_scaled(x) ** 2 * np.exp(-2 * (x - x0))
    h = 2 * np.pi / shape.n_samples
    terms = d1 / rho * weight * np.sin(th) * np.cos(th)
    scaled = h * np.sum(terms)
    # cancellation noise (e.g. four-fold symmetric shapes) counts as zero
    if abs(scaled) <= 64 * np.finfo(float).eps * h * np.sum(np.abs(terms)):
        scaled = 0.0
    with np.errstate(under="ignore"):
        return float(scaled * math.exp(-2 * x0))


def monotonicity_hypotheses(shape: DomainShape, R: float, alpha: float) -> dict:
    g = geometry.summarize(shape)
    return {
        "star_shaped": g.min_rho > 0,
        "centrally_symmetric": g.centrally_symmetric,
        "contains_disk": geometry.contains_disk(shape, R),
        "alpha_below_critical": alpha < -1.0 / R,
        "non_disk": not (shape.is_disk and shape.a0 == R),
    }


def _require(flags, names):
    failed = [n for n in names if not flags[n]]
    if failed:
        raise HypothesisError(failed)


def _branch_and_parts(shape, R, alpha):
    omega = _omega(R, alpha)
    gam = gamma_omega(shape, omega)
    branch = "cos" if gam >= 0 else "sin"
    th, rho, d1, _ = _boundary_samples(shape)
    if branch == "cos":
        c, dc = np.cos(th), -np.sin(th)
    else:
        c, dc = np.sin(th), np.cos(th)
    x = omega * rho
    # J = K1(omega r), J' = omega K1'(omega r), both times exp(omega rho_min)
    x0 = x.min()
    damp = np.exp(-(x - x0))
    k0s, k1s = specfun.k0_scaled(x), specfun.k1_scaled(x)
    J = k1s * damp
    dJ = omega * (-k0s - k1s / x) * damp
    return omega, gam, branch, th, rho, d1, c, dc, J, dJ, x0


def monotonicity_boundary_term(shape: DomainShape, R: float, alpha: float, *, check: bool = True):
    """Exact ``int_{dOmega} u (-du/dnu + alpha u) dsigma`` for the selected trial function.

    Returns ``(boundary_term, branch)`` with ``branch`` in ``{"cos", "sin"}``.
    With ``check=False`` the hypotheses are not enforced (exploratory use).
    """
    if check:
        _require(
            monotonicity_hypotheses(shape, R, alpha),
            ["star_shaped", "centrally_symmetric", "contains_disk", "alpha_below_critical"],
        )
    omega, gam, branch, th, rho, d1, c, dc, J, dJ, x0 = _branch_and_parts(shape, R, alpha)
    speed = np.sqrt(rho**2 + d1**2)
    integrand = -rho * J * dJ * c**2 + d1 / rho * J**2 * dc * c + alpha * speed * J**2 * c**2
    h = 2 * np.pi / shape.n_samples
    with np.errstate(under="ignore"):
        return float(h * integrand.sum() * math.exp(-2 * x0)), branch


def boundary_term_estimates(shape: DomainShape, R: float, alpha: float) -> tuple[float, float]:
    """The two successive upper estimates of the boundary term.

    The first drops the ``-|gamma_omega|`` contribution; the second also
    replaces the line element by ``rho``. Both should dominate the exact term.
    """
    omega, gam, branch, th, rho, d1, c, dc, J, dJ, x0 = _branch_and_parts(shape, R, alpha)
    speed = np.sqrt(rho**2 + d1**2)
    h = 2 * np.pi / shape.n_samples
    first = h * np.sum(J * (-rho * dJ + alpha * speed * J) * c**2)
    second = h * np.sum(J * rho * (-dJ + alpha * J) * c**2)
    with np.errstate(under="ignore"):
        f = math.exp(-2 * x0)
        return float(first * f), float(second * f)


def g_profile(R: float, alpha: float, r_grid, *, scaled: bool = False):
    """``g(r) = -omega K_1'(omega r) + alpha K_1(omega r)`` for ``r >= R``.

    With ``scaled=True`` returns ``g(r) exp(omega r)``.
    """
    omega = _omega(R, alpha)
    x = omega * np.asarray(r_grid, dtype=float)
    k0s, k1s = specfun.k0_scaled(x), specfun.k1_scaled(x)
    vals = omega * (k0s + k1s / x) + alpha * k1s
    if not scaled:
        with np.errstate(under="ignore"):
            vals = vals * np.exp(-x)
    return vals if np.ndim(r_grid) else float(vals)


def _trial_norm_sq(shape, omega, c, rho, x0):
    """``int c^2 int_rho^inf K1(omega r)^2 r dr dtheta`` (times exp(2 x0))."""
    a = rho

    def integrand(r):
        x = omega * r
        return specfun.k1_scaled(x) ** 2 * np.exp(-2 * (x - omega * a[:, None])) * r

    radial = semi_infinite(integrand, a, 1.0 / omega)
    radial = radial * np.exp(-2 * (omega * a - x0))
    h = 2 * np.pi / shape.n_samples
    return float(h * np.sum(c**2 * radial))


def _orthogonality_symmetric(shape, R, alpha, omega, rho, th, x0, c_chosen):
    """Residuals against the radial disk ground state ``K_0(xi r)`` on ``Omega^c``."""
    xi, _ = lambda1_disk(R, alpha)
    a = rho

    def cross(r):
        x1, x2 = omega * r, xi * r
        base = omega * a[:, None] + xi * a[:, None]
        return specfun.k1_scaled(x1) * specfun.k0_scaled(x2) * np.exp(-(x1 + x2 - base)) * r

    def sq0(r):
        x2 = xi * r
        return specfun.k0_scaled(x2) ** 2 * np.exp(-2 * (x2 - xi * a[:, None])) * r

    def sq1(r):
        x1 = omega * r
        return specfun.k1_scaled(x1) ** 2 * np.exp(-2 * (x1 - omega * a[:, None])) * r

    scale = 1.0 / min(omega, xi)
    rc = semi_infinite(cross, a, scale) * np.exp(-(omega + xi) * a)
    r0 = semi_infinite(sq0, a, 1.0 / xi) * np.exp(-2 * xi * a)
    r1 = semi_infinite(sq1, a, 1.0 / omega) * np.exp(-2 * omega * a)
    h = 2 * np.pi / shape.n_samples
    n0 = math.sqrt(h * np.sum(r0))
    out = []
    for c in (np.cos(th), np.sin(th)):
        num = h * np.sum(c * rc)
        out.append(abs(num) / (n0 * math.sqrt(h * np.sum(c**2 * r1))))
    # boundary traces
    _, d1, _ = geometry.rho_derivatives(shape, th)
    speed = np.sqrt(rho**2 + d1**2)
    u = specfun.k1_scaled(omega * rho) * np.exp(-omega * rho) * c_chosen
    v = specfun.k0_scaled(xi * rho) * np.exp(-xi * rho)
    out.append(abs(np.sum(u * v * speed)) / math.sqrt(np.sum(u * u * speed) * np.sum(v * v * speed)))
    return tuple(float(v) for v in out)


def monotonicity_bound(shape: DomainShape, R: float, alpha: float, *, ground_state=None, check: bool = True) -> TrialBoundReport:
    """Upper bound ``lambda_2(B^c) + boundary_term / ||u||^2`` for an inclusion ``B`` in ``Omega``.

    Parameters
    ----------
    ground_state
        Optional :class:`robinext.exterior_eig.EigenResult` for the same shape
        and ``alpha``. When given, orthogonality residuals are measured against
        its lowest eigenvector; otherwise against the disk ground state, which
        only checks the symmetric-integrand identity (``residual_source`` is
        then ``"symmetry-analytic"``).
    check
        Enforce the hypotheses (raise :class:`HypothesisError`).
    """
    flags = monotonicity_hypotheses(shape, R, alpha)
    if check:
        _require(flags, ["star_shaped", "centrally_symmetric", "contains_disk", "alpha_below_critical"])
    omega, gam, branch, th, rho, d1, c, dc, J, dJ, x0 = _branch_and_parts(shape, R, alpha)
    term, _ = monotonicity_boundary_term(shape, R, alpha, check=False)
    norm_scaled = _trial_norm_sq(shape, omega, c, rho, x0)
    with np.errstate(under="ignore"):
        norm_sq = norm_scaled * math.exp(-2 * x0)
    term_scaled = term * math.exp(2 * x0)
    lam2 = -omega * omega
    if ground_state is not None:
        from .exterior_eig import orthogonality_against

        residuals = orthogonality_against(ground_state, omega, branch)
        source = "fem"
    else:
        residuals = _orthogonality_symmetric(shape, R, alpha, omega, rho, th, x0, c)
        source = "symmetry-analytic"
    return TrialBoundReport(
        alpha=float(alpha),
        disk_radius=float(R),
        lambda2_disk=lam2,
        gamma_omega=gam,
        chosen_branch=branch,
        boundary_term=term,
        trial_norm_sq=norm_sq,
        upper_bound=lam2 + term_scaled / norm_scaled,
        orthogonality_residuals=residuals,
        residual_source=source,
        hypothesis_flags=flags,
        estimates=boundary_term_estimates(shape, R, alpha),
    )


def isoelastic_hypotheses(shape: DomainShape, alpha: float, summary=None) -> dict:
    g = summary or geometry.summarize(shape)
    R = math.pi / g.elastic_energy
    return {
        "convex": g.convex,
        "non_disk": not shape.is_disk,
        "alpha_below_critical": alpha < -1.0 / R,
    }


def _jensen_margin(kappa, speed, h, L, R, t_grid):
    mean = h * np.sum(kappa[None, :] ** 2 / (1 + t_grid[:, None] * kappa[None, :]) * speed[None, :], axis=1) / L
    return float(np.min(1.0 / (R * (R + t_grid)) - mean))


def isoelastic_rayleigh(shape: DomainShape, alpha: float, *, check: bool = True) -> IsoelasticReport:
    """Exact Rayleigh quotients of the parallel-coordinate trial functions.

    ``R = pi / E(dOmega)``; ``f(t) = K_0(xi (t+R))`` and ``g(t) = K_1(omega (t+R))``
    come from the disk of radius ``R``. The curvature term of ``|grad v|^2`` is
    integrated exactly; the concavity surrogate ``(L/R) int g^2/(R+t) dt`` is
    reported alongside.
    """
    summ = geometry.summarize(shape)
    flags = isoelastic_hypotheses(shape, alpha, summ)
    if check:
        _require(flags, ["convex", "alpha_below_critical"])
    L = summ.perimeter
    R = math.pi / summ.elastic_energy
    xi, lam1 = lambda1_disk(R, alpha)
    omega = _omega(R, alpha)
    lam2 = -omega * omega

    # f, f' scaled by exp(xi (t+R)); g, g' scaled by exp(omega (t+R))
    def f_parts(t):
        x = xi * (t + R)
        damp = np.exp(-(x - xi * R))
        return specfun.k0_scaled(x) * damp, -xi * specfun.k1_scaled(x) * damp

    def g_parts(t):
        x = omega * (t + R)
        damp = np.exp(-(x - omega * R))
        k0s, k1s = specfun.k0_scaled(x), specfun.k1_scaled(x)
        return k1s * damp, omega * (-k0s - k1s / x) * damp

    def moments(parts, scale):
        def fn(t):
            v, dv = parts(t)
            return np.stack([v * v, v * v * t, dv * dv, dv * dv * t, v * v / (R + t)])

        return semi_infinite(fn, 0.0, scale)

    fm = moments(f_parts, 1.0 / xi)
    gm = moments(g_parts, 1.0 / omega)
    f0 = f_parts(np.array(0.0))[0]
    g0 = g_parts(np.array(0.0))[0]

    th = shape.grid()
    rho, d1, d2 = geometry.rho_derivatives(shape, th)
    speed = np.sqrt(rho**2 + d1**2)
    kappa = (rho**2 + 2 * d1**2 - rho * d2) / speed**3
    h = 2 * np.pi / shape.n_samples

    def kterm(t):
        v, _ = g_parts(t)
        return kappa[:, None] ** 2 / (1 + t * kappa[:, None]) * v * v

    kappa_radial = semi_infinite(kterm, np.zeros(th.size), 1.0 / omega)
    curvature_term = float(h * np.sum(kappa_radial * speed))
    surrogate = L / R * gm[4]

    norm_u = L * fm[0] + 2 * np.pi * fm[1]
    grad_u = L * fm[2] + 2 * np.pi * fm[3]
    norm_v = L * gm[0] + 2 * np.pi * gm[1]
    grad_v_base = L * gm[2] + 2 * np.pi * gm[3]
    ray_u = (grad_u + alpha * L * f0**2) / norm_u
    ray_v = (grad_v_base + curvature_term + alpha * L * g0**2) / norm_v
    ray_v_sur = (grad_v_base + surrogate + alpha * L * g0**2) / norm_v

    t_grid = np.concatenate([[0.0], np.geomspace(1e-3 * R, 20 * R, 80)])
    margin = _jensen_margin(kappa, speed, h, L, R, t_grid)

    # orthogonality of u, v (values, gradients, traces) via arclength tables
    _, _, kap_s, tau = geometry.arclength_tables(shape, shape.n_samples)
    ds = L / shape.n_samples
    tc = tau[:, 0] - 1j * tau[:, 1]
    T0 = ds * np.sum(tc)
    T1 = ds * np.sum(kap_s * tc)

    def cross(t):
        fv, fd = f_parts(t)
        gv, gd = g_parts(t)
        return np.stack([fv * gv, fv * gv * t, fd * gd, fd * gd * t])

    cm = semi_infinite(cross, 0.0, 1.0 / min(xi, omega))
    grad_v = grad_v_base + curvature_term
    residuals = (
        float(abs(cm[0] * T0 + cm[1] * T1) / math.sqrt(norm_u * norm_v)),
        float(abs(cm[2] * T0 + cm[3] * T1) / math.sqrt(grad_u * grad_v)),
        float(abs(T0) / L),
    )
    return IsoelasticReport(
        alpha=float(alpha),
        R=R,
        perimeter=L,
        rayleigh_u=float(ray_u),
        rayleigh_v=float(ray_v),
        rayleigh_v_surrogate=float(ray_v_sur),
        lambda1_disk=lam1,
        lambda2_disk=lam2,
        jensen_margin=margin,
        curvature_term=curvature_term,
        curvature_term_surrogate=float(surrogate),
        orthogonality_residuals=residuals,
        hypothesis_flags=flags,
    )


def critical_coupling_bounds(shape: DomainShape) -> CriticalCouplingBounds:
    """Lower bounds on the critical coupling that apply to ``shape``.

    ``from_inscribed = -1/min rho`` (centrally symmetric), ``from_elastic =
    -E/pi`` (convex), ``from_inradius = -1/inradius`` (convex and centrally
    symmetric). A bound whose hypotheses fail is ``None``.
    """
    g = geometry.summarize(shape)
    inscribed = -1.0 / g.min_rho if g.centrally_symmetric else None
    elastic = -g.elastic_energy / math.pi if g.convex else None
    inradius = -1.0 / geometry.inradius_centered(shape) if (g.convex and g.centrally_symmetric) else None
    return CriticalCouplingBounds(inscribed, elastic, inradius)
