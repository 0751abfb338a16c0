"""End-to-end acceptance checks, shared by ``robinext verify`` and the test suite.

Each ``criterion_*`` function returns a :class:`CriterionResult`; none of them
raise on a failed comparison. :func:`run` executes a selection and returns the
scoreboard.
"""

from __future__ import annotations

import contextlib
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import geometry, specfun, trial_bounds
from .config import MeshConfig, SweepSpec
from .disk import fiber_equation, lambda1_disk, lambda2_disk
from .exterior_eig import MeshSpec, clusters, eig_exterior
from .geometry import DomainShape
from .sweep import DISK_ROW_RTOL, run_sweep

__all__ = ["CriterionResult", "CRITERIA", "QUICK", "run", "perturbed_bessel", "scoreboard"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float = 0.0
    budget: float = math.inf
    details: list[str] = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d}. {self.name} ({self.seconds:.1f}s)"


class _Tracker:
    def __init__(self):
        self.ok = True
        self.details = []

    def check(self, cond, message):
        if not cond:
            self.ok = False
            self.details.append(message)
        return cond

    def note(self, message):
        self.details.append(message)


@contextlib.contextmanager
def perturbed_bessel(delta: float):
    """Temporarily scale the library's ``K_0`` by ``1 + delta`` (negative control)."""
    original = specfun._scaled_01

    def wrapped(x):
        k0s, k1s = original(x)
        return k0s * (1.0 + delta), k1s

    specfun._scaled_01 = wrapped
    try:
        yield
    finally:
        specfun._scaled_01 = original


def _k1_prime_integral(x, h=0.02, t_max=22.0):
    """``e^x K_1'(x) = -int_0^inf exp(-x (cosh t - 1)) cosh(t)^2 dt`` by the trapezoid rule.

    The integrand is entire and decays doubly exponentially, so the trapezoid
    rule converges geometrically in ``1/h``.
    """
    t = np.arange(0.0, t_max + h, h)
    w = np.full(t.size, h)
    w[0] = h / 2
    ct = np.cosh(t)
    with np.errstate(under="ignore"):
        f = np.exp(-np.multiply.outer(x, ct - 1.0)) * ct**2
    return -(f @ w)


def criterion_bessel() -> CriterionResult:
    tr = _Tracker()
    x = np.logspace(-4, math.log10(600.0), 1000)
    k0s = specfun.k0_scaled(x)
    k1s = specfun.k1_scaled(x)
    deriv = _k1_prime_integral(x)
    resid = np.abs(deriv - (-k0s - k1s / x)) / np.abs(deriv)
    tr.check(resid.max() <= 1e-12, f"derivative identity residual {resid.max():.2e} > 1e-12")
    ratio = specfun.k_ratio(x)
    lower = 2 * x / (1 + np.sqrt(1 + 4 * x * x))
    tr.check(np.all(ratio < 1), "K0/K1 < 1 violated")
    tr.check(np.all(ratio >= lower), f"K0/K1 lower bound violated at {np.count_nonzero(ratio < lower)} points")
    tr.note(f"max identity residual {resid.max():.2e}")
    return CriterionResult(1, "Bessel identity suite", tr.ok, budget=1.0, details=tr.details)


DISK_CASES = [(R, c / R) for R in (0.5, 1.0, 2.0) for c in (-1.2, -2.0, -5.0)]


def criterion_disk(cases=DISK_CASES) -> CriterionResult:
    tr = _Tracker()
    for R, alpha in cases:
        xi, lam1 = lambda1_disk(R, alpha)
        omega, lam2 = lambda2_disk(R, alpha)
        r0 = abs(fiber_equation(0, xi * R, alpha * R))
        r1 = abs(fiber_equation(1, omega * R, alpha * R))
        tr.check(max(r0, r1) <= 1e-12, f"R={R} alpha={alpha}: transcendental residual {max(r0, r1):.1e}")
        mesh = MeshSpec(256, 128, R + 40.0 / omega, 1.05)
        ev = eig_exterior(DomainShape.disk(R), alpha, mesh, k=3).eigenvalues
        e1 = (ev[0] - lam1) / abs(lam1)
        e2 = (ev[1] - lam2) / abs(lam2)
        tr.note(f"R={R} alpha={alpha:.4g}: rel err lambda1 {e1:.2e}, lambda2 {e2:.2e}")
        tr.check(abs(e1) <= 1e-3, f"R={R} alpha={alpha:.4g}: lambda1 rel err {e1:.2e} > 1e-3")
        tr.check(abs(e2) <= 1e-3, f"R={R} alpha={alpha:.4g}: lambda2 rel err {e2:.2e} > 1e-3")
        tr.check(ev[0] >= lam1 and ev[1] >= lam2, f"R={R} alpha={alpha:.4g}: FEM below exact value")
        pair = abs(ev[2] - ev[1]) / abs(ev[1])
        tr.check(pair <= 1e-6, f"R={R} alpha={alpha:.4g}: lambda2 pair splits by {pair:.1e}")
    return CriterionResult(2, "Disk exactness", tr.ok, budget=300.0, details=tr.details)


def _flip_point(R, tol=1e-10):
    lo, hi = -2.0 / R, -0.5 / R  # present at lo, absent at hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if lambda2_disk(R, mid) is None:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def criterion_critical() -> CriterionResult:
    tr = _Tracker()
    for R in (0.5, 1.0, 2.0):
        flip = _flip_point(R)
        tr.check(abs(flip + 1.0 / R) <= 1e-8, f"R={R}: flip at {flip!r}, expected {-1.0 / R!r}")
    return CriterionResult(3, "Critical coupling", tr.ok, budget=1.0, details=tr.details)


def criterion_monotone_radius() -> CriterionResult:
    tr = _Tracker()
    radii = np.round(np.arange(0.5, 3.0 + 1e-9, 0.1), 10)
    lam1 = np.array([lambda1_disk(R, -1.0)[1] for R in radii])
    tr.check(np.all(np.diff(lam1) < 0), "lambda1(R) at alpha=-1 is not strictly decreasing")
    radii2 = np.round(np.arange(1.1 / 2.0, 3.0 + 1e-9, 0.05), 10)
    lam2 = np.array([lambda2_disk(R, -2.0)[1] for R in radii2])
    tr.check(np.all(np.diff(lam2) < 0), "lambda2(R) at alpha=-2 is not strictly decreasing")
    return CriterionResult(4, "Radius monotonicity", tr.ok, budget=1.0, details=tr.details)


def criterion_inclusion() -> CriterionResult:
    tr = _Tracker()
    for k in (2, 4):
        for eps in (0.05, 0.1, 0.2):
            shape = DomainShape.cos_perturbation(eps, k)
            R = 1.0 - eps
            for c in (-1.5, -2.0, -4.0):
                alpha = c / R
                tag = f"cos{k} eps={eps} alpha={alpha:.4g}"
                rep = trial_bounds.monotonicity_bound(shape, R, alpha)
                lam2 = rep.lambda2_disk
                tr.check(rep.boundary_term < 0, f"{tag}: boundary term {rep.boundary_term:.3e} >= 0")
                tr.check(rep.upper_bound < lam2, f"{tag}: trial bound {rep.upper_bound:.6g} >= {lam2:.6g}")
                fem = eig_exterior(shape, alpha, k=3).eigenvalues[1]
                tr.check(fem < lam2, f"{tag}: FEM lambda2 {fem:.6g} >= {lam2:.6g}")
    return CriterionResult(5, "Inclusion monotonicity suite", tr.ok, budget=600.0, details=tr.details)


def criterion_isoelastic() -> CriterionResult:
    tr = _Tracker()
    for eps in (0.05, 0.1):
        shape = geometry.normalize(DomainShape.cos_perturbation(eps, 2), "elastic", 1.0)
        tr.check(geometry.summarize(shape).convex, f"eps={eps}: shape not convex")
        for alpha in (-1.5, -2.0, -4.0):
            tag = f"eps={eps} alpha={alpha}"
            rep = trial_bounds.isoelastic_rayleigh(shape, alpha)
            tr.check(rep.rayleigh_u < rep.lambda1_disk, f"{tag}: R[u] {rep.rayleigh_u:.6g} >= lambda1 {rep.lambda1_disk:.6g}")
            tr.check(rep.rayleigh_v < rep.lambda2_disk, f"{tag}: R[v] {rep.rayleigh_v:.6g} >= lambda2 {rep.lambda2_disk:.6g}")
            tr.check(rep.jensen_margin > 0, f"{tag}: jensen margin {rep.jensen_margin:.2e} <= 0")
            worst = max(rep.orthogonality_residuals)
            tr.check(worst <= 1e-10, f"{tag}: orthogonality residual {worst:.1e}")
            fem = eig_exterior(shape, alpha, k=3).eigenvalues[1]
            tr.check(fem < rep.lambda2_disk, f"{tag}: FEM lambda2 {fem:.6g} >= {rep.lambda2_disk:.6g}")
    return CriterionResult(6, "Isoelastic suite", tr.ok, budget=600.0, details=tr.details)


def criterion_geometry(n_shapes=50, seed=0) -> CriterionResult:
    tr = _Tracker()
    rng = np.random.default_rng(seed)
    n_convex = 0
    for i in range(n_shapes):
        g = geometry.summarize(geometry.random_shape(rng))
        tr.check(abs(g.total_curvature - 2 * math.pi) <= 1e-10, f"shape {i}: total curvature {g.total_curvature!r}")
        tr.check(g.elastic_energy**2 * g.area >= math.pi**3 * (1 - 1e-12), f"shape {i}: E^2 A < pi^3")
        if g.convex:
            n_convex += 1
            tr.check(g.elastic_energy >= math.pi * g.perimeter / (2 * g.area) * (1 - 1e-12), f"shape {i}: Gage inequality fails")
    d = geometry.summarize(DomainShape.disk(1.3))
    tr.check(abs(d.elastic_energy - math.pi * d.perimeter / (2 * d.area)) <= 1e-10, "disk: Gage equality off")
    tr.check(abs(d.elastic_energy**2 * d.area - math.pi**3) <= 1e-10 * math.pi**3, "disk: BH equality off")
    tr.note(f"{n_convex} of {n_shapes} random shapes convex")
    if n_convex == 0:
        tr.check(False, "no convex samples")
    return CriterionResult(7, "Geometry inequalities", tr.ok, budget=60.0, details=tr.details)


def criterion_curvature_chain() -> CriterionResult:
    tr = _Tracker()
    for k, eps in ((2, 0.05), (3, 0.04), (4, 0.02)):
        base = DomainShape.cos_perturbation(eps, k)
        g = geometry.summarize(base)
        R = 1.0 / g.max_curvature  # max kappa <= 1/R with equality
        tag = f"cos{k} eps={eps}"
        tr.check(g.elastic_energy < math.pi / R, f"{tag}: E >= pi/R")
        tr.check(geometry.contains_disk(base, R), f"{tag}: disk of radius R not contained")
        R_star = math.pi / g.elastic_energy
        tr.check(R_star > R, f"{tag}: R* <= R")
        for c in (-1.5, -3.0):
            alpha = c / R
            rep = trial_bounds.isoelastic_rayleigh(base, alpha)
            lam_star = lambda2_disk(R_star, alpha)[1]
            lam_B = lambda2_disk(R, alpha)[1]
            tr.check(rep.upper_bound <= lam_star, f"{tag} alpha={alpha:.4g}: bound above lambda2(B*)")
            tr.check(lam_star < lam_B, f"{tag} alpha={alpha:.4g}: lambda2(B*) >= lambda2(B)")
    return CriterionResult(8, "Curvature-bound chain", tr.ok, budget=60.0, details=tr.details)


def criterion_inradius_constant() -> CriterionResult:
    tr = _Tracker()
    v = geometry.min_inradius_isoelastic()
    tr.check(abs(v - 0.914) <= 1e-3, f"constant {v!r} not within 1e-3 of 0.914")
    tr.note(f"constant = {v:.15f}")
    return CriterionResult(9, "Isoelastic in-radius constant", tr.ok, budget=1.0, details=tr.details)


def criterion_conjecture_probe(jobs: int = 1) -> CriterionResult:
    tr = _Tracker()
    for constraint in ("area", "perimeter"):
        for k in (2, 4):
            spec = SweepSpec(
                family="cos2k-perturbation",
                constraint=constraint,
                alpha_grid=(-1.5, -2.0),
                family_params={"k": k, "eps": (0.0, 0.1)},
                mesh=MeshConfig(),
                text=f"probe {constraint} {k}",
            )
            res = run_sweep(spec, jobs)
            tr.check(not res.failures, f"{constraint} cos{k}: failed jobs {res.failures}")
            for row in res.rows:
                if row.is_disk:
                    tol = DISK_ROW_RTOL * abs(row.lambda2_disk)
                    tr.check(abs(row.diff) <= tol, f"{constraint} cos{k} disk row alpha={row.alpha}: |diff| {abs(row.diff):.2e} > {tol:.2e}")
                else:
                    sign = "<" if row.diff < 0 else ">="
                    tr.note(f"{constraint} cos{k} eps={row.eps} alpha={row.alpha}: diff {row.diff:.4e} ({sign} 0)")
    return CriterionResult(10, "Conjecture probe", tr.ok, budget=600.0, details=tr.details)


CRITERIA = {
    1: criterion_bessel,
    2: criterion_disk,
    3: criterion_critical,
    4: criterion_monotone_radius,
    5: criterion_inclusion,
    6: criterion_isoelastic,
    7: criterion_geometry,
    8: criterion_curvature_chain,
    9: criterion_inradius_constant,
    10: criterion_conjecture_probe,
}
QUICK = (1, 3, 4, 7, 8, 9)


def run(selection=None) -> list[CriterionResult]:
    out = []
    for n in selection or sorted(CRITERIA):
        t0 = time.perf_counter()
        res = CRITERIA[n]()
        res.seconds = time.perf_counter() - t0
        if res.seconds > res.budget:
            res.details.append(f"runtime {res.seconds:.1f}s over budget {res.budget:.0f}s")
            res.passed = False
        out.append(res)
    return out


def scoreboard(results, verbose=False) -> str:
    lines = []
    for r in results:
        lines.append(r.line())
        if verbose or not r.passed:
            lines += [f"       {d}" for d in r.details]
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} criteria passed")
    return "\n".join(lines)
