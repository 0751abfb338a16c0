"""Finite-element eigenvalues of the Robin Laplacian on a truncated exterior.

The exterior of a star-shaped domain is mapped onto the periodic strip
``(theta, t) in [0, 2pi) x [0, T]`` by ``x = (rho(theta) + t)(cos theta, sin theta)``.
With ``r = rho + t`` the metric gives

    |grad u|^2 dx = (u_theta^2 - 2 rho' u_theta u_t + (rho'^2 + r^2) u_t^2) / r  dtheta dt,
    dx = r dtheta dt,

discretised with bilinear elements on a tensor grid that is uniform in
``theta`` and geometrically graded in ``t``. The Robin term lives on ``t = 0``
with line element ``sqrt(rho^2 + rho'^2) dtheta``; ``u = 0`` is imposed at
``t = T``. Dirichlet truncation and conforming elements shrink the trial
space, so every computed eigenvalue is an upper bound for the exterior one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sps
from scipy.sparse.linalg import splu

from . import geometry
from .disk import lambda1_disk, lambda2_disk
from .errors import ConvergenceError, FactorizationError
from .geometry import DomainShape

__all__ = [
    "MeshSpec",
    "EigenResult",
    "Discretization",
    "ConvergenceTable",
    "radial_nodes",
    "assemble_parts",
    "assemble",
    "solve_lowest",
    "default_mesh",
    "default_shift",
    "eig_exterior",
    "refine_ladder",
    "convergence_study",
    "orthogonality_against",
    "dump_matrix",
    "clusters",
]

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(3)
_GAUSS_X = 0.5 * (_GAUSS_X + 1)
_GAUSS_W = 0.5 * _GAUSS_W


@dataclass(frozen=True)
class MeshSpec:
    n_theta: int = 256
    n_t: int = 128
    T: float = 40.0
    grading: float = 1.05

    def __post_init__(self):
        if self.n_theta < 64 or self.n_theta % 2:
            raise ValueError("n_theta must be an even integer >= 64")
        if self.n_t < 32:
            raise ValueError("n_t must be >= 32")
        if not self.T > 0:
            raise ValueError("truncation depth T must be positive")
        if not 1.0 <= self.grading <= 1.3:
            raise ValueError("grading must lie in [1, 1.3]")


def radial_nodes(mesh: MeshSpec) -> np.ndarray:
    """``n_t + 1`` nodes on ``[0, T]`` with element sizes growing by ``grading``."""
    g = mesh.grading
    sizes = g ** np.arange(mesh.n_t)
    nodes = np.concatenate([[0.0], np.cumsum(sizes)])
    return mesh.T * nodes / nodes[-1]


@dataclass
class Discretization:
    """Assembled pieces for one shape and mesh; the Robin matrix is ``K + alpha B``."""

    shape: DomainShape
    mesh: MeshSpec
    theta: np.ndarray
    t: np.ndarray
    stiffness: sps.csr_matrix
    boundary: sps.csr_matrix
    mass: sps.csr_matrix

    def operator(self, alpha: float) -> sps.csr_matrix:
        return (self.stiffness + alpha * self.boundary).tocsr()

    @property
    def n_dofs(self) -> int:
        return self.mass.shape[0]

    def node_coords(self):
        """``(theta, t)`` of every unknown, in solution-vector order."""
        tt, th = np.meshgrid(self.t[:-1], self.theta, indexing="ij")
        return th.ravel(), tt.ravel()


def _dof(i, j, n_theta, n_t):
    """Unknown index of node ``(i, j)``; ``-1`` on the Dirichlet layer ``j = n_t``."""
    idx = j * n_theta + np.mod(i, n_theta)
    return np.where(j >= n_t, -1, idx)


def assemble_parts(shape: DomainShape, mesh: MeshSpec, *, boundary: str = "consistent") -> Discretization:
    """Stiffness, Robin boundary and mass matrices on the mapped tensor grid.

    ``boundary="lumped"`` uses trapezoidal (diagonal) boundary mass instead of
    the exact integral of the piecewise-linear trace.
    """
    geometry._check_valid(shape)
    nth, nt = mesh.n_theta, mesh.n_t
    hth = 2 * np.pi / nth
    theta = hth * np.arange(nth)
    t = radial_nodes(mesh)
    ht = np.diff(t)

    gx, gw = _GAUSS_X, _GAUSS_W
    # quadrature points in theta: (nth, 3)
    thq = theta[:, None] + hth * gx[None, :]
    rho_q, d1_q, _ = geometry.rho_derivatives(shape, thq)
    # radial quadrature points: (nt, 3)
    tq = t[:-1, None] + ht[:, None] * gx[None, :]

    # reference Q1 basis on [0,1]^2, local order (0,0),(1,0),(0,1),(1,1) in (xi, eta)
    xi = gx
    N1 = np.stack([1 - xi, xi])  # (2, 3)
    dN1 = np.array([-1.0, 1.0])  # derivative, constant

    # r at (element j, element i, q_t, q_th)
    r = tq[:, None, :, None] + rho_q[None, :, None, :]
    d1 = np.broadcast_to(d1_q[None, :, None, :], r.shape)
    w = (gw[:, None] * gw[None, :])[None, None] * (ht[:, None, None, None] * hth)

    local = [(0, 0), (1, 0), (0, 1), (1, 1)]  # (a_theta, a_t)
    # basis values / derivatives at (q_t, q_th): shape (3, 3)
    val = [np.outer(N1[at], N1[ath]) for ath, at in local]
    dth = [np.outer(N1[at], np.full(3, dN1[ath])) / hth for ath, at in local]
    dt_ = [np.outer(np.full(3, dN1[at]), N1[ath]) for ath, at in local]

    inv_r = 1.0 / r
    ke = np.empty((nt, nth, 4, 4))
    me = np.empty((nt, nth, 4, 4))
    for a in range(4):
        for b in range(a, 4):
            dta = dt_[a][None, None] / ht[:, None, None, None]
            dtb = dt_[b][None, None] / ht[:, None, None, None]
            integrand = (
                dth[a] * dth[b]
                - d1 * (dth[a] * dtb + dta * dth[b])
                + (d1**2 + r**2) * dta * dtb
            ) * inv_r
            ke[:, :, a, b] = ke[:, :, b, a] = np.sum(integrand * w, axis=(2, 3))
            me[:, :, a, b] = me[:, :, b, a] = np.sum(val[a] * val[b] * r * w, axis=(2, 3))

    jj, ii = np.meshgrid(np.arange(nt), np.arange(nth), indexing="ij")
    nodes = np.stack([_dof(ii + ath, jj + at, nth, nt) for ath, at in local], axis=-1)
    rows = np.broadcast_to(nodes[..., :, None], ke.shape).ravel()
    cols = np.broadcast_to(nodes[..., None, :], ke.shape).ravel()
    keep = (rows >= 0) & (cols >= 0)
    n = nth * nt
    K = sps.coo_matrix((ke.ravel()[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    M = sps.coo_matrix((me.ravel()[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()

    # Robin boundary on t = 0
    speed_q = np.sqrt(rho_q**2 + d1_q**2)  # (nth, 3)
    i0 = np.arange(nth)
    i1 = np.mod(i0 + 1, nth)
    if boundary == "consistent":
        be = np.einsum("aq,bq,iq,q->iab", N1, N1, speed_q, gw) * hth
        brow = np.stack([i0, i1], axis=1)
        rows_b = np.broadcast_to(brow[:, :, None], be.shape).ravel()
        cols_b = np.broadcast_to(brow[:, None, :], be.shape).ravel()
        B = sps.coo_matrix((be.ravel(), (rows_b, cols_b)), shape=(n, n)).tocsr()
    elif boundary == "lumped":
        r0, p0, _ = geometry.rho_derivatives(shape, theta)
        diag = np.zeros(n)
        diag[:nth] = hth * np.sqrt(r0**2 + p0**2)
        B = sps.diags(diag).tocsr()
    else:
        raise ValueError("boundary must be 'consistent' or 'lumped'")
    K = 0.5 * (K + K.T)
    M = 0.5 * (M + M.T)
    B = 0.5 * (B + B.T)
    return Discretization(shape, mesh, theta, t, K.tocsr(), B.tocsr(), M.tocsr())


def assemble(shape: DomainShape, alpha: float, mesh: MeshSpec):
    """``(K + alpha B, M)`` for the Robin form on the truncated exterior."""
    disc = assemble_parts(shape, mesh)
    return disc.operator(alpha), disc.mass


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    n_converged: int
    residual_norms: np.ndarray
    mesh: MeshSpec | None
    truncation_indicator: float
    iterations: int = 0
    shift: float = math.nan
    eigenvectors: np.ndarray | None = field(default=None, repr=False)
    truncation_fractions: np.ndarray | None = field(default=None, repr=False)
    discretization: Discretization | None = field(default=None, repr=False)
    alpha: float = math.nan


def _factorize(A, M, shift, retries):
    s = shift
    for _ in range(retries + 1):
        try:
            lu = splu((A - s * M).tocsc())
            if np.all(np.isfinite(lu.U.diagonal())) and np.min(np.abs(lu.U.diagonal())) > 0:
                return lu, s
        except RuntimeError:
            pass
        s *= 1.5
    raise FactorizationError(f"could not factorize A - shift M (last shift {s / 1.5:g})")


def solve_lowest(A, M, k: int, shift: float, *, tol: float = 1e-10, maxiter: int = 2000, block: int | None = None, seed: int = 0, retries: int = 3) -> EigenResult:
    """``k`` smallest eigenpairs of ``A u = lambda M u`` by shift-invert subspace iteration.

    ``A - shift M`` is factorized once; a block of ``k + 3`` vectors is iterated
    with Rayleigh-Ritz (hence M-orthonormal) until every wanted Ritz value
    changes by less than ``tol`` relative. A Ritz value below ``shift``
    triggers one refactorization at ``1.5 * shift``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = A.shape[0]
    p = min(block or k + 3, n)
    lu, shift = _factorize(A, M, shift, retries)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    prev = None
    for it in range(1, maxiter + 1):
        Y = lu.solve(M @ X)
        Ar = Y.T @ (A @ Y)
        Mr = Y.T @ (M @ Y)
        Ar = 0.5 * (Ar + Ar.T)
        Mr = 0.5 * (Mr + Mr.T)
        vals, Q = scipy.linalg.eigh(Ar, Mr)
        X = Y @ Q
        if vals[0] < shift and retries > 0:
            return solve_lowest(A, M, k, 1.5 * min(shift, vals[0]) - 1.0, tol=tol, maxiter=maxiter, block=block, seed=seed, retries=retries - 1)
        cur = vals[:k]
        if prev is not None and np.all(np.abs(cur - prev) <= tol * np.maximum(np.abs(cur), 1e-300)):
            break
        prev = cur
    else:
        raise ConvergenceError(f"subspace iteration did not converge in {maxiter} iterations")
    vecs = X[:, :k]
    MX = M @ vecs
    res = A @ vecs - MX * vals[:k]
    mnorm = np.sqrt(np.einsum("ij,ij->j", vecs, MX))
    resid = np.linalg.norm(res, axis=0) / mnorm
    return EigenResult(
        eigenvalues=vals[:k].copy(),
        n_converged=k,
        residual_norms=resid,
        mesh=None,
        truncation_indicator=math.nan,
        iterations=it,
        shift=shift,
        eigenvectors=vecs,
    )


def _reference_decay(shape, alpha):
    R_ref = geometry.matched_disk_radius(shape, "area")
    second = lambda2_disk(R_ref, alpha)
    w = second[0] if second is not None else lambda1_disk(R_ref, alpha)[0]
    return R_ref, w


def default_mesh(shape: DomainShape, alpha: float, n_theta: int = 256, n_t: int = 128, grading: float = 1.05) -> MeshSpec:
    """Mesh with ``T = R_ref + 40 / w_ref`` from the area-matched disk."""
    R_ref, w = _reference_decay(shape, alpha)
    return MeshSpec(n_theta, n_t, R_ref + 40.0 / w, grading)


def default_shift(shape: DomainShape, alpha: float) -> float:
    """A shift a little below the expected ground state.

    For convex shapes the ground state of the disk of radius ``max rho`` is
    the guide. Concave boundary pieces push the ground state lower; there the
    strong-coupling estimate ``-alpha^2 - |alpha| max(-kappa)`` is used.
    :func:`solve_lowest` refactorizes if a Ritz value still lands below.
    """
    g = geometry.summarize(shape)
    concave = max(0.0, -g.min_curvature)
    guide = lambda1_disk(g.max_rho, alpha)[1]
    if concave > 0:
        guide = min(guide, -alpha * alpha - abs(alpha) * concave)
    return 1.25 * guide - 0.01 * alpha * alpha


def _shell_fractions(disc, vecs):
    _, tt = disc.node_coords()
    outer = tt >= 0.9 * disc.mesh.T
    Mv = disc.mass @ vecs
    total = np.einsum("ij,ij->j", vecs, Mv)
    shell = np.einsum("ij,ij->j", vecs[outer], Mv[outer])
    return np.abs(shell / total)


def eig_exterior(shape: DomainShape, alpha: float, mesh: MeshSpec | None = None, k: int = 3, *, shift: float | None = None, tol: float = 1e-10, seed: int = 0, discretization: Discretization | None = None) -> EigenResult:
    """Lowest ``k`` eigenvalues of the Robin Laplacian on the truncated exterior."""
    if not alpha < 0:
        raise ValueError("eig_exterior requires alpha < 0")
    disc = discretization
    if disc is None:
        disc = assemble_parts(shape, mesh or default_mesh(shape, alpha))
    A = disc.operator(alpha)
    res = solve_lowest(A, disc.mass, k, default_shift(shape, alpha) if shift is None else shift, tol=tol, seed=seed)
    frac = _shell_fractions(disc, res.eigenvectors)
    indicator = float(frac.max())
    if indicator > 1e-6:
        warnings.warn(f"eigenvector mass fraction {indicator:.2e} in the outer shell; increase T", RuntimeWarning, stacklevel=2)
    return replace(res, mesh=disc.mesh, truncation_indicator=indicator, truncation_fractions=frac, discretization=disc, alpha=float(alpha))


def clusters(values, rtol: float = 1e-6):
    """Group sorted eigenvalues whose relative gaps are below ``rtol``."""
    groups = []
    for v in values:
        if groups and abs(v - groups[-1][-1]) <= rtol * max(abs(v), abs(groups[-1][-1])):
            groups[-1].append(v)
        else:
            groups.append([v])
    return groups


def refine_ladder(base: MeshSpec, levels: int = 3) -> list[MeshSpec]:
    """Meshes with doubled resolution per level; grading is square-rooted so grids nest."""
    out = [base]
    for _ in range(levels - 1):
        m = out[-1]
        out.append(MeshSpec(2 * m.n_theta, 2 * m.n_t, m.T, math.sqrt(m.grading)))
    return out


@dataclass
class ConvergenceTable:
    meshes: list[MeshSpec]
    eigenvalues: np.ndarray  # (levels, k)
    orders: np.ndarray  # (k,) observed order from the last three levels
    extrapolated: np.ndarray  # (k,)

    def rows(self):
        for m, vals in zip(self.meshes, self.eigenvalues):
            yield m, vals


def convergence_study(shape: DomainShape, alpha: float, ladder: list[MeshSpec], k: int = 3) -> ConvergenceTable:
    """Eigenvalues on a refinement ladder with observed order and Richardson extrapolation."""
    if len(ladder) < 3:
        raise ValueError("need at least three meshes")
    vals = np.array([eig_exterior(shape, alpha, m, k).eigenvalues for m in ladder])
    d1 = vals[-2] - vals[-3]
    d2 = vals[-1] - vals[-2]
    with np.errstate(divide="ignore", invalid="ignore"):
        orders = np.log2(np.abs(d1 / d2))
        p = np.where(np.isfinite(orders) & (orders > 0.5), orders, 2.0)
        extrap = vals[-1] + d2 / (2.0**p - 1.0)
    return ConvergenceTable(list(ladder), vals, orders, extrap)


def orthogonality_against(result: EigenResult, omega: float, branch: str = "cos") -> tuple[float, float, float]:
    """Normalised overlaps of the disk second eigenfunctions with the FEM ground state.

    Returns ``(<K1 cos, u1>, <K1 sin, u1>, <u_branch, u1>_boundary)``, each
    divided by the product of the corresponding norms.
    """
    from . import specfun

    disc = result.discretization
    if disc is None or result.eigenvectors is None:
        raise ValueError("EigenResult carries no discretization")
    th, tt = disc.node_coords()
    r = geometry.rho_derivatives(disc.shape, th)[0] + tt
    x = omega * r
    radial = specfun.k1_scaled(x) * np.exp(-(x - x.min()))
    u1 = result.eigenvectors[:, 0]
    M, B = disc.mass, disc.boundary
    out = []
    n1 = math.sqrt(u1 @ (M @ u1))
    for c in (np.cos(th), np.sin(th)):
        v = radial * c
        out.append(abs(v @ (M @ u1)) / (math.sqrt(v @ (M @ v)) * n1))
    v = radial * (np.cos(th) if branch == "cos" else np.sin(th))
    nb = math.sqrt(abs(u1 @ (B @ u1)) * abs(v @ (B @ v)))
    out.append(abs(v @ (B @ u1)) / nb)
    return tuple(float(o) for o in out)


def dump_matrix(matrix, path) -> None:
    """Write ``row col value`` triplets (0-based) for external checking."""
    coo = sps.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with Path(path).open("w") as fh:
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{int(i)} {int(j)} {float(v)!r}\n")
