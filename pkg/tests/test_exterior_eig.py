import math
import warnings

import numpy as np
import pytest
from scipy import integrate
from scipy.sparse.linalg import eigsh

from robinext import exterior_eig as ee
from robinext import geometry
from robinext.disk import lambda1_disk, lambda2_disk
from robinext.geometry import DomainShape

COARSE = ee.MeshSpec(64, 32, 12.0, 1.1)


def linear_profile(disc):
    _, tt = disc.node_coords()
    return (disc.mesh.T - tt) / disc.mesh.T


@pytest.fixture(scope="module")
def disk_result():
    # the fourth vector is unbound and reaches the truncation layer
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return ee.eig_exterior(DomainShape.disk(1.0), -2.0, COARSE, k=4)


def test_mesh_validation():
    for kw in ({"n_theta": 63}, {"n_theta": 32}, {"n_t": 16}, {"T": 0.0}, {"grading": 1.5}, {"grading": 0.9}):
        with pytest.raises(ValueError):
            ee.MeshSpec(**kw)


def test_radial_nodes():
    t = ee.radial_nodes(ee.MeshSpec(64, 32, 10.0, 1.1))
    assert t[0] == 0.0 and t[-1] == pytest.approx(10.0, rel=1e-15)
    np.testing.assert_allclose(np.diff(t)[1:] / np.diff(t)[:-1], 1.1, rtol=1e-12)


def test_matrices_symmetric_and_mass_positive():
    disc = ee.assemble_parts(DomainShape.cos_perturbation(0.1, 3), COARSE)
    for m in (disc.stiffness, disc.boundary, disc.mass):
        assert abs(m - m.T).max() <= 1e-13 * abs(m).max()
    assert np.linalg.eigvalsh(disc.mass.toarray()).min() > 0
    assert disc.n_dofs == 64 * 32


def test_patch_disk_exact():
    a, T = 1.5, 6.0
    disc = ee.assemble_parts(DomainShape.disk(a), ee.MeshSpec(64, 32, T, 1.1))
    u = linear_profile(disc)
    assert u @ disc.stiffness @ u == pytest.approx(2 * math.pi * (a * T + T * T / 2) / T**2, rel=1e-12)
    assert u @ disc.mass @ u == pytest.approx(2 * math.pi * a * T / 3 + math.pi * T * T / 6, rel=1e-12)
    assert u @ disc.boundary @ u == pytest.approx(2 * math.pi * a, rel=1e-12)


def test_patch_general_shape_against_quadrature():
    shape = DomainShape(1.0, (0.0, 0.15, 0.05), (0.1, 0.0, 0.0))
    T = 5.0
    disc = ee.assemble_parts(shape, ee.MeshSpec(128, 32, T, 1.1))
    u = linear_profile(disc)

    def energy(t, th):
        rho, d1, _ = geometry.rho_derivatives(shape, th)
        r = rho + t
        return (d1 * d1 + r * r) / r / T**2

    def mass(t, th):
        rho = geometry.rho_derivatives(shape, th)[0]
        return (1 - t / T) ** 2 * (rho + t)

    k_ref = integrate.dblquad(energy, 0, 2 * math.pi, 0, T, epsabs=1e-12, epsrel=1e-12)[0]
    m_ref = integrate.dblquad(mass, 0, 2 * math.pi, 0, T, epsabs=1e-12, epsrel=1e-12)[0]
    assert u @ disc.stiffness @ u == pytest.approx(k_ref, rel=1e-8)
    assert u @ disc.mass @ u == pytest.approx(m_ref, rel=1e-8)
    assert u @ disc.boundary @ u == pytest.approx(geometry.summarize(shape).perimeter, rel=1e-8)


def test_lumped_boundary_same_constant_trace():
    shape = DomainShape.cos_perturbation(0.1, 2)
    a = ee.assemble_parts(shape, COARSE)
    b = ee.assemble_parts(shape, COARSE, boundary="lumped")
    u = linear_profile(a)
    assert u @ b.boundary @ u == pytest.approx(u @ a.boundary @ u, rel=1e-6)
    assert (b.boundary - ee.sps.diags(b.boundary.diagonal())).count_nonzero() == 0


def test_disk_upper_bounds(disk_result):
    exact = [lambda1_disk(1.0, -2.0)[1], lambda2_disk(1.0, -2.0)[1]]
    lam1, lam2 = disk_result.eigenvalues[0], disk_result.eigenvalues[1]
    assert lam1 >= exact[0]
    assert lam2 >= exact[1]
    assert lam1 == pytest.approx(exact[0], rel=2e-2)
    assert disk_result.eigenvalues[2] == pytest.approx(lam2, rel=1e-8)


def test_result_metadata(disk_result):
    assert disk_result.n_converged >= 3
    assert np.all(disk_result.residual_norms[:3] <= 1e-6)
    assert np.all(disk_result.truncation_fractions[:3] <= 1e-6)
    assert disk_result.truncation_indicator == disk_result.truncation_fractions.max()
    assert disk_result.alpha == -2.0 and disk_result.mesh == COARSE


def test_against_scipy_eigsh():
    shape = DomainShape.cos_perturbation(0.1, 2)
    res = ee.eig_exterior(shape, -2.0, COARSE, k=3)
    A, M = res.discretization.operator(-2.0), res.discretization.mass
    ref = np.sort(eigsh(A, k=3, M=M, sigma=res.shift, which="LM")[0])
    np.testing.assert_allclose(res.eigenvalues[:3], ref, rtol=1e-9)


def test_rotation_by_grid_angle():
    shape = DomainShape(1.0, (0.05, 0.1), (0.0, 0.03))
    a = ee.eig_exterior(shape, -2.0, COARSE, k=3).eigenvalues
    b = ee.eig_exterior(shape.rotated(2 * math.pi * 5 / 64), -2.0, COARSE, k=3).eigenvalues
    np.testing.assert_allclose(a, b, rtol=1e-8)


def test_truncation_monotone_on_nested_grids():
    shape = DomainShape.disk(1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        short = ee.eig_exterior(shape, -2.0, ee.MeshSpec(64, 32, 4.0, 1.0), k=2).eigenvalues
        long = ee.eig_exterior(shape, -2.0, ee.MeshSpec(64, 64, 8.0, 1.0), k=2).eigenvalues
    assert np.all(long <= short + 1e-12)


def test_short_truncation_warns():
    with pytest.warns(RuntimeWarning, match="increase T"):
        ee.eig_exterior(DomainShape.disk(1.0), -1.0, ee.MeshSpec(64, 32, 1.0, 1.0), k=2)


def test_ground_state_central_symmetry():
    res = ee.eig_exterior(DomainShape.cos_perturbation(0.1, 2), -2.0, COARSE, k=2)
    u = res.eigenvectors[:, 0].reshape(COARSE.n_t, COARSE.n_theta)
    shifted = np.roll(u, COARSE.n_theta // 2, axis=1)
    assert np.max(np.abs(shifted - u)) <= 1e-6 * np.max(np.abs(u))


@pytest.mark.filterwarnings("ignore:eigenvector mass fraction")
def test_weak_coupling_one_bound_state():
    res = ee.eig_exterior(DomainShape.disk(1.0), -0.3, ee.MeshSpec(64, 48, 60.0, 1.1), k=2)
    assert res.eigenvalues[0] < 0 < res.eigenvalues[1]
    assert lambda2_disk(1.0, -0.3) is None


def test_rejects_nonnegative_alpha():
    with pytest.raises(ValueError):
        ee.eig_exterior(DomainShape.disk(1.0), 0.5, COARSE)


def test_default_mesh_depth():
    m = ee.default_mesh(DomainShape.disk(1.0), -2.0)
    omega, _ = lambda2_disk(1.0, -2.0)
    assert m.T == pytest.approx(1.0 + 40.0 / omega, rel=1e-14)
    assert (m.n_theta, m.n_t, m.grading) == (256, 128, 1.05)


def test_default_shift_below_ground_state():
    for shape, alpha in ((DomainShape.disk(1.0), -2.0), (DomainShape.cos_perturbation(0.3, 5), -3.0)):
        res = ee.eig_exterior(shape, alpha, COARSE, k=1)
        assert ee.default_shift(shape, alpha) < res.eigenvalues[0]


def test_fixed_truncation_example():
    res = ee.eig_exterior(DomainShape.disk(1.0), -2.0, ee.MeshSpec(128, 64, 12.0, 1.1), k=3)
    lam1 = lambda1_disk(1.0, -2.0)[1]
    assert 0 <= res.eigenvalues[0] - lam1 <= 5e-3 * abs(lam1)


def test_clusters():
    groups = ee.clusters([-3.0, -1.0, -1.0 + 1e-9, 0.5])
    assert [len(g) for g in groups] == [1, 2, 1]


def test_refine_ladder_nests():
    ladder = ee.refine_ladder(ee.MeshSpec(64, 32, 10.0, 1.21), 3)
    assert [m.n_theta for m in ladder] == [64, 128, 256]
    coarse, fine = ee.radial_nodes(ladder[0]), ee.radial_nodes(ladder[1])
    np.testing.assert_allclose(fine[::2], coarse, rtol=1e-12, atol=1e-14)


def test_convergence_order_and_extrapolation():
    ladder = ee.refine_ladder(ee.MeshSpec(64, 32, 1.0 + 40 / 1.3315792183584554, 1.2), 3)
    table = ee.convergence_study(DomainShape.disk(1.0), -2.0, ladder, k=2)
    assert 1.7 <= table.orders[0] <= 2.3
    assert 1.7 <= table.orders[1] <= 2.3
    lam1 = lambda1_disk(1.0, -2.0)[1]
    lam2 = lambda2_disk(1.0, -2.0)[1]
    assert abs(table.extrapolated[0] - lam1) <= 1e-5 * abs(lam1)
    assert abs(table.extrapolated[1] - lam2) <= 1e-5 * abs(lam2)
    assert len(list(table.rows())) == 3


def test_convergence_study_needs_three_levels():
    with pytest.raises(ValueError):
        ee.convergence_study(DomainShape.disk(1.0), -2.0, [COARSE, COARSE])


def test_orthogonality_against_fem_ground_state():
    shape = DomainShape.cos_perturbation(0.1, 2)
    res = ee.eig_exterior(shape, -2.0, COARSE, k=2)
    omega, _ = lambda2_disk(geometry.min_rho(shape), -2.0)
    residuals = ee.orthogonality_against(res, omega, "cos")
    assert max(residuals) <= 1e-10


def test_dump_matrix(tmp_path):
    disc = ee.assemble_parts(DomainShape.disk(1.0), COARSE)
    path = tmp_path / "m.txt"
    ee.dump_matrix(disc.mass, path)
    lines = path.read_text().splitlines()
    assert len(lines) == disc.mass.nnz
    i, j, v = lines[0].split()
    assert (int(i), int(j)) == (0, 0) and float(v) == disc.mass[0, 0]
