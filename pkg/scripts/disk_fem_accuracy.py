"""Finite-element accuracy on disks and its split into angular and radial parts.

For each (R, alpha R) the relative errors of lambda_1 and lambda_2 are printed
on the reference mesh (256 x 128, T = R + 40/omega, grading 1.05), then with the
angular or radial resolution doubled, and with a lumped boundary mass.
"""

import argparse

from robinext.disk import lambda1_disk, lambda2_disk
from robinext.exterior_eig import MeshSpec, assemble_parts, eig_exterior
from robinext.geometry import DomainShape


def rel_errors(shape, alpha, mesh, boundary="consistent"):
    disc = assemble_parts(shape, mesh, boundary=boundary)
    ev = eig_exterior(shape, alpha, mesh, k=3, discretization=disc).eigenvalues
    R = shape.a0
    l1 = lambda1_disk(R, alpha)[1]
    l2 = lambda2_disk(R, alpha)[1]
    return (ev[0] - l1) / abs(l1), (ev[1] - l2) / abs(l2)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--radius", type=float, default=1.0)
    ap.add_argument("--alpha-r", type=float, nargs="+", default=[-1.2, -2.0, -5.0])
    args = ap.parse_args()
    R = args.radius
    shape = DomainShape.disk(R)
    print(f"{'alpha R':>8} {'variant':>22} {'err lambda1':>12} {'err lambda2':>12}")
    for ar in args.alpha_r:
        alpha = ar / R
        omega = lambda2_disk(R, alpha)[0]
        T = R + 40.0 / omega
        variants = [
            ("reference", MeshSpec(256, 128, T, 1.05), "consistent"),
            ("n_theta x2", MeshSpec(512, 128, T, 1.05), "consistent"),
            ("n_t x2, grading^0.5", MeshSpec(256, 256, T, 1.05**0.5), "consistent"),
            ("lumped boundary", MeshSpec(256, 128, T, 1.05), "lumped"),
        ]
        for name, mesh, boundary in variants:
            e1, e2 = rel_errors(shape, alpha, mesh, boundary)
            print(f"{ar:8.2f} {name:>22} {e1:12.3e} {e2:12.3e}")


if __name__ == "__main__":
    main()
