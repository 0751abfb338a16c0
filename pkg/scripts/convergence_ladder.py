"""Mesh-refinement and truncation-depth studies for one shape."""

import argparse

import numpy as np

from robinext.disk import lambda2_disk
from robinext.exterior_eig import MeshSpec, convergence_study, eig_exterior, refine_ladder
from robinext.geometry import DomainShape


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=0.0, help="rho = 1 + eps cos(k theta)")
    ap.add_argument("-k", type=int, default=2)
    ap.add_argument("--alpha", type=float, default=-2.0)
    ap.add_argument("--levels", type=int, default=3)
    args = ap.parse_args()
    shape = DomainShape.cos_perturbation(args.eps, args.k) if args.eps else DomainShape.disk(1.0)
    omega = lambda2_disk(1.0, args.alpha)[0]
    base = MeshSpec(64, 32, 1.0 + 40.0 / omega, 1.2)
    table = convergence_study(shape, args.alpha, refine_ladder(base, args.levels))
    for m, vals in table.rows():
        print(f"{m.n_theta:5d} x {m.n_t:4d}  " + "  ".join(f"{v:.12f}" for v in vals))
    print("observed order", np.array2string(table.orders, precision=3))
    print("extrapolated  ", np.array2string(table.extrapolated, precision=12))
    if shape.is_disk:
        exact = lambda2_disk(1.0, args.alpha)[1]
        print(f"lambda2 extrapolation rel err {(table.extrapolated[1] - exact) / abs(exact):.2e}")

    print("\ntruncation depth (fixed element size near the boundary)")
    prev = None
    for T in (2.0, 3.0, 4.0, 6.0, 8.0):
        n_t = int(16 * T)
        lam = eig_exterior(shape, args.alpha, MeshSpec(128, n_t, T, 1.0), k=2).eigenvalues[1]
        step = "" if prev is None else f"  change {prev - lam:.3e}"
        print(f"T={T:4.1f}  lambda2={lam:.12f}{step}")
        prev = lam


if __name__ == "__main__":
    main()
