"""Command line interface: ``robinext {disk,shape-info,bound,eig,sweep,verify}``."""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, acceptance, geometry, trial_bounds
from .config import SpecError, load_spec
from .disk import disk_spectrum_full, lambda1_disk, lambda2_disk
from .errors import ConvergenceError, FactorizationError, HypothesisError
from .exterior_eig import MeshSpec, clusters, convergence_study, default_mesh, dump_matrix, eig_exterior, refine_ladder
from .geometry import ShapeFileError
from .sweep import execute, format_float, replay_manifest


def _fmt(v):
    if v is None:
        return "none"
    return format_float(v)


def _table(pairs):
    width = max(len(k) for k, _ in pairs)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in pairs)


def _append_csv(path, header, row):
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(header)
        w.writerow(row)


def cmd_disk(args):
    spec = disk_spectrum_full(args.radius, args.alpha)
    pairs = [
        ("R", _fmt(spec.radius)),
        ("alpha", _fmt(spec.alpha)),
        ("xi", _fmt(spec.xi)),
        ("omega", _fmt(spec.omega)),
        ("lambda1", _fmt(spec.lambda1)),
        ("lambda2", _fmt(spec.lambda2)),
        ("alpha_star", _fmt(spec.critical_coupling)),
        ("n_star", str(spec.n_star)),
        ("N_alpha", str(spec.count)),
    ]
    print(_table(pairs))
    if args.csv:
        _append_csv(args.csv, [k for k, _ in pairs], [v for _, v in pairs])
    return 0


def _load(path):
    try:
        return geometry.read_shape(path)
    except (ShapeFileError, OSError) as exc:
        raise SystemExit(f"{path}: {exc}") from None


def cmd_shape_info(args):
    shape = _load(args.shape_file)
    g = geometry.summarize(shape)
    cc = trial_bounds.critical_coupling_bounds(shape)
    gage_ok = g.elastic_energy >= math.pi * g.perimeter / (2 * g.area) * (1 - 1e-12)
    bh_ok = g.elastic_energy**2 * g.area >= math.pi**3 * (1 - 1e-12)
    pairs = [
        ("L", _fmt(g.perimeter)),
        ("A", _fmt(g.area)),
        ("E", _fmt(g.elastic_energy)),
        ("total_curvature", _fmt(g.total_curvature)),
        ("convex", str(g.convex)),
        ("centrally_symmetric", str(g.centrally_symmetric)),
        ("min_rho", _fmt(g.min_rho)),
        ("max_rho", _fmt(g.max_rho)),
        ("R_area", _fmt(geometry.matched_disk_radius(shape, "area", g))),
        ("R_perimeter", _fmt(geometry.matched_disk_radius(shape, "perimeter", g))),
        ("R_elastic", _fmt(geometry.matched_disk_radius(shape, "elastic", g))),
        ("alpha_star_from_inscribed", _fmt(cc.from_inscribed)),
        ("alpha_star_from_elastic", _fmt(cc.from_elastic)),
        ("alpha_star_from_inradius", _fmt(cc.from_inradius)),
        ("gage_check", ("PASS" if gage_ok else "FAIL") if g.convex else "n/a (not convex)"),
        ("bh_check", "PASS" if bh_ok else "FAIL"),
    ]
    print(_table(pairs))
    return 0


def cmd_bound(args):
    shape = _load(args.shape_file)
    try:
        if args.mode == "monotonicity":
            R = args.radius if args.radius is not None else geometry.min_rho(shape)
            rep = trial_bounds.monotonicity_bound(shape, R, args.alpha, check=not args.exploratory)
            pairs = [
                ("mode", "monotonicity"),
                ("alpha", _fmt(rep.alpha)),
                ("disk_radius", _fmt(rep.disk_radius)),
                ("lambda2_disk", _fmt(rep.lambda2_disk)),
                ("gamma_omega", _fmt(rep.gamma_omega)),
                ("branch", rep.chosen_branch),
                ("boundary_term", _fmt(rep.boundary_term)),
                ("estimate_1", _fmt(rep.estimates[0])),
                ("estimate_2", _fmt(rep.estimates[1])),
                ("trial_norm_sq", _fmt(rep.trial_norm_sq)),
                ("upper_bound", _fmt(rep.upper_bound)),
                ("diff", _fmt(rep.upper_bound - rep.lambda2_disk)),
                ("orthogonality", " ".join(f"{v:.3e}" for v in rep.orthogonality_residuals)),
                ("residual_source", rep.residual_source),
            ]
        else:
            rep = trial_bounds.isoelastic_rayleigh(shape, args.alpha, check=not args.exploratory)
            pairs = [
                ("mode", "isoelastic"),
                ("alpha", _fmt(rep.alpha)),
                ("R", _fmt(rep.R)),
                ("rayleigh_u", _fmt(rep.rayleigh_u)),
                ("rayleigh_v", _fmt(rep.rayleigh_v)),
                ("rayleigh_v_surrogate", _fmt(rep.rayleigh_v_surrogate)),
                ("lambda1_disk", _fmt(rep.lambda1_disk)),
                ("lambda2_disk", _fmt(rep.lambda2_disk)),
                ("upper_bound", _fmt(rep.upper_bound)),
                ("diff", _fmt(rep.upper_bound - rep.lambda2_disk)),
                ("jensen_margin", _fmt(rep.jensen_margin)),
                ("orthogonality", " ".join(f"{v:.3e}" for v in rep.orthogonality_residuals)),
            ]
    except HypothesisError as exc:
        print(f"hypotheses not satisfied: {', '.join(exc.failed)} (use --exploratory to compute anyway)", file=sys.stderr)
        return 3
    flags = ";".join(f"{k}={int(v)}" for k, v in sorted(rep.hypothesis_flags.items()))
    pairs.append(("flags", flags))
    print(_table(pairs))
    if args.csv:
        _append_csv(args.csv, ["shape_file"] + [k for k, _ in pairs], [args.shape_file] + [v for _, v in pairs])
    return 0


def _mesh_from_args(shape, args):
    base = default_mesh(shape, args.alpha, args.n_theta, args.n_t, args.grading)
    return base if args.T is None else MeshSpec(args.n_theta, args.n_t, args.T, args.grading)


def cmd_eig(args):
    shape = _load(args.shape_file)
    mesh = _mesh_from_args(shape, args)
    if args.study:
        table = convergence_study(shape, args.alpha, refine_ladder(mesh, args.levels), k=args.k)
        for m, vals in table.rows():
            print(f"{m.n_theta:5d} x {m.n_t:4d}  " + "  ".join(format_float(v) for v in vals))
        print("order         " + "  ".join(f"{v:.3f}" for v in table.orders))
        print("extrapolated  " + "  ".join(format_float(v) for v in table.extrapolated))
        return 0
    try:
        res = eig_exterior(shape, args.alpha, mesh, k=args.k, shift=args.shift, seed=args.seed)
    except FactorizationError as exc:
        print(f"factorization failed: {exc}; retry with --shift below the ground state", file=sys.stderr)
        return 4
    except ConvergenceError as exc:
        print(f"eigensolver did not converge: {exc}; retry with a finer mesh or a lower --shift", file=sys.stderr)
        return 4
    print(f"mesh n_theta={mesh.n_theta} n_t={mesh.n_t} T={format_float(mesh.T)} grading={mesh.grading}")
    print(f"shift {format_float(res.shift)}  iterations {res.iterations}  truncation_indicator {res.truncation_indicator:.3e}")
    exact = None
    if shape.is_disk:
        R = shape.a0
        second = lambda2_disk(R, args.alpha)
        exact = [lambda1_disk(R, args.alpha)[1]] + ([second[1]] * 2 if second else [])
    for i, (v, r) in enumerate(zip(res.eigenvalues, res.residual_norms)):
        line = f"lambda{i + 1}  {format_float(v)}  residual {r:.2e}"
        if exact is not None and i < len(exact):
            line += f"  exact {format_float(exact[i])}  rel_err {(v - exact[i]) / abs(exact[i]):.3e}"
        print(line)
    groups = clusters(list(res.eigenvalues))
    print("clusters " + " | ".join(",".join(f"{v:.10g}" for v in g) for g in groups))
    if args.dump:
        from .exterior_eig import assemble_parts

        out = Path(args.dump)
        out.mkdir(parents=True, exist_ok=True)
        disc = res.discretization or assemble_parts(shape, mesh)
        dump_matrix(disc.operator(args.alpha), out / "stiffness.txt")
        dump_matrix(disc.mass, out / "mass.txt")
        print(f"matrices written to {out}")
    return 0


def _jobs(args):
    env = os.environ.get("ROBIN_EXT_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise SystemExit(f"ROBIN_EXT_JOBS must be an integer, got {env!r}") from None
    return max(1, args.jobs)


def cmd_sweep(args):
    try:
        spec = replay_manifest(args.spec_file) if args.spec_file.endswith(".json") else load_spec(args.spec_file)
    except SpecError as exc:
        raise SystemExit(f"{args.spec_file}: {exc}") from None
    result, out = execute(spec, _jobs(args), args.output)
    print(f"{len(result.rows)} rows written to {out / 'rows.csv'}")
    for sid, alpha, err in result.failures:
        print(f"job failed: {sid} alpha={alpha}: {err}", file=sys.stderr)
    for row in result.violations:
        print(f"theorem violation: {row.shape_id} alpha={row.alpha} diff={row.diff:.6e}", file=sys.stderr)
    theorem = sum(r.theorem_row for r in result.rows)
    print(f"theorem rows {theorem}, violations {len(result.violations)}, failed jobs {len(result.failures)}")
    return 1 if (result.violations or result.failures) else 0


def cmd_verify(args):
    selection = acceptance.QUICK if args.quick else None
    if args.only:
        selection = tuple(args.only)
    if args.inject_bessel_perturbation:
        with acceptance.perturbed_bessel(args.inject_bessel_perturbation):
            results = acceptance.run(selection)
    else:
        results = acceptance.run(selection)
    print(acceptance.scoreboard(results, verbose=args.verbose))
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robinext", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("disk", help="exact negative spectrum outside a disk")
    d.add_argument("--radius", type=float, required=True)
    d.add_argument("--alpha", type=float, required=True)
    d.add_argument("--csv", help="append the values as a CSV row")
    d.set_defaults(func=cmd_disk)

    s = sub.add_parser("shape-info", help="geometry summary of a shape file")
    s.add_argument("shape_file")
    s.set_defaults(func=cmd_shape_info)

    b = sub.add_parser("bound", help="trial-function upper bound on lambda_2")
    b.add_argument("shape_file")
    b.add_argument("--alpha", type=float, required=True)
    b.add_argument("--mode", choices=("monotonicity", "isoelastic"), default="monotonicity")
    b.add_argument("--radius", type=float, help="inscribed disk radius (monotonicity; default min rho)")
    b.add_argument("--exploratory", action="store_true", help="compute even when hypotheses fail")
    b.add_argument("--csv", help="append the report as a CSV row")
    b.set_defaults(func=cmd_bound)

    e = sub.add_parser("eig", help="finite-element eigenvalues of the truncated exterior")
    e.add_argument("shape_file")
    e.add_argument("--alpha", type=float, required=True)
    e.add_argument("-k", type=int, default=3)
    e.add_argument("--n-theta", type=int, default=256)
    e.add_argument("--n-t", type=int, default=128)
    e.add_argument("--grading", type=float, default=1.05)
    e.add_argument("--T", type=float, help="truncation depth (default R + 40/omega)")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--shift", type=float, help="shift-invert target, below the ground state (default automatic)")
    e.add_argument("--study", action="store_true", help="run a refinement study instead")
    e.add_argument("--levels", type=int, default=3)
    e.add_argument("--dump", metavar="DIR", help="write the assembled matrices as row/col/value triplets")
    e.set_defaults(func=cmd_eig)

    w = sub.add_parser("sweep", help="run a sweep spec (or replay a manifest.json)")
    w.add_argument("spec_file")
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--output", help="override the output directory")
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="run the acceptance criteria")
    v.add_argument("--quick", action="store_true", help="fast subset")
    v.add_argument("--only", type=int, nargs="+", choices=sorted(acceptance.CRITERIA))
    v.add_argument("--verbose", action="store_true")
    v.add_argument("--inject-bessel-perturbation", type=float, default=0.0, help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    np.seterr(under="ignore")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
