"""Sweeps over shape families and couplings comparing lambda_2 with a matched disk.

Each ``(shape, alpha)`` pair is an independent job. Rows are sorted by
``(shape_id, alpha)`` before writing, so the CSV is independent of the worker
count. Rows under the elastic or inclusion constraint whose hypothesis flags
all hold are *theorem rows*: a difference ``>= 0`` there is a violation.
Area and perimeter rows are exploratory and never fail a run.
"""

from __future__ import annotations

import json
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, geometry, trial_bounds
from .config import SweepSpec, parse_spec
from .disk import lambda2_disk
from .exterior_eig import MeshSpec, default_mesh, eig_exterior
from .svgplot import line_chart

__all__ = ["SweepRow", "SweepResult", "run_sweep", "write_csv", "format_float", "CSV_COLUMNS", "replay_manifest", "DISK_ROW_RTOL"]

CSV_COLUMNS = ("shape_id", "eps", "L", "A", "E", "constraint", "R_matched", "alpha", "lambda2_trial", "lambda2_fem", "lambda2_disk", "diff", "flags")
THEOREM_CONSTRAINTS = ("elastic", "inclusion")
# a disk row should reproduce the disk value up to the FEM discretization error
DISK_ROW_RTOL = 2e-3


def format_float(v: float) -> str:
    return format(float(v), ".17g")


@dataclass
class SweepRow:
    shape_id: str
    eps: float
    perimeter: float
    area: float
    elastic_energy: float
    constraint: str
    R_matched: float
    alpha: float
    lambda2_trial: float
    lambda2_fem: float
    lambda2_disk: float
    diff: float
    flags: dict = field(default_factory=dict)
    mode: str = "conjecture"
    is_disk: bool = False
    critical_bounds: tuple = (None, None, None)

    @property
    def theorem_row(self) -> bool:
        return self.mode == "theorem" and bool(self.flags) and all(self.flags.values())

    @property
    def violation(self) -> bool:
        return self.theorem_row and not self.diff < 0

    def flag_string(self) -> str:
        parts = [f"mode={self.mode}"] + [f"{k}={int(v)}" for k, v in sorted(self.flags.items())]
        return ";".join(parts)

    def csv_fields(self) -> list[str]:
        nums = (self.eps, self.perimeter, self.area, self.elastic_energy)
        tail = (self.R_matched, self.alpha, self.lambda2_trial, self.lambda2_fem, self.lambda2_disk, self.diff)
        return [self.shape_id, *map(format_float, nums), self.constraint, *map(format_float, tail), self.flag_string()]


@dataclass
class SweepResult:
    rows: list[SweepRow]
    failures: list[tuple[str, float, str]]

    @property
    def violations(self) -> list[SweepRow]:
        return [r for r in self.rows if r.violation]

    @property
    def disk_rows(self) -> list[SweepRow]:
        return [r for r in self.rows if r.is_disk]


def _flags(shape, constraint, R, alpha, summary):
    if constraint == "elastic":
        return "theorem", trial_bounds.isoelastic_hypotheses(shape, alpha, summary)
    if constraint == "inclusion":
        flags = trial_bounds.monotonicity_hypotheses(shape, R, alpha)
        return "theorem", flags
    return "conjecture", {}


def _trial(shape, constraint, R, alpha, flags):
    try:
        if constraint == "elastic" and flags.get("convex", False):
            return trial_bounds.isoelastic_rayleigh(shape, alpha, check=False).upper_bound
        if constraint == "inclusion" and alpha < -1.0 / R:
            return trial_bounds.monotonicity_bound(shape, R, alpha, check=False).upper_bound
    except (ValueError, ArithmeticError, RuntimeError):
        pass
    return math.nan


def _mesh_for(spec, shape, alpha):
    m = spec.mesh
    if m.T is None:
        return default_mesh(shape, alpha, m.n_theta, m.n_t, m.grading)
    return MeshSpec(m.n_theta, m.n_t, m.T, m.grading)


def compute_row(spec: SweepSpec, shape_id: str, eps: float, raw_shape, alpha_base: float) -> SweepRow:
    shape = raw_shape if spec.target_radius is None else geometry.normalize(raw_shape, spec.constraint, spec.target_radius)
    g = geometry.summarize(shape)
    R = g.min_rho if spec.constraint == "inclusion" else geometry.matched_disk_radius(shape, spec.constraint, g)
    alpha = alpha_base / R if spec.alpha_scaling == "matched" else alpha_base
    second = lambda2_disk(R, alpha)
    lam_disk = 0.0 if second is None else second[1]
    mode, flags = _flags(shape, spec.constraint, R, alpha, g)
    lam_trial = _trial(shape, spec.constraint, R, alpha, flags) if "trial-bound" in spec.solvers else math.nan
    lam_fem = math.nan
    if "fem" in spec.solvers:
        res = eig_exterior(shape, alpha, _mesh_for(spec, shape, alpha), k=3, seed=spec.seed)
        # no second negative eigenvalue: lambda_2 sits at the threshold 0
        lam_fem = min(float(res.eigenvalues[1]), 0.0)
    designated = lam_fem if "fem" in spec.solvers else lam_trial
    cc = trial_bounds.critical_coupling_bounds(shape)
    return SweepRow(
        shape_id=shape_id,
        eps=eps,
        perimeter=g.perimeter,
        area=g.area,
        elastic_energy=g.elastic_energy,
        constraint=spec.constraint,
        R_matched=R,
        alpha=alpha,
        lambda2_trial=lam_trial,
        lambda2_fem=lam_fem,
        lambda2_disk=lam_disk,
        diff=designated - lam_disk,
        flags=flags,
        mode=mode,
        is_disk=shape.is_disk,
        critical_bounds=(cc.from_inscribed, cc.from_elastic, cc.from_inradius),
    )


def _job(args):
    spec, shape_id, eps, shape, alpha = args
    try:
        return shape_id, alpha, compute_row(spec, shape_id, eps, shape, alpha), None
    except Exception as exc:  # reported per job; other rows still flush
        return shape_id, alpha, None, f"{type(exc).__name__}: {exc}"


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    work = [(spec, sid, eps, shape, a) for sid, eps, shape in spec.shapes() for a in spec.alpha_grid]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_job, work))
    else:
        results = [_job(w) for w in work]
    rows = [r for _, _, r, err in results if err is None]
    failures = [(sid, a, err) for sid, a, _, err in results if err is not None]
    rows.sort(key=lambda r: (r.shape_id, r.alpha))
    return SweepResult(rows, failures)


def write_csv(rows, path) -> None:
    lines = ["# schema=1", ",".join(CSV_COLUMNS)]
    lines += [",".join(r.csv_fields()) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def write_plot(spec: SweepSpec, rows, path) -> None:
    series = {}
    use_eps = spec.family == "cos2k-perturbation"
    ids = sorted({r.shape_id for r in rows})
    for r in rows:
        x = r.eps if use_eps else float(ids.index(r.shape_id))
        key = f"alpha={r.alpha:.4g}" if spec.alpha_scaling == "none" else f"alpha*R={r.alpha * r.R_matched:.4g}"
        xs, ys = series.setdefault(key, ([], []))
        xs.append(x)
        ys.append(r.diff)
    svg = line_chart(
        series,
        title=f"lambda2 difference, {spec.constraint} constraint",
        xlabel="eps" if use_eps else "shape index",
        ylabel="lambda2(shape) - lambda2(disk)",
    )
    Path(path).write_text(svg)


def _env():
    return {"python": platform.python_version(), "numpy": np.__version__}


def execute(spec: SweepSpec, jobs: int = 1, output_dir=None) -> tuple[SweepResult, Path]:
    """Run a sweep and write ``rows.csv``, ``diff.svg`` and ``manifest.json``."""
    out = Path(output_dir or spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    result = run_sweep(spec, jobs)
    write_csv(result.rows, out / "rows.csv")
    write_plot(spec, result.rows, out / "diff.svg")
    manifest = {
        "schema": 1,
        "spec_sha256": spec.digest,
        "spec": spec.text,
        "base_dir": str(Path(spec.base_dir).resolve()),
        "version": __version__,
        "environment": _env(),
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "elapsed_s": round(time.perf_counter() - t0, 3),
        "jobs": jobs,
        "rows": len(result.rows),
        "failures": [{"shape_id": s, "alpha": a, "error": e} for s, a, e in result.failures],
        "violations": [{"shape_id": r.shape_id, "alpha": r.alpha, "diff": r.diff} for r in result.violations],
        "outputs": ["rows.csv", "diff.svg"],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return result, out


def replay_manifest(path) -> SweepSpec:
    """Rebuild the sweep specification recorded in a manifest."""
    data = json.loads(Path(path).read_text())
    return parse_spec(data["spec"], base_dir=data.get("base_dir", "."))
