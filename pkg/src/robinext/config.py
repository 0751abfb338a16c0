"""Sweep specifications in a small INI dialect.

Grammar (``configparser``; ``#`` and ``;`` start comments)::

    [sweep]
    family = cos2k-perturbation | coefficient-list | file
    constraint = area | perimeter | elastic | inclusion
    target_radius = 1.0            # or "none": keep shapes unscaled
    alpha = -1.5, -2, -3           # coupling grid, nonempty
    alpha_scaling = none | matched # "matched": alpha / R_matched per shape
    solvers = exact-disk, trial-bound, fem
    seed = 0

    [family]                       # cos2k-perturbation
    k = 2                          # rho = 1 + eps cos(k theta)
    eps = 0, 0.05, 0.1             # explicit list, or:
    eps_min = 0
    eps_max = 0.25
    eps_step = 0.05

    [family]                       # coefficient-list: one key per shape
    shape.ellipse = 1.0; 0 0; 0.1 0    # a0; a_1 b_1; a_2 b_2; ...

    [family]                       # file: shape files, relative to this file
    paths = a.shape, b.shape

    [mesh]
    n_theta = 256
    n_t = 128
    grading = 1.05
    T = auto                       # auto: R_ref + 40 / w_ref per problem

    [output]
    dir = out/sweep
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import DomainShape, min_rho, read_shape

__all__ = ["SweepSpec", "SpecError", "parse_spec", "load_spec", "FAMILIES", "SWEEP_CONSTRAINTS", "SOLVERS"]

FAMILIES = ("cos2k-perturbation", "coefficient-list", "file")
SWEEP_CONSTRAINTS = ("area", "perimeter", "elastic", "inclusion")
SOLVERS = ("exact-disk", "trial-bound", "fem")


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class MeshConfig:
    n_theta: int = 256
    n_t: int = 128
    grading: float = 1.05
    T: float | None = None  # None: automatic per problem


@dataclass(frozen=True)
class SweepSpec:
    family: str
    constraint: str
    alpha_grid: tuple[float, ...]
    target_radius: float | None = 1.0
    alpha_scaling: str = "none"
    solvers: tuple[str, ...] = SOLVERS
    family_params: dict = field(default_factory=dict)
    mesh: MeshConfig = MeshConfig()
    output_dir: str = "out"
    seed: int = 0
    text: str = ""
    base_dir: str = "."

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown family {self.family!r}")
        if self.constraint not in SWEEP_CONSTRAINTS:
            raise SpecError(f"unknown constraint {self.constraint!r}")
        if not self.alpha_grid:
            raise SpecError("alpha grid is empty")
        if any(not a < 0 for a in self.alpha_grid):
            raise SpecError("couplings must be negative")
        if self.alpha_scaling not in ("none", "matched"):
            raise SpecError("alpha_scaling must be 'none' or 'matched'")
        bad = set(self.solvers) - set(SOLVERS)
        if bad or not self.solvers:
            raise SpecError(f"solvers must be a nonempty subset of {SOLVERS}")
        if self.target_radius is not None and not self.target_radius > 0:
            raise SpecError("target_radius must be positive")
        if self.family != "file":
            self.shapes()

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    def shapes(self) -> list[tuple[str, float, DomainShape]]:
        """``(shape_id, eps, shape)`` before normalisation; eps is NaN outside the cos family."""
        p = self.family_params
        if self.family == "cos2k-perturbation":
            k = int(p["k"])
            out = []
            for i, eps in enumerate(p["eps"]):
                shape = DomainShape.cos_perturbation(eps, k)
                if not min_rho(shape) > 0:
                    raise SpecError(f"eps={eps} leaves min rho <= 0")
                out.append((f"cos{k}-{i:03d}", eps, shape))
            return out
        if self.family == "coefficient-list":
            return [(name, math.nan, shape) for name, shape in p["shapes"]]
        return [(Path(path).stem, math.nan, read_shape(Path(self.base_dir) / path)) for path in p["paths"]]


def _floats(text, key):
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise SpecError(f"{key}: expected comma-separated numbers, got {text!r}") from None


def _coefficient_shape(name, text):
    parts = [p.split() for p in text.split(";")]
    try:
        a0 = float(parts[0][0])
        ab = [(float(a), float(b)) for a, b in parts[1:]]
    except (ValueError, IndexError):
        raise SpecError(f"shape.{name}: expected 'a0; a1 b1; a2 b2; ...'") from None
    return DomainShape(a0, tuple(a for a, _ in ab), tuple(b for _, b in ab))


def _eps_grid(sec):
    if "eps" in sec:
        return _floats(sec["eps"], "eps")
    try:
        lo, hi, step = (float(sec[k]) for k in ("eps_min", "eps_max", "eps_step"))
    except KeyError as exc:
        raise SpecError(f"family needs 'eps' or eps_min/eps_max/eps_step (missing {exc})") from None
    if not step > 0 or hi < lo:
        raise SpecError("bad eps range")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return tuple(float(v) for v in np.round(lo + step * np.arange(n), 12))


def parse_spec(text: str, base_dir: str = ".") -> SweepSpec:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise SpecError(str(exc)) from None
    if "sweep" not in cp:
        raise SpecError("missing [sweep] section")
    sw = cp["sweep"]
    fam = cp["family"] if "family" in cp else {}
    family = sw.get("family", "cos2k-perturbation").strip()
    if family == "cos2k-perturbation":
        params = {"k": int(fam.get("k", "2")), "eps": _eps_grid(fam)}
    elif family == "coefficient-list":
        shapes = [(key[6:], _coefficient_shape(key[6:], val)) for key, val in fam.items() if key.startswith("shape.")]
        if not shapes:
            raise SpecError("coefficient-list family needs shape.<name> keys")
        params = {"shapes": shapes}
    elif family == "file":
        params = {"paths": tuple(p.strip() for p in fam.get("paths", "").split(",") if p.strip())}
        if not params["paths"]:
            raise SpecError("file family needs 'paths'")
    else:
        raise SpecError(f"unknown family {family!r}")
    target = sw.get("target_radius", "1.0").strip()
    mesh = cp["mesh"] if "mesh" in cp else {}
    T = mesh.get("T", "auto").strip()
    try:
        mesh_cfg = MeshConfig(
            int(mesh.get("n_theta", "256")),
            int(mesh.get("n_t", "128")),
            float(mesh.get("grading", "1.05")),
            None if T == "auto" else float(T),
        )
        seed = int(sw.get("seed", "0"))
        target_radius = None if target.lower() == "none" else float(target)
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    return SweepSpec(
        family=family,
        constraint=sw.get("constraint", "area").strip(),
        alpha_grid=_floats(sw.get("alpha", ""), "alpha"),
        target_radius=target_radius,
        alpha_scaling=sw.get("alpha_scaling", "none").strip(),
        solvers=tuple(s.strip() for s in sw.get("solvers", ",".join(SOLVERS)).split(",") if s.strip()),
        family_params=params,
        mesh=mesh_cfg,
        output_dir=cp["output"].get("dir", "out") if "output" in cp else "out",
        seed=seed,
        text=text,
        base_dir=str(base_dir),
    )


def load_spec(path) -> SweepSpec:
    path = Path(path)
    return parse_spec(path.read_text(), base_dir=str(path.parent))
