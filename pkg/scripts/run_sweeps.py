"""Run every sweep spec in configs/ and summarise theorem violations."""

import argparse
import sys
from pathlib import Path

from robinext.config import load_spec
from robinext.sweep import execute


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("specs", nargs="*", help="spec files (default: configs/*.ini)")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="out", help="root directory for results")
    args = ap.parse_args()
    root = Path(__file__).resolve().parent.parent
    specs = [Path(p) for p in args.specs] or sorted((root / "configs").glob("*.ini"))
    bad = 0
    for path in specs:
        spec = load_spec(path)
        result, out = execute(spec, args.jobs, Path(args.out) / path.stem)
        neg = sum(r.diff < 0 for r in result.rows if not r.is_disk)
        print(f"{path.name:28s} rows={len(result.rows):3d} below-disk={neg:3d} violations={len(result.violations)} failed={len(result.failures)} -> {out}")
        bad += len(result.violations) + len(result.failures)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
