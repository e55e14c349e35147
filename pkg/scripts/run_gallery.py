"""Run every gallery recipe, print a one-line verdict each and a timing table.

    python scripts/run_gallery.py                 # results under ./gallery_out
    python scripts/run_gallery.py --out DIR qubit_five_qutrits glue
    python scripts/run_gallery.py --twice         # also re-run and diff the outputs

Exits non-zero if any recipe fails or (with --twice) the two runs differ.
"""

from __future__ import annotations

import argparse
import filecmp
import sys
import time
from pathlib import Path

from isoforge.cli import gallery_dir, gallery_names
from isoforge.pipeline import clear_cache, execute, load_recipe


def run_all(names, out: Path) -> bool:
    ok = True
    for name in names:
        g = load_recipe(gallery_dir() / f"{name}.json")
        t0 = time.perf_counter()
        res = execute(g, out_dir=out / name)
        dt = time.perf_counter() - t0
        worst = max((r.max_deviation for r in res.reports if r.kind != "prediction"), default=0.0)
        verdict = "PASS" if res.passed else "FAIL"
        print(f"{name:28s} {verdict}  {len(res.reports):3d} checks  max dev {worst:.1e}  {dt:6.2f} s")
        ok = ok and res.passed
    return ok


def same_tree(a: Path, b: Path) -> bool:
    fa = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    fb = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    return fa == fb and all(filecmp.cmp(a / f, b / f, shallow=False) for f in fa)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*")
    ap.add_argument("--out", default="gallery_out")
    ap.add_argument("--twice", action="store_true")
    args = ap.parse_args()
    names = args.names or gallery_names()
    out = Path(args.out)
    ok = run_all(names, out / "run1" if args.twice else out)
    if args.twice:
        clear_cache()
        ok = run_all(names, out / "run2") and ok
        same = same_tree(out / "run1", out / "run2")
        print(f"byte-identical: {same}")
        ok = ok and same
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
