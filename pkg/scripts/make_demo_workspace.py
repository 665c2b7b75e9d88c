#!/usr/bin/env python3
"""Build a demo workspace end to end and print a placement summary.

Generates the synthetic body fixture, runs the full pipeline on it, and
leaves a workspace ready for the explorer service:

    python3 scripts/make_demo_workspace.py --out demo
    python3 -m wearsim.cli serve demo/workspace --ui frontend/dist
"""

import argparse
import time
from pathlib import Path

from wearsim.body import build_body, patch_part, write_fixture_dataset
from wearsim.io import run_config_from_dict
from wearsim.pipeline import run_pipeline
from wearsim.utility import rank_locations


def main():
    ap = argparse.ArgumentParser(
        description="fixture dataset + pipeline -> demo workspace")
    ap.add_argument("--out", default="demo", help="output root directory")
    ap.add_argument("--patches", type=int, default=64)
    ap.add_argument("--seqs", type=int, default=10,
                    help="sequences per activity class")
    ap.add_argument("--duration", type=float, default=10.0,
                    help="seconds per sequence")
    ap.add_argument("--tau", type=float, default=0.9,
                    help="coverage threshold for selection")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    root = Path(args.out)
    t0 = time.perf_counter()
    manifest = write_fixture_dataset(root / "data", seqs_per_class=args.seqs,
                                     duration_s=args.duration)
    print(f"dataset: {manifest}")

    cfg = run_config_from_dict({
        "n_patches": args.patches, "tau": args.tau, "fps_seed": args.seed,
        "sensor": {"rng_seed": args.seed}})
    result = run_pipeline(
        manifest, cfg, root / "workspace", jobs=args.jobs,
        progress=lambda stage, frac: print(f"  [{stage}] {frac:4.0%}",
                                           flush=True))
    print(f"pipeline done in {time.perf_counter() - t0:.1f}s")

    body = build_body()
    pset = result.patches
    centers = dict(zip((p.id for p in pset.patches), pset.centers))
    matrix = result.matrix
    index = {loc: i for i, loc in enumerate(matrix.locations)}
    print("\ntop-5 placements per activity (patch, body part, F1):")
    for activity in matrix.activities:
        col = matrix.column(activity)
        row = ", ".join(
            f"{loc}@{patch_part(body, centers[loc])} {col[index[loc]]:.3f}"
            for loc in rank_locations(matrix, activity)[:5])
        print(f"  {activity:<11} {row}")

    sel = result.selection
    where = [f"{loc}@{patch_part(body, centers[loc])}" for loc in sel.selected]
    status = "feasible" if sel.feasible else "INFEASIBLE"
    print(f"\nselection (tau={args.tau}): {where} "
          f"coverage {sel.coverage:.4f} [{status}]")
    print(f"\nworkspace: {root / 'workspace'}")
    print(f"explore:   python3 -m wearsim.cli serve {root / 'workspace'}")


if __name__ == "__main__":
    main()
