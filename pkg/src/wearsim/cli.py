"""Command line front end.

Stage commands (sample, synth, degrade, eval, select) operate on explicit
files so stages can be mixed with external tooling; `run` chains everything
through the resumable pipeline; `serve` exposes a workspace over HTTP.

Exit codes: 0 ok, 2 invalid input, 3 selection infeasible, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .errors import InvalidInput, IoFailure, PipelineError, WearsimError
from .kinematics import synthesize_imu
from .pipeline import derive_sequence_seed, load_traceset, run_pipeline
from .sampling import sample_patches
from .selection import SelectionRequest, exhaustive_select, greedy_select
from .sensor import apply_sensor_model
from .utility import utility_matrix

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4


def _config(args) -> io.RunConfig:
    cfg = io.load_run_config(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg = io.override_seed(cfg, args.seed)
    return cfg


def _parse_excluded(values) -> frozenset:
    out = set()
    for chunk in values or ():
        for tok in chunk.replace(",", " ").split():
            try:
                out.add(int(tok))
            except ValueError:
                raise InvalidInput(f"bad location id {tok!r} in --exclude")
    return frozenset(out)


def cmd_sample(args) -> int:
    cfg = _config(args)
    seq = io.load_mesh_sequence(args.mesh, args.frame_rate)
    n = args.n if args.n is not None else cfg.n_patches
    patches = sample_patches(seq.topology, seq.frames[0], n, cfg.fps_seed)
    io.save_patch_set(patches, seq.frames[0], args.out)
    print(f"sampled {len(patches)} patches (seed {cfg.fps_seed}) -> {args.out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = _config(args)
    seq = io.load_mesh_sequence(args.mesh, args.frame_rate)
    patches, _ = io.load_patch_set(args.patches)
    accel_frame = args.accel_frame or cfg.accel_frame
    traces = [synthesize_imu(seq, p, cfg.gravity, accel_frame)
              for p in patches.patches]
    sequence_id = args.id or Path(args.mesh).stem
    io.save_sequence_traces(args.out, {"sequence_id": sequence_id,
                                       "activity": args.activity,
                                       "subject": None,
                                       "rate": seq.frame_rate}, traces)
    print(f"synthesized {len(traces)} traces ({seq.frame_count} frames) "
          f"-> {args.out}")
    return EXIT_OK


def _sequence_dirs(root: Path) -> list:
    if (root / "_meta.json").exists():
        return [root]
    subs = sorted(d for d in root.iterdir()
                  if d.is_dir() and (d / "_meta.json").exists())
    if not subs:
        raise InvalidInput(f"no trace directories under {root}")
    return subs


def cmd_degrade(args) -> int:
    cfg = _config(args)
    root = Path(args.traces)
    dirs = _sequence_dirs(root)
    base_seed = cfg.sensor.rng_seed
    for d in dirs:
        meta, traces = io.load_sequence_traces(d)
        sensor = replace(cfg.sensor,
                         rng_seed=derive_sequence_seed(base_seed,
                                                       meta["sequence_id"]),
                         misalignment=cfg.sensor.misalignment)
        degraded = [apply_sensor_model(t, sensor) for t in traces]
        out_meta = dict(meta)
        out_meta["rate"] = sensor.output_rate
        out = Path(args.out) if len(dirs) == 1 \
            else Path(args.out) / meta["sequence_id"]
        io.save_sequence_traces(out, out_meta, degraded)
    print(f"degraded {len(dirs)} sequence(s) (seed {base_seed}) -> {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _config(args)
    manifest = io.load_manifest(args.manifest)
    patches, _ = io.load_patch_set(args.patches)
    data = load_traceset(args.traces, manifest)
    matrix = utility_matrix(data, patches, cfg.eval, jobs=args.jobs)
    io.write_utility_matrix(matrix, args.out)
    print(f"evaluated {len(matrix.locations)} locations x "
          f"{len(matrix.activities)} activities -> {args.out}")
    return EXIT_OK


def _matrix_path(path: Path) -> Path:
    return path / "utility_matrix.csv" if path.is_dir() else path


def cmd_select(args) -> int:
    cfg = _config(args)
    matrix = io.load_utility_matrix(_matrix_path(Path(args.matrix)))
    tau = args.tau if args.tau is not None else cfg.tau
    excluded = _parse_excluded(args.exclude) or frozenset(cfg.excluded)
    max_sensors = args.max_sensors if args.max_sensors is not None \
        else cfg.max_sensors
    request = SelectionRequest(tau=tau, excluded=excluded,
                               max_sensors=max_sensors)
    pick = exhaustive_select if args.exhaustive else greedy_select
    result = pick(matrix, request)
    payload = io.canonical_json(io.selection_to_dict(result, request))
    sys.stdout.write(payload)
    if args.out:
        io.atomic_write_text(args.out, payload)
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_run(args) -> int:
    cfg = _config(args)
    if args.tau is not None:
        cfg = replace(cfg, tau=args.tau)
    activities = None
    if args.activities:
        activities = sorted({tok for chunk in args.activities
                             for tok in chunk.replace(",", " ").split()})

    def tick(stage, frac):
        print(f"[{stage}] {frac:5.0%}", file=sys.stderr, flush=True)

    result = run_pipeline(args.manifest, cfg, args.out, jobs=args.jobs,
                          progress=tick if args.progress else None,
                          activities=activities)
    sel = result.selection
    status = "feasible" if sel.feasible else "INFEASIBLE"
    print(f"workspace: {result.workspace}")
    print(f"selected {list(sel.selected)} coverage {sel.coverage:.4f} "
          f"({status}, tau {cfg.tau})")
    return EXIT_OK if sel.feasible else EXIT_INFEASIBLE


def cmd_serve(args) -> int:
    from .service import serve_forever
    serve_forever(args.workspace, port=args.port, ui_dir=args.ui,
                  jobs=args.jobs)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run config JSON file")
    common.add_argument("--seed", type=int,
                        help="override sampling and sensor seeds")
    common.add_argument("--jobs", type=int, default=1,
                        help="worker processes for heavy stages")

    p = argparse.ArgumentParser(prog="wearsim",
                                description="virtual IMU placement toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", parents=[common],
                       help="farthest-point patch sampling on a mesh")
    s.add_argument("mesh", help="mesh sequence file or OBJ directory")
    s.add_argument("--out", required=True, help="output patches.json")
    s.add_argument("--n", type=int, help="patch count (default from config)")
    s.add_argument("--frame-rate", type=float, help="override for OBJ input")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("synth", parents=[common],
                       help="synthesize clean per-patch traces")
    s.add_argument("mesh")
    s.add_argument("patches", help="patches.json from `sample`")
    s.add_argument("--out", required=True, help="output trace directory")
    s.add_argument("--id", help="sequence id (default: mesh file stem)")
    s.add_argument("--activity", default="", help="label stored in metadata")
    s.add_argument("--accel-frame", choices=["local", "mixed"])
    s.add_argument("--frame-rate", type=float)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("degrade", parents=[common],
                       help="apply the sensor model to clean traces")
    s.add_argument("traces", help="trace directory (or parent of several)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_degrade)

    s = sub.add_parser("eval", parents=[common],
                       help="per-location, per-activity F1 matrix")
    s.add_argument("--manifest", required=True)
    s.add_argument("--patches", required=True)
    s.add_argument("--traces", required=True,
                   help="directory of per-sequence trace directories")
    s.add_argument("--out", required=True, help="output utility CSV")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("select", parents=[common],
                       help="pick a minimal sensor subset from a matrix")
    s.add_argument("matrix", help="utility CSV or a workspace directory")
    s.add_argument("--tau", type=float, help="coverage threshold")
    s.add_argument("--exclude", action="append",
                   help="location ids to exclude (comma separated, repeatable)")
    s.add_argument("--max-sensors", type=int)
    s.add_argument("--exhaustive", action="store_true",
                   help="exact smallest subset (<= 20 candidate locations)")
    s.add_argument("--out", help="also write the result JSON here")
    s.set_defaults(func=cmd_select)

    s = sub.add_parser("run", parents=[common], help="full pipeline")
    s.add_argument("manifest")
    s.add_argument("--out", required=True, help="workspace directory")
    s.add_argument("--tau", type=float)
    s.add_argument("--activities", action="append",
                   help="restrict evaluation to these labels")
    s.add_argument("--progress", action="store_true",
                   help="print stage progress to stderr")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("serve", parents=[common],
                       help="HTTP service over a pipeline workspace")
    s.add_argument("workspace")
    s.add_argument("--port", type=int, default=8765)
    s.add_argument("--ui", help="static frontend directory to serve at /")
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO if isinstance(exc.cause, IoFailure) else EXIT_INVALID
    except IoFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except WearsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
