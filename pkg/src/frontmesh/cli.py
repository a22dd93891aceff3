"""Command line front end.

Subcommands: mesh (advancing front), mc (marching cubes), eval, stats,
compare.  Exit codes: 0 success, 2 configuration problems (bad flags,
unreadable scene or mesh files), 3 runtime failures (no surface found,
meshing errors).
"""

import argparse
import json
import os
import sys

import numpy as np

from . import io as mesh_io
from . import marching, mesher, metrics
from .fields import CountedField, MlpWeights, load_scene
from .predictor import AnalyticPredictor, MlpPredictor


class _ConfigError(Exception):
    pass


def _parse_predictor(text):
    if text == "analytic":
        return AnalyticPredictor()
    if text.startswith("mlp:"):
        path = text[4:]
        if not path:
            raise _ConfigError("--predictor mlp: needs a weight file path")
        try:
            return MlpPredictor(MlpWeights.load(path))
        except (OSError, ValueError, KeyError) as exc:
            raise _ConfigError("cannot load predictor weights: %s" % exc)
    raise _ConfigError("unknown predictor %r (use analytic or mlp:PATH)" % text)


def _load_scene(path):
    try:
        return load_scene(path)
    except (OSError, ValueError, KeyError) as exc:
        raise _ConfigError("cannot load scene %s: %s" % (path, exc))


def _read_mesh(path):
    try:
        return mesh_io.read_obj(path)
    except (OSError, ValueError) as exc:
        raise _ConfigError("cannot read mesh %s: %s" % (path, exc))


def _write_mesh(path, positions, faces):
    ext = os.path.splitext(path)[1].lower()
    if ext == ".obj":
        mesh_io.write_obj(path, positions, faces)
    elif ext == ".ply":
        mesh_io.write_ply(path, positions, faces)
    else:
        raise _ConfigError("unsupported mesh extension %r (use .obj or .ply)" % ext)


def _write_report(path, report):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_histogram_csv(path, counts, edges):
    with open(path, "w") as fh:
        fh.write("bin_left,bin_right,count\n")
        for i, c in enumerate(counts):
            fh.write("%.17g,%.17g,%d\n" % (edges[i], edges[i + 1], c))


def _cmd_mesh(args):
    field, bbox = _load_scene(args.scene)
    predictor = _parse_predictor(args.predictor)
    params = mesher.MeshingParams(
        r_d=args.rd, seeds=args.seeds, seed=args.seed,
        threads=args.threads, max_steps=args.max_steps, predictor=predictor)
    mesh, report = mesher.run(field, bbox, params)
    positions, faces = mesh.to_indexed_triangles()
    _write_mesh(args.out, positions, faces)
    if args.report:
        _write_report(args.report, report.to_dict())
    print("wrote %d vertices, %d faces to %s (%d queries, %.2fs)"
          % (len(positions), len(faces), args.out,
             report.total_queries, report.wall_time))
    return 0


def _cmd_mc(args):
    field, bbox = _load_scene(args.scene)
    if args.resolution is not None:
        res = args.resolution
    elif args.rd is not None:
        res = marching.matched_resolution(bbox, args.rd)
    else:
        raise _ConfigError("mc needs --resolution or --rd")
    spec = marching.GridSpec(bbox, res)
    positions, faces = marching.extract(field, spec)
    _write_mesh(args.out, positions, faces)
    print("wrote %d vertices, %d faces to %s (resolution %d, %d samples)"
          % (len(positions), len(faces), args.out, res, spec.n_samples))
    return 0


def _cmd_eval(args):
    field, _bbox = _load_scene(args.scene)
    positions, faces = _read_mesh(args.mesh)
    reference = _read_mesh(args.ref) if args.ref else None
    report = metrics.evaluate_mesh(field, positions, faces,
                                   n_samples=args.samples, seed=args.seed,
                                   reference=reference)
    if args.csv:
        _write_histogram_csv(args.csv + "_angles.csv",
                             report["angle_histogram"]["counts"],
                             report["angle_histogram"]["edges"])
        _write_histogram_csv(args.csv + "_areas.csv",
                             report["area_histogram"]["counts"],
                             report["area_histogram"]["edges"])
    if args.report:
        _write_report(args.report, report)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def _cmd_stats(args):
    positions, faces = _read_mesh(args.mesh)
    print(json.dumps(metrics.mesh_stats(positions, faces), indent=2, sort_keys=True))
    return 0


def _cmd_compare(args):
    field, bbox = _load_scene(args.scene)
    predictor = _parse_predictor(args.predictor)
    params = mesher.MeshingParams(
        r_d=args.rd, seeds=args.seeds, seed=args.seed,
        threads=args.threads, predictor=predictor)
    mesh, report = mesher.run(field, bbox, params)
    pos_a, fac_a = mesh.to_indexed_triangles()
    res = marching.matched_resolution(bbox, args.rd)
    mc_field = CountedField(field)
    pos_b, fac_b = marching.extract(mc_field, marching.GridSpec(bbox, res))
    eval_a = metrics.evaluate_mesh(field, pos_a, fac_a, n_samples=args.samples,
                                   seed=args.seed, reference=(pos_b, fac_b))
    eval_b = metrics.evaluate_mesh(field, pos_b, fac_b, n_samples=args.samples,
                                   seed=args.seed, reference=(pos_a, fac_a))
    out = {
        "resolution": res,
        "advancing_front": dict(eval_a, queries=report.total_queries,
                                run=report.to_dict()),
        "marching_cubes": dict(eval_b, queries=mc_field.counter.total()),
        "face_ratio": (len(fac_a) / len(fac_b)) if len(fac_b) else None,
        "query_ratio": (report.total_queries / mc_field.counter.total()
                        if mc_field.counter.total() else None),
    }
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        mesh_io.write_obj(os.path.join(args.out_dir, "advancing_front.obj"), pos_a, fac_a)
        mesh_io.write_obj(os.path.join(args.out_dir, "marching_cubes.obj"), pos_b, fac_b)
    if args.report:
        _write_report(args.report, out)
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _build_parser():
    ap = argparse.ArgumentParser(prog="frontmesh",
                                 description="Mesh signed-distance fields.")
    sub = ap.add_subparsers(dest="command", required=True)

    def scene_arg(p):
        p.add_argument("--scene", required=True, help="scene JSON file")

    p = sub.add_parser("mesh", help="advancing-front meshing")
    scene_arg(p)
    p.add_argument("--out", required=True, help="output mesh (.obj or .ply)")
    p.add_argument("--rd", type=float, required=True, help="triangle circumradius")
    p.add_argument("--seeds", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--predictor", default="analytic", help="analytic or mlp:PATH")
    p.add_argument("--report", default=None, help="write run report JSON here")
    p.set_defaults(fn=_cmd_mesh)

    p = sub.add_parser("mc", help="marching-cubes baseline")
    scene_arg(p)
    p.add_argument("--out", required=True)
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--rd", type=float, default=None,
                   help="derive a matched resolution from this triangle size")
    p.set_defaults(fn=_cmd_mc)

    p = sub.add_parser("eval", help="mesh quality report")
    scene_arg(p)
    p.add_argument("--mesh", required=True, help="mesh to evaluate (.obj)")
    p.add_argument("--ref", default=None, help="reference mesh (.obj)")
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None)
    p.add_argument("--csv", default=None, help="histogram CSV path prefix")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("stats", help="quick mesh statistics")
    p.add_argument("--mesh", required=True)
    p.set_defaults(fn=_cmd_stats)

    p = sub.add_parser("compare", help="advancing front vs marching cubes")
    scene_arg(p)
    p.add_argument("--rd", type=float, required=True)
    p.add_argument("--seeds", type=int, default=32)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--predictor", default="analytic")
    p.add_argument("--out-dir", default=None, help="save both meshes here")
    p.add_argument("--report", default=None)
    p.set_defaults(fn=_cmd_compare)
    return ap


def main(argv=None):
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except _ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print("runtime failure: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
