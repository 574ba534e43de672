"""Command-line front door: gen, analyze, slice, encode, decode, compare.

All commands read and write files; outputs are deterministic, so reruns
with identical inputs rewrite byte-identical files. Exit codes: 0 success,
1 runtime error (message on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .cloud import Axis, PointCloud
from .codec import bit_budget, decode, encode
from .metrics import (
    BASELINES,
    CompareConfig,
    render_csv,
    render_json,
    compare as compare_strategies,
)
from .ply import read_ply, write_ply
from .projection import CaptureConfig, compute_psi, projected_area
from .slicer import SlicerConfig, build_plan, extract_slices, plan_from_json, plan_to_json
from .synthetic import KINDS, SEEDED_KINDS, gen_synthetic


def _add_plan_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--theta", type=int, default=64, help="max slice width (voxels)")
    parser.add_argument(
        "--threshold",
        default="0.05",
        help="min slice size as a fraction of the original point count",
    )
    parser.add_argument("--overlap", type=int, default=2, help="overlap margin (voxels)")
    parser.add_argument(
        "--plane-rule",
        choices=("best-plane", "fixed-plane"),
        default="best-plane",
        help="project components on their best plane or on the slicing plane",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sliceseg",
        description="Slice-wise segmentation and delta geometry coding for voxel clouds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic point cloud as PLY")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--extent", type=int, required=True)
    p.add_argument("--offset", type=int, help="plane position (plane kind)")
    p.add_argument("--amplitude", type=int, default=8, help="fold stack height")
    p.add_argument("--period", type=int, help="fold width (folded-sheet kind)")
    p.add_argument("--count", type=int, help="point count (uniform-random kind)")
    p.add_argument("--density", type=float, help="occupancy fraction (uniform-random)")
    p.add_argument("--seed", type=int, help="RNG seed; required for random kinds")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("ascii", "binary"), default="ascii")

    p = sub.add_parser("analyze", help="per-axis occlusion and loss-fraction JSON")
    p.add_argument("--input", required=True)
    p.add_argument("--plan", help="optional plan JSON; adds per-slice loss entries")
    p.add_argument("--out", required=True)

    p = sub.add_parser("slice", help="build a slice plan and write it as JSON")
    p.add_argument("--input", required=True)
    p.add_argument("--plan", required=True, help="output path for the plan JSON")
    _add_plan_flags(p)
    p.add_argument("--emit-slices", metavar="DIR", help="also write one PLY per slice")
    p.add_argument("--format", choices=("ascii", "binary"), default="ascii")

    p = sub.add_parser("encode", help="serialize a cloud into an SWSG bitstream")
    p.add_argument("--input", required=True)
    p.add_argument(
        "--plan",
        required=True,
        help="plan JSON path; loaded if it exists, otherwise built and written",
    )
    p.add_argument("--out", required=True)
    _add_plan_flags(p)

    p = sub.add_parser("decode", help="reconstruct a PLY from an SWSG bitstream")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("ascii", "binary"), default="ascii")

    p = sub.add_parser("compare", help="data-loss report: baselines vs slice plan")
    p.add_argument("--input", required=True)
    p.add_argument(
        "--baseline",
        default="single,dual",
        help="comma list from {single, dual}",
    )
    p.add_argument("--thickness", type=int, default=4, help="dual-layer surface thickness")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--json", help="JSON mirror path (default: CSV path with .json)")
    _add_plan_flags(p)

    return parser


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gen":
        if args.kind in SEEDED_KINDS and args.seed is None:
            parser.error(f"--seed is required for kind {args.kind!r}")
        if args.kind == "uniform-random" and args.count is None and args.density is None:
            parser.error("uniform-random needs --count or --density")
    if args.command == "compare":
        names = [t.strip() for t in args.baseline.split(",") if t.strip()]
        mapping = {"single": "single-layer", "dual": "dual-layer"}
        try:
            args.baseline_set = tuple(mapping[n] for n in names)
        except KeyError as exc:
            parser.error(f"unknown baseline {exc.args[0]!r} (choose from single, dual)")
        if not args.baseline_set:
            parser.error("--baseline must name at least one of: single, dual")
    return args


def _slicer_config(args: argparse.Namespace) -> SlicerConfig:
    return SlicerConfig(
        theta=args.theta,
        threshold_frac=args.threshold,
        overlap=args.overlap,
        plane_rule=args.plane_rule,
    )


def _load_cloud(path: str) -> PointCloud:
    cloud = read_ply(Path(path).read_bytes())
    if cloud.duplicates_merged:
        print(
            f"loaded {len(cloud)} points from {path} "
            f"({cloud.duplicates_merged} duplicates merged)"
        )
    return cloud


def _cmd_gen(args: argparse.Namespace) -> int:
    params = {"extent": args.extent}
    if args.offset is not None:
        params["offset"] = args.offset
    if args.kind == "folded-sheet":
        params["amplitude"] = args.amplitude
        params["period"] = args.period if args.period is not None else max(2, args.extent // 2)
    if args.count is not None:
        params["count"] = args.count
    if args.density is not None:
        params["density"] = args.density
    cloud = gen_synthetic(args.kind, params, seed=args.seed or 0)
    Path(args.out).write_bytes(write_ply(cloud, args.format))
    print(f"wrote {len(cloud)} points to {args.out}")
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    cloud = _load_cloud(args.input)
    stats = compute_psi(cloud)
    doc = {
        "points": len(cloud),
        "bit_depth": cloud.bit_depth,
        "components": stats.component_count,
        "per_axis": {
            axis.name: {
                "projected_area": projected_area(cloud, axis),
                "occluded": len(cloud) - projected_area(cloud, axis),
            }
            for axis in (Axis.X, Axis.Y, Axis.Z)
        },
        "loss": {"phi": stats.phi, "lost": stats.lost, "psi": stats.psi},
    }
    if args.plan:
        plan = plan_from_json(Path(args.plan).read_text())
        doc["slices"] = [
            {"index": s.index, "points": s.point_count, "psi": s.psi, "terminal": s.terminal}
            for s in plan.slices
        ]
    Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    return 0


def _cmd_slice(args: argparse.Namespace) -> int:
    cloud = _load_cloud(args.input)
    plan = build_plan(cloud, _slicer_config(args))
    Path(args.plan).write_text(plan_to_json(plan))
    print(f"planned {len(plan.slices)} slices over {len(cloud)} points -> {args.plan}")
    if args.emit_slices:
        out_dir = Path(args.emit_slices)
        out_dir.mkdir(parents=True, exist_ok=True)
        for spec, slice_cloud in extract_slices(cloud, plan):
            path = out_dir / f"slice_{spec.index:03d}.ply"
            path.write_bytes(write_ply(slice_cloud, args.format))
        print(f"wrote {len(plan.slices)} slice PLYs to {out_dir}")
    return 0


def _cmd_encode(args: argparse.Namespace) -> int:
    cloud = _load_cloud(args.input)
    plan_path = Path(args.plan)
    if plan_path.exists():
        plan = plan_from_json(plan_path.read_text())
    else:
        plan = build_plan(cloud, _slicer_config(args))
        plan_path.write_text(plan_to_json(plan))
    stream = encode(cloud, plan)
    Path(args.out).write_bytes(stream)
    budget = bit_budget(plan, cloud.bit_depth, extract_slices(cloud, plan))
    print(
        f"encoded {len(cloud)} points in {len(plan.slices)} slices: "
        f"{len(stream)} bytes (payload {budget.payload_bits} bits, "
        f"naive {budget.naive_bits} bits)"
    )
    return 0


def _cmd_decode(args: argparse.Namespace) -> int:
    stream = decode(Path(args.input).read_bytes())
    cloud = stream.cloud
    Path(args.out).write_bytes(write_ply(cloud, args.format))
    print(f"decoded {len(cloud)} points from {len(stream.records)} slices to {args.out}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    cloud = _load_cloud(args.input)
    config = CompareConfig(
        slicer=_slicer_config(args),
        baselines=args.baseline_set,
        capture=CaptureConfig(layer_mode="dual", surface_thickness=args.thickness),
    )
    rows = compare_strategies(cloud, config)
    out = Path(args.out)
    out.write_text(render_csv(rows))
    json_path = Path(args.json) if args.json else out.with_suffix(".json")
    json_path.write_text(render_json(rows))
    print(f"wrote {len(rows)} strategy rows to {out} and {json_path}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "analyze": _cmd_analyze,
    "slice": _cmd_slice,
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "compare": _cmd_compare,
}


def run(args: argparse.Namespace) -> int:
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"sliceseg {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parse_args(list(argv))
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
