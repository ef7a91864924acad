"""Command-line entry points.

Subcommands: ``segment`` (one prompt, one mask file out), ``voxelize``
(grid stats and slice images), ``serve`` (run the HTTP service), and
``bench`` (seeded oracle-equivalence suite over random scenes).

Prompt coordinates are given in the input cloud's original units; the
normalization applied before voxelization is applied to prompts too.
Exit codes for segment/voxelize: 1 I/O or usage, 2 bad prompt, 3 backend
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import oracle, scenes
from .backends import ReferenceBackend, RemoteBackend
from .cloud_io import (
    NormalizationTransform,
    load_cloud,
    load_point_mask,
    normalize,
    save_point_mask,
)
from .config import ENV_PREFIX, load_config
from .errors import (
    BackendUnavailable,
    PartialBackendFailure,
    PromptVoxError,
    ProtocolError,
    RemoteFailure,
)
from .pipeline import RunParams, segment_3d
from .prompts import BoxPrompt, MaskPrompt, PointPrompt, Prompt3D, clamp_unit
from .voxels import Axis, slice_grid, voxelize

EXIT_OK = 0
EXIT_IO = 1
EXIT_BAD_PROMPT = 2
EXIT_BACKEND = 3

_BACKEND_ERRORS = (BackendUnavailable, RemoteFailure, ProtocolError, PartialBackendFailure)


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on usage errors instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def parse_prompt_spec(
    spec: str, transform: NormalizationTransform, n_points: int
) -> Prompt3D:
    """``point:x,y,z`` | ``box:x,y,z,w,h,l[,rot=a,b,g]`` | ``mask:@file``."""
    kind, _, rest = spec.partition(":")
    if kind == "point":
        values = [float(v) for v in rest.split(",")]
        if len(values) != 3:
            raise ValueError("point prompt needs 3 coordinates")
        return PointPrompt(tuple(clamp_unit(transform.apply(np.array(values)))))
    if kind == "box":
        parts = rest.split(",")
        rotation = (0.0, 0.0, 0.0)
        if len(parts) == 9 and parts[6].startswith("rot="):
            rotation = (float(parts[6][4:]), float(parts[7]), float(parts[8]))
            parts = parts[:6]
        if len(parts) != 6:
            raise ValueError("box prompt needs x,y,z,w,h,l with optional rot=a,b,g")
        values = [float(v) for v in parts]
        center = clamp_unit(transform.apply(np.array(values[:3])))
        dims = tuple(d * transform.scale for d in values[3:])
        return BoxPrompt(tuple(center), dims, rotation)
    if kind == "mask":
        if not rest.startswith("@"):
            raise ValueError("mask prompt must reference a file: mask:@path")
        bits = load_point_mask(rest[1:])
        if bits.shape[0] != n_points:
            raise ValueError(
                f"mask file covers {bits.shape[0]} points, cloud has {n_points}"
            )
        return MaskPrompt(bits)
    raise ValueError(f"unknown prompt kind {kind!r}")


def _make_backend(spec: str, deadline: float):
    if spec == "reference":
        return ReferenceBackend()
    if spec.startswith(("http://", "https://")):
        return RemoteBackend(endpoint=spec, deadline=deadline)
    raise ValueError(f"backend must be 'reference' or an http(s) URL, got {spec!r}")


def cmd_segment(args) -> int:
    try:
        cloud = load_cloud(args.input, args.format)
        normalized, transform = normalize(cloud)
    except PromptVoxError as exc:
        return _fail(EXIT_IO, str(exc))
    try:
        grid = voxelize(normalized, args.resolution)
    except PromptVoxError as exc:
        return _fail(EXIT_IO, str(exc))
    try:
        prompt = parse_prompt_spec(args.prompt, transform, cloud.n)
        backend = _make_backend(args.backend, args.deadline)
        params = RunParams(
            color_tolerance=args.tau, seed_radius=args.rho, fusion_votes=args.fusion_votes
        )
    except (ValueError, PromptVoxError) as exc:
        return _fail(EXIT_BAD_PROMPT, str(exc))
    try:
        result = segment_3d(normalized, grid, prompt, backend, params)
    except _BACKEND_ERRORS as exc:
        return _fail(EXIT_BACKEND, str(exc))
    except PromptVoxError as exc:
        return _fail(EXIT_BAD_PROMPT, str(exc))
    try:
        save_point_mask(result.point_mask, args.out, n=cloud.n)
        if args.dump_views:
            _dump_views(result, Path(args.dump_views))
    except PromptVoxError as exc:
        return _fail(EXIT_IO, str(exc))
    print(f"selected {result.selected_count} of {cloud.n} points")
    return EXIT_OK


def _dump_views(result, out_dir: Path) -> None:
    from PIL import Image

    for view, response in result.per_view.items():
        view_dir = out_dir / view.label.replace("+", "pos").replace("-", "neg")
        view_dir.mkdir(parents=True, exist_ok=True)
        for t, mask in enumerate(response.masks):
            img = Image.fromarray(np.where(mask.T, 255, 0).astype(np.uint8), mode="L")
            img.save(view_dir / f"frame_{t:04d}.png")


def cmd_voxelize(args) -> int:
    try:
        cloud = load_cloud(args.input, args.format)
        normalized, _ = normalize(cloud)
        grid = voxelize(normalized, args.resolution)
    except PromptVoxError as exc:
        return _fail(EXIT_IO, str(exc))
    occupied = int(grid.occupancy.sum())
    stats = {
        "resolution": args.resolution,
        "points": cloud.n,
        "occupied_voxels": occupied,
        "total_voxels": args.resolution ** 3,
        "occupancy_fraction": occupied / args.resolution ** 3,
    }
    print(json.dumps(stats, sort_keys=True))
    if args.slice:
        try:
            axis_name, _, index_text = args.slice.partition(":")
            axis = Axis[axis_name.upper()]
            frame = slice_grid(grid, axis, int(index_text))
        except (KeyError, ValueError, PromptVoxError) as exc:
            return _fail(EXIT_IO, f"bad slice spec {args.slice!r}: {exc}")
        from PIL import Image

        out = args.slice_out or f"slice_{axis_name.lower()}{index_text}.png"
        Image.fromarray(frame.color.transpose(1, 0, 2), mode="RGB").save(out)
        print(f"wrote {out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = load_config(
        path=args.config,
        host=args.host,
        port=args.port,
        default_resolution=args.resolution,
        backend=args.backend,
        backend_url=args.backend_url,
        color_tolerance=args.tau,
        seed_radius=args.rho,
        persist_dir=args.persist_dir,
        request_deadline=args.deadline,
    )
    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="info")
    return EXIT_OK


def _collect_view_voxels(result) -> dict:
    from .videos import frame_mask_to_voxels

    out = {}
    for view, response in result.per_view.items():
        hits = []
        for t, mask in enumerate(response.masks):
            if mask.any():
                hits.append(frame_mask_to_voxels(view, t, mask))
        out[view] = (
            np.concatenate(hits) if hits else np.zeros((0, 3), dtype=np.int64)
        )
    return out


def cmd_bench(args) -> int:
    rng = np.random.default_rng(args.seed)
    params = RunParams(color_tolerance=args.tau, seed_radius=args.rho)
    backend = ReferenceBackend()
    rows = []
    started = time.monotonic()
    for scene_idx in range(args.scenes):
        scene = scenes.random_block_scene(rng, resolution=args.resolution)
        grid = voxelize(scene.cloud, args.resolution)
        block = scene.blocks[int(rng.integers(len(scene.blocks)))]
        voxel = tuple(
            int(rng.integers(lo, hi + 1)) for lo, hi in zip(block.lo, block.hi)
        )
        seed_position = tuple((v + 0.5) / args.resolution for v in voxel)
        expected = oracle.component_of_seed(grid, voxel, args.tau)

        result = segment_3d(scene.cloud, grid, PointPrompt(seed_position), backend, params)
        contained = bool((~expected & result.voxel_mask).sum() == 0)
        per_view_ok = all(
            expected[v[:, 0], v[:, 1], v[:, 2]].all()
            for v in _collect_view_voxels(result).values()
            if v.shape[0]
        )
        rows.append((scene_idx, "point-containment", contained and per_view_ok))
        rows.append(
            (scene_idx, "point-convex-equality", bool((result.voxel_mask == expected).all()))
        )

        box_prompt = BoxPrompt(
            block.center_position(args.resolution), block.extents(args.resolution)
        )
        box_result = segment_3d(scene.cloud, grid, box_prompt, backend, params)
        rows.append(
            (scene_idx, "box-convex-equality", bool((box_result.voxel_mask == expected).all()))
        )

        subset = np.zeros(scene.cloud.n, dtype=bool)
        chosen = rng.choice(
            block.point_indices, size=max(1, len(block.point_indices) // 3), replace=False
        )
        subset[chosen] = True
        mask_result = segment_3d(scene.cloud, grid, MaskPrompt(subset), backend, params)
        rows.append(
            (scene_idx, "mask-convex-equality", bool((mask_result.voxel_mask == expected).all()))
        )
    elapsed = time.monotonic() - started

    failures = 0
    print(f"{'scene':>5}  {'check':<24} result")
    for scene_idx, check, ok in rows:
        print(f"{scene_idx:>5}  {check:<24} {'PASS' if ok else 'FAIL'}")
        failures += 0 if ok else 1
    print(f"{len(rows)} checks, {len(rows) - failures} passed, {failures} failed")
    print(f"wall time: {elapsed:.2f}s for {args.scenes} scenes", file=sys.stderr)
    return EXIT_OK if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    env = os.environ
    parser = _Parser(prog="promptvox", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    segment = sub.add_parser("segment", help="segment one prompt into a mask file")
    segment.add_argument("--input", required=True)
    segment.add_argument("--format", default="auto")
    segment.add_argument("--prompt", required=True, help="point:x,y,z | box:... | mask:@file")
    segment.add_argument("--resolution", type=int, default=int(env.get(ENV_PREFIX + "RESOLUTION", 256)))
    segment.add_argument("--backend", default=env.get(ENV_PREFIX + "BACKEND_URL") or "reference")
    segment.add_argument("--out", required=True)
    segment.add_argument("--tau", type=float, default=float(env.get(ENV_PREFIX + "COLOR_TOLERANCE", 0.1)))
    segment.add_argument("--rho", type=int, default=int(env.get(ENV_PREFIX + "SEED_RADIUS", 2)))
    segment.add_argument("--fusion-votes", type=int, default=1, dest="fusion_votes")
    segment.add_argument("--deadline", type=float, default=float(env.get(ENV_PREFIX + "DEADLINE", 30.0)))
    segment.add_argument("--dump-views", default=None, dest="dump_views")
    segment.set_defaults(func=cmd_segment)

    voxelize_cmd = sub.add_parser("voxelize", help="report grid stats, optionally dump a slice")
    voxelize_cmd.add_argument("--input", required=True)
    voxelize_cmd.add_argument("--format", default="auto")
    voxelize_cmd.add_argument("--resolution", type=int, default=int(env.get(ENV_PREFIX + "RESOLUTION", 256)))
    voxelize_cmd.add_argument("--slice", default=None, help="axis:index, e.g. z:8")
    voxelize_cmd.add_argument("--slice-out", default=None, dest="slice_out")
    voxelize_cmd.set_defaults(func=cmd_voxelize)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", default=None)
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.add_argument("--resolution", type=int, default=None)
    serve.add_argument("--backend", default=None)
    serve.add_argument("--backend-url", default=None, dest="backend_url")
    serve.add_argument("--tau", type=float, default=None)
    serve.add_argument("--rho", type=int, default=None)
    serve.add_argument("--persist-dir", default=None, dest="persist_dir")
    serve.add_argument("--deadline", type=float, default=None)
    serve.set_defaults(func=cmd_serve)

    bench = sub.add_parser("bench", help="oracle-equivalence suite on random scenes")
    bench.add_argument("--seed", type=int, default=42)
    bench.add_argument("--scenes", type=int, default=20)
    bench.add_argument("--resolution", type=int, default=32)
    bench.add_argument("--tau", type=float, default=0.1)
    bench.add_argument("--rho", type=int, default=2)
    bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
