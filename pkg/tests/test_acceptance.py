"""Acceptance suite: one test per release criterion, each printing a
PASS line with its measured budget when it completes.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import base64
import subprocess
import sys
import threading
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient
from scipy.spatial.transform import Rotation

from promptvox.backends import ReferenceBackend
from promptvox.cloud_io import load_cloud, parse_kitti_bin, save_cloud
from promptvox.config import ServiceConfig
from promptvox.oracle import bruteforce_voxelization, component_of_seed
from promptvox.pipeline import SegmentationResult, refine, segment_3d
from promptvox.prompts import (
    BoxPrompt,
    MaskPrompt,
    PointPrompt,
    Rect2D,
    _aligned_box_rect,
    _rotated_box_rect,
    snap_interval,
)
from promptvox.scenes import random_block_scene, three_block_scene
from promptvox.service import create_app
from promptvox.videos import (
    frame_mask_to_voxels,
    frame_pixel_to_voxel,
    views_for_dims,
    voxel_to_frame_pixel,
)
from promptvox.voxels import Axis, VoxelIndex, voxelize

from conftest import random_cloud

BACKEND = ReferenceBackend()


def _report(name, detail=""):
    suffix = f" ({detail})" if detail else ""
    print(f"[ACCEPTANCE] {name}: PASS{suffix}")


def test_voxelization_oracle():
    """200 random clouds: colors and point<->voxel maps match brute force exactly."""
    rng = np.random.default_rng(101)
    started = time.monotonic()
    for _ in range(200):
        n = int(rng.integers(1, 201))
        resolution = int(rng.integers(2, 9))
        cloud = random_cloud(rng, n)
        grid = voxelize(cloud, resolution)
        colors, occupancy, point_voxels = bruteforce_voxelization(cloud, resolution)
        assert np.array_equal(grid.colors, colors)
        assert np.array_equal(grid.occupancy, occupancy)
        assert np.array_equal(grid.point_voxels, point_voxels)
    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"voxelization oracle took {elapsed:.1f}s (budget 10s)"
    _report("voxelization-oracle", f"200 clouds in {elapsed:.2f}s")


def test_slicing_arithmetic():
    """1000 random (R, anchor): frame counts, anchor-frame rule, exact round trip."""
    rng = np.random.default_rng(202)
    for _ in range(1000):
        resolution = int(rng.integers(2, 129))
        anchor = VoxelIndex(*(int(rng.integers(0, resolution)) for _ in range(3)))
        views = views_for_dims((resolution,) * 3, anchor)
        for axis in Axis:
            plus, minus = [v for v in views if v.axis is axis]
            assert plus.n_frames + minus.n_frames == resolution + 1
            assert plus.slice_of_frame(0) == minus.slice_of_frame(0) == anchor[axis.value]
        view = views[int(rng.integers(6))]
        t = int(rng.integers(view.n_frames))
        pixel = (int(rng.integers(resolution)), int(rng.integers(resolution)))
        voxel = frame_pixel_to_voxel(view, t, pixel)
        assert voxel_to_frame_pixel(view, voxel) == (t, pixel)
    _report("slicing-arithmetic", "1000 (R, anchor) pairs")


def test_propagation_containment():
    """100 random multi-block scenes: per-view and fused results stay inside
    the seed's same-color 6-connected component. Zero violations."""
    rng = np.random.default_rng(303)
    violations = 0
    for _ in range(100):
        resolution = int(rng.choice([16, 24, 32]))
        scene = random_block_scene(rng, resolution=resolution, n_blocks=3)
        grid = voxelize(scene.cloud, resolution)
        block = scene.blocks[int(rng.integers(len(scene.blocks)))]
        voxel = tuple(int(rng.integers(lo, hi + 1)) for lo, hi in zip(block.lo, block.hi))
        prompt = PointPrompt(tuple((v + 0.5) / resolution for v in voxel))
        result = segment_3d(scene.cloud, grid, prompt, BACKEND)
        component = component_of_seed(grid, voxel, 0.1)
        for view, response in result.per_view.items():
            for t, mask in enumerate(response.masks):
                if not mask.any():
                    continue
                voxels = frame_mask_to_voxels(view, t, mask)
                if not component[voxels[:, 0], voxels[:, 1], voxels[:, 2]].all():
                    violations += 1
        if (result.voxel_mask & ~component).any():
            violations += 1
    assert violations == 0
    _report("propagation-containment", "100 scenes, zero violations")


def test_convex_equality():
    """50 solid uniform boxes: fused result equals the brute-force component
    exactly for point, tight-box, and random subset-mask prompts."""
    rng = np.random.default_rng(404)
    started = time.monotonic()
    for _ in range(50):
        resolution = int(rng.choice([16, 24, 32]))
        scene = random_block_scene(rng, resolution=resolution, n_blocks=1, max_side=8)
        grid = voxelize(scene.cloud, resolution)
        block = scene.blocks[0]
        seed_voxel = tuple(int(rng.integers(lo, hi + 1)) for lo, hi in zip(block.lo, block.hi))
        expected = component_of_seed(grid, seed_voxel, 0.1)

        point_result = segment_3d(
            scene.cloud,
            grid,
            PointPrompt(tuple((v + 0.5) / resolution for v in seed_voxel)),
            BACKEND,
        )
        assert np.array_equal(point_result.voxel_mask, expected)

        box_result = segment_3d(
            scene.cloud,
            grid,
            BoxPrompt(block.center_position(resolution), block.extents(resolution)),
            BACKEND,
        )
        assert np.array_equal(box_result.voxel_mask, expected)

        k = int(rng.integers(1, len(block.point_indices) + 1))
        subset = np.zeros(scene.cloud.n, dtype=bool)
        subset[rng.choice(block.point_indices, size=k, replace=False)] = True
        mask_result = segment_3d(scene.cloud, grid, MaskPrompt(subset), BACKEND)
        assert np.array_equal(mask_result.voxel_mask, expected)
    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"convex equality took {elapsed:.1f}s (budget 30s)"
    _report("convex-equality", f"50 boxes x 3 prompt types in {elapsed:.2f}s")


def test_prompt_geometry():
    """500 random rotated boxes match an independent 8-corner oracle; the
    zero-rotation fast path agrees with the rotated path at (0,0,0)."""
    rng = np.random.default_rng(505)
    resolution = 16
    views = views_for_dims((resolution,) * 3, VoxelIndex(8, 8, 8))
    plane = {Axis.Z: (0, 1), Axis.X: (1, 2), Axis.Y: (0, 2)}

    def oracle(box, view):
        rot = Rotation.from_euler("xyz", box.rotation).as_matrix()
        half = np.array(box.dims) / 2.0
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
            dtype=float,
        )
        corners = np.array(box.center) + (signs * half) @ rot.T
        ua, va = plane[view.axis]
        u_snap = snap_interval(corners[:, ua].min(), corners[:, ua].max(), view.frame_dims[0])
        v_snap = snap_interval(corners[:, va].min(), corners[:, va].max(), view.frame_dims[1])
        assert u_snap and v_snap
        return Rect2D(u_snap[0], v_snap[0], u_snap[1], v_snap[1])

    for _ in range(500):
        box = BoxPrompt(
            tuple(rng.uniform(0.2, 0.8, 3)),
            tuple(rng.uniform(0.05, 0.45, 3)),
            tuple(rng.uniform(-np.pi, np.pi, 3)),
        )
        view = views[int(rng.integers(6))]
        assert _rotated_box_rect(box, view) == oracle(box, view)
        flat = BoxPrompt(box.center, box.dims)
        assert _aligned_box_rect(flat, view) == _rotated_box_rect(flat, view)
    _report("prompt-geometry", "500 boxes vs 8-corner oracle")


def test_refinement_fixed_point():
    """Refining an exact block reproduces it byte for byte; refining any
    nonempty subset of a uniform block yields the full block."""
    scene = three_block_scene(32)
    grid = voxelize(scene.cloud, 32)
    block = scene.blocks[1]
    exact = segment_3d(
        scene.cloud, grid, PointPrompt(block.center_position(32)), BACKEND
    )
    refined = refine(exact, scene.cloud, grid, BACKEND)
    assert refined.point_mask.tobytes() == exact.point_mask.tobytes()
    assert refined.voxel_mask.tobytes() == exact.voxel_mask.tobytes()

    full_block = np.zeros(scene.cloud.n, dtype=bool)
    full_block[block.point_indices] = True
    rng = np.random.default_rng(606)
    subsets = [
        block.point_indices[:1],  # single point
        block.point_indices[[0, -1]],  # two opposite corners
        rng.choice(block.point_indices, size=10, replace=False),
        block.point_indices[: len(block.point_indices) // 2],
        block.point_indices,  # everything
    ]
    for subset in subsets:
        seed = np.zeros(scene.cloud.n, dtype=bool)
        seed[subset] = True
        stub = SegmentationResult(
            voxel_mask=np.zeros(grid.dims, dtype=bool),
            point_mask=seed,
            per_view={},
            prompt_used=exact.prompt_used,
            params_used=exact.params_used,
            anchor=exact.anchor,
        )
        grown = refine(stub, scene.cloud, grid, BACKEND)
        assert np.array_equal(grown.point_mask, full_block)
    _report("refinement-fixed-point", f"{len(subsets)} subset masks")


def test_end_to_end_cli(tmp_path):
    """Golden scene at R=32: each block recovered from each prompt type via
    the CLI, under 5s per run, byte-stable across repeat runs."""
    scene = three_block_scene(32)
    cloud_path = tmp_path / "scene.txt"
    save_cloud(scene.cloud, cloud_path)

    seed_mask_path = tmp_path / "seed.mask"
    seed = np.zeros(scene.cloud.n, dtype=bool)
    seed[scene.blocks[2].point_indices[::5]] = True
    from promptvox.cloud_io import load_point_mask, save_point_mask

    save_point_mask(seed, seed_mask_path)

    prompts = [
        (0, "point:" + ",".join(repr(c) for c in scene.blocks[0].center_position(32))),
        (
            1,
            "box:"
            + ",".join(repr(c) for c in scene.blocks[1].center_position(32))
            + ","
            + ",".join(repr(e) for e in scene.blocks[1].extents(32)),
        ),
        (2, f"mask:@{seed_mask_path}"),
    ]
    for block_idx, prompt in prompts:
        runs = []
        for attempt in range(2):
            out = tmp_path / f"out_{block_idx}_{attempt}.mask"
            started = time.monotonic()
            proc = subprocess.run(
                [
                    sys.executable, "-m", "promptvox.cli",
                    "segment",
                    "--input", str(cloud_path),
                    "--prompt", prompt,
                    "--resolution", "32",
                    "--backend", "reference",
                    "--out", str(out),
                ],
                capture_output=True,
                text=True,
            )
            elapsed = time.monotonic() - started
            assert proc.returncode == 0, proc.stderr
            assert elapsed < 5.0, f"CLI run took {elapsed:.1f}s (budget 5s)"
            runs.append((out.read_bytes(), proc.stdout))
        assert runs[0] == runs[1], "CLI output not byte-stable"
        mask = load_point_mask(tmp_path / f"out_{block_idx}_0.mask")
        assert np.array_equal(
            np.flatnonzero(mask), scene.blocks[block_idx].point_indices
        )
    _report("end-to-end-cli", "3 prompt types x 2 runs")


def test_service_determinism_and_conflict():
    """Identical prompts return identical masks; concurrent prompts on one
    session produce exactly one 409."""
    scene = three_block_scene(16)
    lines = [
        f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g} {c[0]:.17g} {c[1]:.17g} {c[2]:.17g}"
        for p, c in zip(scene.cloud.positions, scene.cloud.colors)
    ]
    payload = base64.b64encode("\n".join(lines).encode()).decode()

    app = create_app(ServiceConfig(default_resolution=16))
    with TestClient(app) as client:
        cloud_id = client.post(
            "/clouds", json={"format": "xyzrgb_text", "content_b64": payload}
        ).json()["cloud_id"]
        session_id = client.post(
            "/sessions", json={"cloud_id": cloud_id, "resolution": 16}
        ).json()["session_id"]
        prompt = {"type": "point", "point": list(scene.blocks[0].center_position(16))}
        first = client.post(f"/sessions/{session_id}/prompts", json=prompt).json()
        second = client.post(f"/sessions/{session_id}/prompts", json=prompt).json()
        mask_a = client.get(
            f"/sessions/{session_id}/results/{first['result_id']}/mask"
        )
        mask_b = client.get(
            f"/sessions/{session_id}/results/{second['result_id']}/mask"
        )
        assert mask_a.content == mask_b.content

    class GatedBackend:
        def __init__(self):
            self.release = threading.Event()
            self.entered = threading.Event()

        def segment_video(self, request):
            self.entered.set()
            assert self.release.wait(timeout=10)
            return BACKEND.segment_video(request)

    gate = GatedBackend()
    app = create_app(
        ServiceConfig(default_resolution=16), backend_factory=lambda n, u, c: gate
    )
    with TestClient(app) as client:
        cloud_id = client.post(
            "/clouds", json={"format": "xyzrgb_text", "content_b64": payload}
        ).json()["cloud_id"]
        session_id = client.post(
            "/sessions", json={"cloud_id": cloud_id, "resolution": 16}
        ).json()["session_id"]
        prompt = {"type": "point", "point": list(scene.blocks[0].center_position(16))}
        statuses = []

        def run():
            statuses.append(
                client.post(f"/sessions/{session_id}/prompts", json=prompt).status_code
            )

        blocker = threading.Thread(target=run)
        blocker.start()
        assert gate.entered.wait(timeout=10)
        contender = threading.Thread(target=run)
        contender.start()
        contender.join(timeout=10)
        gate.release.set()
        blocker.join(timeout=10)
        assert sorted(statuses) == [201, 409]
    _report("service-determinism", "byte-identical masks, exactly one 409")


def test_kitti_ingestion(tmp_path):
    """Synthetic 16-byte records load back as the exact float tuples written,
    with intensity i as color (i, i, i)."""
    rng = np.random.default_rng(707)
    records = np.empty((64, 4), dtype="<f4")
    records[:, :3] = rng.normal(scale=20.0, size=(64, 3)).astype("<f4")
    records[:, 3] = rng.random(64).astype("<f4")
    path = tmp_path / "scan.bin"
    path.write_bytes(records.tobytes())
    assert path.stat().st_size == 64 * 16

    cloud = load_cloud(path)
    assert cloud.n == 64
    assert np.array_equal(cloud.positions, records[:, :3].astype(np.float64))
    expected_color = np.repeat(records[:, 3].astype(np.float64)[:, None], 3, axis=1)
    assert np.array_equal(cloud.colors, expected_color)

    with pytest.raises(Exception):
        parse_kitti_bin(records.tobytes() + b"\x00\x01")
    _report("kitti-ingestion", "64 records, bit-exact")
