"""Brute-force reference computations.

These deliberately avoid the production code paths: voxel colors come from
a per-voxel linear search and 3D regions from a plain breadth-first flood
fill. The bench command checks production results against them, and the
test suite freezes expected values computed here.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .cloud_io import PointCloud
from .voxels import VoxelGrid

_NEIGHBORS_6 = (
    (1, 0, 0), (-1, 0, 0),
    (0, 1, 0), (0, -1, 0),
    (0, 0, 1), (0, 0, -1),
)


def bruteforce_voxelization(cloud: PointCloud, resolution: int):
    """Per-voxel nearest-to-center color search done the slow, obvious way.

    Returns (colors uint8, occupancy bool, point_voxels int64) with the same
    shapes the production voxelizer produces.
    """
    shape = (resolution, resolution, resolution)
    colors = np.zeros(shape + (3,), dtype=np.uint8)
    occupancy = np.zeros(shape, dtype=bool)
    point_voxels = np.zeros((cloud.n, 3), dtype=np.int64)

    buckets: dict[tuple[int, int, int], list[int]] = {}
    for p in range(cloud.n):
        voxel = []
        for c in cloud.positions[p]:
            idx = int(np.floor(c * resolution))
            idx = min(max(idx, 0), resolution - 1)
            voxel.append(idx)
        voxel = tuple(voxel)
        point_voxels[p] = voxel
        buckets.setdefault(voxel, []).append(p)

    for voxel, members in buckets.items():
        center = (np.array(voxel) + 0.5) / resolution
        best = None
        for p in members:  # members ascend, so ties keep the lowest index
            d2 = float(((cloud.positions[p] - center) ** 2).sum())
            if best is None or d2 < best[0]:
                best = (d2, p)
        occupancy[voxel] = True
        colors[voxel] = np.round(cloud.colors[best[1]] * 255.0).astype(np.uint8)
    return colors, occupancy, point_voxels


def flood_fill_3d(
    occupancy: np.ndarray,
    colors_float: np.ndarray,
    seeds: list[tuple[int, int, int]],
    reference_color: np.ndarray,
    tolerance: float,
) -> np.ndarray:
    """6-connected region of occupied voxels within ``tolerance`` of
    ``reference_color``, grown from every seed that itself qualifies."""
    dims = occupancy.shape
    mask = np.zeros(dims, dtype=bool)
    queue = deque()
    for seed in seeds:
        if _qualifies(seed, occupancy, colors_float, reference_color, tolerance) and not mask[seed]:
            mask[seed] = True
            queue.append(seed)
    while queue:
        i, j, k = queue.popleft()
        for di, dj, dk in _NEIGHBORS_6:
            nxt = (i + di, j + dj, k + dk)
            if not (0 <= nxt[0] < dims[0] and 0 <= nxt[1] < dims[1] and 0 <= nxt[2] < dims[2]):
                continue
            if mask[nxt]:
                continue
            if _qualifies(nxt, occupancy, colors_float, reference_color, tolerance):
                mask[nxt] = True
                queue.append(nxt)
    return mask


def _qualifies(voxel, occupancy, colors_float, reference_color, tolerance) -> bool:
    if not occupancy[voxel]:
        return False
    delta = colors_float[voxel] - reference_color
    return float(np.sqrt((delta * delta).sum())) <= tolerance


def component_of_seed(grid: VoxelGrid, seed: tuple[int, int, int], tolerance: float) -> np.ndarray:
    """Same-color 6-connected component containing ``seed``."""
    colors_float = grid.color_float()
    return flood_fill_3d(
        grid.occupancy, colors_float, [tuple(seed)], colors_float[tuple(seed)], tolerance
    )


def component_of_seeds(
    grid: VoxelGrid,
    seeds: list[tuple[int, int, int]],
    reference_color: np.ndarray,
    tolerance: float,
) -> np.ndarray:
    return flood_fill_3d(grid.occupancy, grid.color_float(), seeds, reference_color, tolerance)
