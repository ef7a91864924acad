"""Dense voxel grid built from a normalized point cloud.

The grid keeps exact point<->voxel correspondence so segmentation results
computed on voxels can be projected back onto the original points. Colors
are stored as uint8 so a 256^3 grid with occupancy stays well under 100 MB.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cloud_io import PointCloud
from .errors import IndexOutOfRange, PointIndexOutOfRange, ResolutionOutOfRange

MIN_RESOLUTION = 2
MAX_RESOLUTION = 1024
DEFAULT_RESOLUTION = 256


class Axis(enum.Enum):
    X = 0
    Y = 1
    Z = 2


class VoxelIndex(NamedTuple):
    i: int
    j: int
    k: int


@dataclass(frozen=True)
class Frame:
    """One 2D slice of the grid: color image plus occupancy bitmap.

    Arrays are indexed ``[u, v]``; see the view conventions in
    :mod:`promptvox.videos` for how (u, v) maps onto grid axes.
    """

    color: np.ndarray  # (U, V, 3) uint8
    occupancy: np.ndarray  # (U, V) bool

    @property
    def dims(self) -> tuple[int, int]:
        return self.color.shape[0], self.color.shape[1]

    def color_float(self) -> np.ndarray:
        return self.color.astype(np.float64) / 255.0


@dataclass(frozen=True)
class VoxelGrid:
    dims: tuple[int, int, int]
    colors: np.ndarray  # (w, h, l, 3) uint8, zeros where unoccupied
    occupancy: np.ndarray  # (w, h, l) bool
    point_voxels: np.ndarray  # (n, 3) int64: point index -> voxel index
    positions: np.ndarray  # (n, 3) float64, the normalized positions
    # point indices grouped by voxel: _order sorted by flat voxel id (stable,
    # so ascending within a voxel), _order_flat the matching flat ids
    _order: np.ndarray
    _order_flat: np.ndarray

    def __post_init__(self):
        for arr in (
            self.colors,
            self.occupancy,
            self.point_voxels,
            self.positions,
            self._order,
            self._order_flat,
        ):
            arr.setflags(write=False)

    @property
    def n_points(self) -> int:
        return self.point_voxels.shape[0]

    @property
    def resolution(self) -> int:
        return self.dims[0]

    def points_in_voxel(self, index: VoxelIndex | tuple[int, int, int]) -> np.ndarray:
        """Indices of the points that landed inside the given voxel, ascending."""
        i, j, k = index
        _check_voxel(self.dims, i, j, k)
        flat = (i * self.dims[1] + j) * self.dims[2] + k
        lo = np.searchsorted(self._order_flat, flat, side="left")
        hi = np.searchsorted(self._order_flat, flat, side="right")
        return self._order[lo:hi]

    def color_float(self) -> np.ndarray:
        return self.colors.astype(np.float64) / 255.0


def _check_voxel(dims, i, j, k):
    w, h, l = dims
    if not (0 <= i < w and 0 <= j < h and 0 <= k < l):
        raise IndexOutOfRange(f"voxel ({i}, {j}, {k}) outside grid {dims}")


def position_to_voxel(position: np.ndarray, resolution: int) -> np.ndarray:
    """Floor rule: coordinate c maps to index floor(c * R), with 1.0 clamped
    to R - 1. Works on (3,) or (n, 3) arrays."""
    idx = np.floor(np.asarray(position, dtype=np.float64) * resolution).astype(np.int64)
    return np.clip(idx, 0, resolution - 1)


def quantize_color(colors: np.ndarray) -> np.ndarray:
    return np.round(np.asarray(colors, dtype=np.float64) * 255.0).astype(np.uint8)


def voxelize(cloud: PointCloud, resolution: int) -> VoxelGrid:
    """Build the cubic R^3 grid for a cloud with coordinates in [0, 1]^3.

    Each occupied voxel takes the color of the point inside it that lies
    nearest (Euclidean) to the voxel center, ties broken by lowest point
    index. Unoccupied voxels are black with the occupancy bit clear.
    """
    if not MIN_RESOLUTION <= resolution <= MAX_RESOLUTION:
        raise ResolutionOutOfRange(
            f"resolution {resolution} outside [{MIN_RESOLUTION}, {MAX_RESOLUTION}]"
        )
    resolution = int(resolution)
    point_voxels = position_to_voxel(cloud.positions, resolution)
    flat = (
        point_voxels[:, 0] * resolution * resolution
        + point_voxels[:, 1] * resolution
        + point_voxels[:, 2]
    )
    centers = (point_voxels + 0.5) / resolution
    d2 = ((cloud.positions - centers) ** 2).sum(axis=1)
    # sort by voxel, then distance to center, then point index; the first
    # entry of each voxel group is its representative point
    order = np.lexsort((np.arange(cloud.n), d2, flat))
    sorted_flat = flat[order]
    first = np.ones(cloud.n, dtype=bool)
    first[1:] = sorted_flat[1:] != sorted_flat[:-1]
    representatives = order[first]

    shape = (resolution, resolution, resolution)
    occupancy = np.zeros(shape, dtype=bool)
    colors = np.zeros(shape + (3,), dtype=np.uint8)
    rep_voxels = point_voxels[representatives]
    occupancy[rep_voxels[:, 0], rep_voxels[:, 1], rep_voxels[:, 2]] = True
    colors[rep_voxels[:, 0], rep_voxels[:, 1], rep_voxels[:, 2]] = quantize_color(
        cloud.colors[representatives]
    )
    by_voxel = np.argsort(flat, kind="stable")
    return VoxelGrid(
        dims=shape,
        colors=colors,
        occupancy=occupancy,
        point_voxels=point_voxels,
        positions=cloud.positions,
        _order=by_voxel,
        _order_flat=flat[by_voxel],
    )


def slice_grid(grid: VoxelGrid, axis: Axis, index: int) -> Frame:
    """Extract one section perpendicular to ``axis``.

    Pixel conventions (u, v): Z -> (i, j), X -> (j, k), Y -> (i, k).
    """
    extent = grid.dims[axis.value]
    if not 0 <= index < extent:
        raise IndexOutOfRange(f"slice {index} outside axis {axis.name} extent {extent}")
    if axis is Axis.Z:
        color = grid.colors[:, :, index, :]
        occ = grid.occupancy[:, :, index]
    elif axis is Axis.X:
        color = grid.colors[index, :, :, :]
        occ = grid.occupancy[index, :, :]
    else:
        color = grid.colors[:, index, :, :]
        occ = grid.occupancy[:, index, :]
    return Frame(color=np.ascontiguousarray(color), occupancy=np.ascontiguousarray(occ))


def voxel_of_point(grid: VoxelGrid, point_index: int) -> VoxelIndex:
    if not 0 <= point_index < grid.n_points:
        raise PointIndexOutOfRange(
            f"point {point_index} outside cloud of {grid.n_points} points"
        )
    i, j, k = grid.point_voxels[point_index]
    return VoxelIndex(int(i), int(j), int(k))
