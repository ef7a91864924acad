"""3D prompts and their projection onto directional video first frames.

Three prompt kinds are supported: a point, a box (optionally rotated), and
a per-point mask. Each derives an anchor voxel, and each projects to a 2D
prompt on the anchor section of a view: a pixel, a rectangle, or a bitmap.

Euler convention for box rotation: extrinsic rotations applied about x,
then y, then z, i.e. R = Rz(gamma) @ Ry(beta) @ Rx(alpha).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyMaskPrompt,
    LengthMismatch,
    MalformedPrompt,
    PromptOutsideGrid,
)
from .videos import DirectionalView, _FRAME_AXES
from .voxels import Axis, VoxelGrid, VoxelIndex, position_to_voxel


def clamp_unit(values, tol: float = 1e-9) -> np.ndarray:
    """Snap coordinates within ``tol`` of [0, 1] onto the boundary.

    Normalization maps the bbox into the unit cube only up to one ulp, so
    prompts converted from original coordinates may overshoot by float dust;
    anything further out is left alone and fails validation downstream.
    """
    arr = np.asarray(values, dtype=np.float64).copy()
    arr[(arr < 0.0) & (arr >= -tol)] = 0.0
    arr[(arr > 1.0) & (arr <= 1.0 + tol)] = 1.0
    return arr


def _unit_range(name: str, values) -> tuple[float, float, float]:
    vec = tuple(float(v) for v in values)
    if len(vec) != 3:
        raise MalformedPrompt(f"{name} must have 3 components")
    if not all(np.isfinite(vec)):
        raise MalformedPrompt(f"{name} contains non-finite values")
    if any(v < 0.0 or v > 1.0 for v in vec):
        raise PromptOutsideGrid(f"{name} {vec} outside the unit cube")
    return vec


@dataclass(frozen=True)
class PointPrompt:
    position: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "position", _unit_range("point prompt", self.position))


@dataclass(frozen=True)
class BoxPrompt:
    center: tuple[float, float, float]
    dims: tuple[float, float, float]
    rotation: tuple[float, float, float] = (0.0, 0.0, 0.0)  # radians

    def __post_init__(self):
        object.__setattr__(self, "center", _unit_range("box center", self.center))
        dims = tuple(float(v) for v in self.dims)
        if len(dims) != 3 or not all(np.isfinite(dims)) or min(dims) <= 0:
            raise MalformedPrompt(f"box dims must be positive, got {dims}")
        rotation = tuple(float(v) for v in self.rotation)
        if len(rotation) != 3 or not all(np.isfinite(rotation)):
            raise MalformedPrompt(f"bad rotation {rotation}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "rotation", rotation)

    @property
    def is_rotated(self) -> bool:
        return self.rotation != (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class MaskPrompt:
    bits: np.ndarray  # (n,) bool over point indices

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=bool)
        if bits.ndim != 1:
            raise MalformedPrompt("mask prompt must be one-dimensional")
        if not bits.any():
            raise EmptyMaskPrompt("mask prompt has no set bits")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)


Prompt3D = PointPrompt | BoxPrompt | MaskPrompt


@dataclass(frozen=True)
class Point2D:
    u: int
    v: int


@dataclass(frozen=True)
class Rect2D:
    u_min: int
    v_min: int
    u_max: int  # inclusive
    v_max: int

    def __post_init__(self):
        if self.u_min > self.u_max or self.v_min > self.v_max:
            raise MalformedPrompt(f"empty rectangle {self}")
        if self.u_min < 0 or self.v_min < 0:
            raise MalformedPrompt(f"negative rectangle bounds {self}")


@dataclass(frozen=True)
class Mask2D:
    bitmap: np.ndarray  # (U, V) bool

    def __post_init__(self):
        bitmap = np.ascontiguousarray(self.bitmap, dtype=bool)
        bitmap.setflags(write=False)
        object.__setattr__(self, "bitmap", bitmap)


Prompt2D = Point2D | Rect2D | Mask2D


def _snap_trig(value: float) -> float:
    # cos(pi/2) evaluates to ~6e-17; quarter turns must permute footprints
    # exactly, so trig values this close to the lattice are treated as exact
    for target in (-1.0, 0.0, 1.0):
        if abs(value - target) < 1e-12:
            return target
    return value


def rotation_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Rz(gamma) @ Ry(beta) @ Rx(alpha)."""
    ca, sa = _snap_trig(np.cos(alpha)), _snap_trig(np.sin(alpha))
    cb, sb = _snap_trig(np.cos(beta)), _snap_trig(np.sin(beta))
    cg, sg = _snap_trig(np.cos(gamma)), _snap_trig(np.sin(gamma))
    rx = np.array([[1, 0, 0], [0, ca, -sa], [0, sa, ca]])
    ry = np.array([[cb, 0, sb], [0, 1, 0], [-sb, 0, cb]])
    rz = np.array([[cg, -sg, 0], [sg, cg, 0], [0, 0, 1]])
    return rz @ ry @ rx


def box_corners(box: BoxPrompt) -> np.ndarray:
    """The 8 corners after rotating the box about its center, shape (8, 3)."""
    center = np.array(box.center)
    half = np.array(box.dims) / 2.0
    signs = np.array(
        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
        dtype=np.float64,
    )
    rot = rotation_matrix(*box.rotation)
    return center + (signs * half) @ rot.T


def _masked_voxels(prompt: MaskPrompt, grid: VoxelGrid) -> np.ndarray:
    if prompt.bits.shape[0] != grid.n_points:
        raise LengthMismatch(
            f"mask prompt has {prompt.bits.shape[0]} bits, cloud has {grid.n_points} points"
        )
    return grid.point_voxels[prompt.bits]


def anchor_of(prompt: Prompt3D, grid: VoxelGrid) -> VoxelIndex:
    """Anchor voxel: the point itself, the box center, or the mask centroid."""
    if isinstance(prompt, PointPrompt):
        pos = np.array(prompt.position)
    elif isinstance(prompt, BoxPrompt):
        pos = np.array(prompt.center)
    else:
        pos = _masked_voxels(prompt, grid)  # validates length
        pos = grid.positions[prompt.bits].mean(axis=0)
    i, j, k = position_to_voxel(pos, grid.resolution)
    return VoxelIndex(int(i), int(j), int(k))


def snap_interval(lo: float, hi: float, extent: int) -> tuple[int, int] | None:
    """Map a continuous footprint [lo, hi] to the inclusive pixel range
    [floor(lo*R), ceil(hi*R)-1], clipped to [0, extent-1]. None when the
    clipped range is empty."""
    a = int(np.floor(lo * extent))
    b = int(np.ceil(hi * extent)) - 1
    a, b = max(a, 0), min(b, extent - 1)
    if a > b:
        return None
    return a, b


def _in_plane_axes(view: DirectionalView) -> tuple[Axis, Axis]:
    return _FRAME_AXES[view.axis]


def _pixel_of_voxel(view: DirectionalView, voxel: VoxelIndex) -> Point2D:
    u_axis, v_axis = _in_plane_axes(view)
    return Point2D(int(voxel[u_axis.value]), int(voxel[v_axis.value]))


def _aligned_box_rect(box: BoxPrompt, view: DirectionalView) -> Rect2D | None:
    u_axis, v_axis = _in_plane_axes(view)
    extents = {}
    for axis in (u_axis, v_axis):
        c = box.center[axis.value]
        half = box.dims[axis.value] / 2.0
        extents[axis] = (c - half, c + half)
    return _rect_from_footprint(extents[u_axis], extents[v_axis], view)


def _rotated_box_rect(box: BoxPrompt, view: DirectionalView) -> Rect2D | None:
    corners = box_corners(box)
    u_axis, v_axis = _in_plane_axes(view)
    us = corners[:, u_axis.value]
    vs = corners[:, v_axis.value]
    return _rect_from_footprint((us.min(), us.max()), (vs.min(), vs.max()), view)


def _rect_from_footprint(u_range, v_range, view: DirectionalView) -> Rect2D | None:
    u_snap = snap_interval(u_range[0], u_range[1], view.frame_dims[0])
    v_snap = snap_interval(v_range[0], v_range[1], view.frame_dims[1])
    if u_snap is None or v_snap is None:
        return None
    return Rect2D(u_snap[0], v_snap[0], u_snap[1], v_snap[1])


def voxelized_mask(prompt: MaskPrompt, grid: VoxelGrid) -> np.ndarray:
    """3D bitmap with a voxel set iff it contains at least one masked point."""
    voxels = _masked_voxels(prompt, grid)
    out = np.zeros(grid.dims, dtype=bool)
    out[voxels[:, 0], voxels[:, 1], voxels[:, 2]] = True
    return out


def project_prompt(prompt: Prompt3D, view: DirectionalView, grid: VoxelGrid) -> Prompt2D:
    """Place a 3D prompt on the first frame of a directional video.

    Points land on their voxel's pixel. Boxes become the pixel bounding
    rectangle of their (possibly rotated) footprint. Masks become the slice
    of the voxelized 3D mask at the view's anchor section. Raises
    :class:`PromptOutsideGrid` when a box rectangle clips away entirely or
    a mask slice is empty.
    """
    if isinstance(prompt, PointPrompt):
        voxel = position_to_voxel(np.array(prompt.position), grid.resolution)
        return _pixel_of_voxel(view, VoxelIndex(*(int(x) for x in voxel)))
    if isinstance(prompt, BoxPrompt):
        rect = (
            _rotated_box_rect(prompt, view)
            if prompt.is_rotated
            else _aligned_box_rect(prompt, view)
        )
        if rect is None:
            raise PromptOutsideGrid("box footprint clips to an empty rectangle")
        return rect
    mask3d = voxelized_mask(prompt, grid)
    if view.axis is Axis.Z:
        bitmap = mask3d[:, :, view.anchor_slice]
    elif view.axis is Axis.X:
        bitmap = mask3d[view.anchor_slice, :, :]
    else:
        bitmap = mask3d[:, view.anchor_slice, :]
    if not bitmap.any():
        raise PromptOutsideGrid(
            f"mask prompt does not intersect the {view.label} anchor section"
        )
    return Mask2D(np.ascontiguousarray(bitmap))
