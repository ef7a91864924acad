"""Six directional videos swept from an anchor voxel.

A video along an axis is the ordered list of grid sections starting at the
anchor section (frame 0) and marching toward one end of the grid. Frame t
shows axis slice ``anchor_slice + t`` for sign +1 and ``anchor_slice - t``
for sign -1, so the anchor section opens both videos of its axis.

Pixel conventions, shared with prompt projection and fusion:
sweep Z -> (u, v) = (i, j); sweep X -> (u, v) = (j, k); sweep Y -> (u, v) = (i, k).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import IndexOutOfRange
from .voxels import Axis, Frame, VoxelGrid, VoxelIndex, slice_grid


class DirectionalView(NamedTuple):
    axis: Axis
    sign: int  # +1 or -1
    anchor_slice: int
    frame_dims: tuple[int, int]  # (U, V)
    axis_extent: int

    @property
    def n_frames(self) -> int:
        if self.sign > 0:
            return self.axis_extent - self.anchor_slice
        return self.anchor_slice + 1

    @property
    def label(self) -> str:
        return f"{self.axis.name}{'+' if self.sign > 0 else '-'}"

    def slice_of_frame(self, frame_idx: int) -> int:
        if not 0 <= frame_idx < self.n_frames:
            raise IndexOutOfRange(
                f"frame {frame_idx} outside video of {self.n_frames} frames"
            )
        return self.anchor_slice + self.sign * frame_idx


@dataclass(frozen=True)
class FrameSequence:
    view: DirectionalView
    frames: list[Frame]

    def __len__(self) -> int:
        return len(self.frames)


_FRAME_AXES = {
    Axis.Z: (Axis.X, Axis.Y),
    Axis.X: (Axis.Y, Axis.Z),
    Axis.Y: (Axis.X, Axis.Z),
}


def frame_dims_for(dims: tuple[int, int, int], axis: Axis) -> tuple[int, int]:
    u_axis, v_axis = _FRAME_AXES[axis]
    return dims[u_axis.value], dims[v_axis.value]


def views_for_dims(dims: tuple[int, int, int], anchor: VoxelIndex) -> list[DirectionalView]:
    """The six views around an anchor, in fixed (X+, X-, Y+, Y-, Z+, Z-) order."""
    views = []
    for axis in (Axis.X, Axis.Y, Axis.Z):
        extent = dims[axis.value]
        anchor_slice = int(anchor[axis.value])
        if not 0 <= anchor_slice < extent:
            raise IndexOutOfRange(
                f"anchor slice {anchor_slice} outside axis {axis.name} extent {extent}"
            )
        for sign in (+1, -1):
            views.append(
                DirectionalView(
                    axis=axis,
                    sign=sign,
                    anchor_slice=anchor_slice,
                    frame_dims=frame_dims_for(dims, axis),
                    axis_extent=extent,
                )
            )
    return views


def build_views(grid: VoxelGrid, anchor: VoxelIndex) -> list[DirectionalView]:
    return views_for_dims(grid.dims, anchor)


def render_video(grid: VoxelGrid, view: DirectionalView) -> FrameSequence:
    frames = [
        slice_grid(grid, view.axis, view.slice_of_frame(t)) for t in range(view.n_frames)
    ]
    return FrameSequence(view=view, frames=frames)


def frame_pixel_to_voxel(
    view: DirectionalView, frame_idx: int, pixel: tuple[int, int]
) -> VoxelIndex:
    """Exact inverse of the render convention."""
    u, v = int(pixel[0]), int(pixel[1])
    if not (0 <= u < view.frame_dims[0] and 0 <= v < view.frame_dims[1]):
        raise IndexOutOfRange(f"pixel ({u}, {v}) outside frame {view.frame_dims}")
    s = view.slice_of_frame(frame_idx)
    if view.axis is Axis.Z:
        return VoxelIndex(u, v, s)
    if view.axis is Axis.X:
        return VoxelIndex(s, u, v)
    return VoxelIndex(u, s, v)


def voxel_to_frame_pixel(
    view: DirectionalView, voxel: VoxelIndex | tuple[int, int, int]
) -> tuple[int, tuple[int, int]]:
    """(frame index, pixel) of a voxel within a view, if the sweep reaches it."""
    i, j, k = int(voxel[0]), int(voxel[1]), int(voxel[2])
    along = (i, j, k)[view.axis.value]
    offset = (along - view.anchor_slice) * view.sign
    if offset < 0 or offset >= view.n_frames:
        raise IndexOutOfRange(
            f"voxel slice {along} not covered by view {view.label}"
        )
    if view.axis is Axis.Z:
        pixel = (i, j)
    elif view.axis is Axis.X:
        pixel = (j, k)
    else:
        pixel = (i, k)
    return offset, pixel


def frame_mask_to_voxels(
    view: DirectionalView, frame_idx: int, mask: np.ndarray
) -> np.ndarray:
    """Map a frame mask's set pixels to (m, 3) voxel indices, vectorized."""
    us, vs = np.nonzero(mask)
    s = np.full(us.shape, view.slice_of_frame(frame_idx), dtype=np.int64)
    if view.axis is Axis.Z:
        return np.stack([us, vs, s], axis=1)
    if view.axis is Axis.X:
        return np.stack([s, us, vs], axis=1)
    return np.stack([us, s, vs], axis=1)
