"""End-to-end promptable segmentation over a voxel grid.

``segment_3d`` derives the anchor from the prompt, slices the grid into six
directional videos, projects the prompt onto each first frame, delegates
per-video segmentation to a backend, and fuses the six mask sequences into
one 3D voxel mask that is finally projected back onto the points.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .backends import (
    PropagatorParams,
    SegmentationBackend,
    VideoSegmentRequest,
    VideoSegmentResponse,
)
from .cloud_io import PointCloud
from .errors import (
    DimensionMismatch,
    EmptyMaskPrompt,
    PartialBackendFailure,
    PromptOutsideGrid,
    PromptVoxError,
)
from .prompts import MaskPrompt, Prompt3D, anchor_of, project_prompt, voxelized_mask
from .videos import DirectionalView, build_views, frame_mask_to_voxels, render_video
from .voxels import VoxelGrid, VoxelIndex


@dataclass(frozen=True)
class RunParams:
    color_tolerance: float = 0.1
    seed_radius: int = 2
    fusion_votes: int = 1  # 1 = plain union; m > 1 = at least m of 6 views agree
    max_workers: int = 6

    def __post_init__(self):
        PropagatorParams(self.color_tolerance, self.seed_radius)  # range checks
        if not 1 <= self.fusion_votes <= 6:
            raise ValueError(f"fusion_votes must be in [1, 6], got {self.fusion_votes}")
        if self.max_workers < 1:
            raise ValueError("max_workers must be >= 1")

    def propagator(self) -> PropagatorParams:
        return PropagatorParams(self.color_tolerance, self.seed_radius)


@dataclass(frozen=True)
class SegmentationResult:
    voxel_mask: np.ndarray  # (w, h, l) bool, set only on occupied voxels
    point_mask: np.ndarray  # (n,) bool
    per_view: dict[DirectionalView, VideoSegmentResponse]
    prompt_used: Prompt3D
    params_used: RunParams
    anchor: VoxelIndex

    @property
    def selected_count(self) -> int:
        return int(self.point_mask.sum())


def fuse_directional(
    per_view: dict[DirectionalView, VideoSegmentResponse],
    grid: VoxelGrid,
    votes: int = 1,
) -> np.ndarray:
    """Union (or m-of-6 vote) of the per-view masks, kept to occupied voxels."""
    counts = np.zeros(grid.dims, dtype=np.uint8)
    for view, response in per_view.items():
        if len(response.masks) != view.n_frames:
            raise DimensionMismatch(
                f"view {view.label}: {len(response.masks)} masks for "
                f"{view.n_frames} frames"
            )
        view_hits = np.zeros(grid.dims, dtype=bool)
        for t, mask in enumerate(response.masks):
            if mask.shape != view.frame_dims:
                raise DimensionMismatch(
                    f"view {view.label} frame {t}: mask shape {mask.shape} != "
                    f"frame dims {view.frame_dims}"
                )
            if not mask.any():
                continue
            voxels = frame_mask_to_voxels(view, t, mask)
            view_hits[voxels[:, 0], voxels[:, 1], voxels[:, 2]] = True
        counts += view_hits
    return (counts >= votes) & grid.occupancy


def _mask_anchor_with_fallback(prompt: MaskPrompt, grid: VoxelGrid) -> VoxelIndex:
    """Mask prompts anchor at their centroid voxel; when no section through
    the centroid touches the voxelized mask (so all six 2D prompts would be
    empty), re-anchor at the masked voxel nearest the centroid so the prompt
    stays usable."""
    anchor = anchor_of(prompt, grid)
    mask3d = voxelized_mask(prompt, grid)
    if (
        mask3d[anchor.i, :, :].any()
        or mask3d[:, anchor.j, :].any()
        or mask3d[:, :, anchor.k].any()
    ):
        return anchor
    voxels = np.argwhere(mask3d)
    deltas = voxels - np.array(anchor)
    order = np.lexsort((voxels[:, 2], voxels[:, 1], voxels[:, 0], (deltas ** 2).sum(axis=1)))
    nearest = voxels[order[0]]
    return VoxelIndex(int(nearest[0]), int(nearest[1]), int(nearest[2]))


def segment_3d(
    cloud: PointCloud,
    grid: VoxelGrid,
    prompt: Prompt3D,
    backend: SegmentationBackend,
    params: RunParams | None = None,
) -> SegmentationResult:
    """Run the full six-video segmentation for one prompt.

    Backend failures are all-or-nothing: if any view fails while others
    succeed, the call raises :class:`PartialBackendFailure` instead of
    fusing a directionally biased subset.
    """
    params = params or RunParams()
    if cloud.n != grid.n_points:
        raise DimensionMismatch(
            f"cloud has {cloud.n} points but grid was built from {grid.n_points}"
        )
    if isinstance(prompt, MaskPrompt):
        anchor = _mask_anchor_with_fallback(prompt, grid)
    else:
        anchor = anchor_of(prompt, grid)
    views = build_views(grid, anchor)

    requests: dict[DirectionalView, VideoSegmentRequest | None] = {}
    for view in views:
        try:
            prompt2d = project_prompt(prompt, view, grid)
        except PromptOutsideGrid:
            if isinstance(prompt, MaskPrompt):
                # empty intersection on this axis: the view contributes nothing
                requests[view] = None
                continue
            raise
        requests[view] = VideoSegmentRequest(
            frames=render_video(grid, view),
            prompt=prompt2d,
            params=params.propagator(),
        )

    per_view: dict[DirectionalView, VideoSegmentResponse] = {}
    failures: dict[str, PromptVoxError] = {}
    active = [view for view, req in requests.items() if req is not None]
    with ThreadPoolExecutor(max_workers=min(params.max_workers, 6)) as pool:
        futures = {view: pool.submit(backend.segment_video, requests[view]) for view in active}
        for view in active:
            try:
                per_view[view] = futures[view].result()
            except PromptVoxError as exc:
                failures[view.label] = exc
    for view, req in requests.items():
        if req is None:
            per_view[view] = VideoSegmentResponse(
                masks=[np.zeros(view.frame_dims, dtype=bool) for _ in range(view.n_frames)]
            )
    if failures:
        first = next(iter(failures.values()))
        if len(failures) == len(active):
            raise first
        raise PartialBackendFailure(
            f"{len(failures)} of {len(active)} views failed: "
            + ", ".join(f"{label}: {exc}" for label, exc in failures.items()),
            failures,
        ) from first

    ordered = {view: per_view[view] for view in views}
    voxel_mask = fuse_directional(ordered, grid, votes=params.fusion_votes)
    pv = grid.point_voxels
    point_mask = voxel_mask[pv[:, 0], pv[:, 1], pv[:, 2]]
    return SegmentationResult(
        voxel_mask=voxel_mask,
        point_mask=point_mask,
        per_view=ordered,
        prompt_used=prompt,
        params_used=params,
        anchor=anchor,
    )


def refine(
    result: SegmentationResult,
    cloud: PointCloud,
    grid: VoxelGrid,
    backend: SegmentationBackend,
    params: RunParams | None = None,
) -> SegmentationResult:
    """Re-run segmentation with the previous result as a mask prompt."""
    if not result.point_mask.any():
        raise EmptyMaskPrompt("cannot refine an empty result")
    mask_prompt = MaskPrompt(result.point_mask)
    return segment_3d(cloud, grid, mask_prompt, backend, params or result.params_used)
