"""Promptable 3D segmentation over voxelized point clouds.

Typical flow: load a cloud, normalize it, voxelize it, then segment with a
3D prompt through the six-directional-video pipeline:

    from promptvox import (
        load_cloud, normalize, voxelize, PointPrompt, ReferenceBackend, segment_3d,
    )

    cloud, transform = normalize(load_cloud("scene.txt"))
    grid = voxelize(cloud, 64)
    result = segment_3d(cloud, grid, PointPrompt((0.5, 0.5, 0.5)), ReferenceBackend())
"""

from .backends import (
    PropagatorParams,
    ReferenceBackend,
    RemoteBackend,
    SegmentationBackend,
    VideoSegmentRequest,
    VideoSegmentResponse,
    reference_propagate,
)
from .cloud_io import (
    CloudFormat,
    NormalizationTransform,
    PointCloud,
    SourceKind,
    load_cloud,
    load_point_mask,
    normalize,
    save_cloud,
    save_point_mask,
)
from .pipeline import RunParams, SegmentationResult, fuse_directional, refine, segment_3d
from .prompts import (
    BoxPrompt,
    Mask2D,
    MaskPrompt,
    Point2D,
    PointPrompt,
    Prompt2D,
    Prompt3D,
    Rect2D,
    anchor_of,
    project_prompt,
)
from .videos import (
    DirectionalView,
    FrameSequence,
    build_views,
    frame_pixel_to_voxel,
    render_video,
)
from .voxels import (
    Axis,
    Frame,
    VoxelGrid,
    VoxelIndex,
    slice_grid,
    voxel_of_point,
    voxelize,
)

__version__ = "0.1.0"

__all__ = [
    "Axis",
    "BoxPrompt",
    "CloudFormat",
    "DirectionalView",
    "Frame",
    "FrameSequence",
    "Mask2D",
    "MaskPrompt",
    "NormalizationTransform",
    "Point2D",
    "PointCloud",
    "PointPrompt",
    "Prompt2D",
    "Prompt3D",
    "PropagatorParams",
    "Rect2D",
    "ReferenceBackend",
    "RemoteBackend",
    "RunParams",
    "SegmentationBackend",
    "SegmentationResult",
    "SourceKind",
    "VideoSegmentRequest",
    "VideoSegmentResponse",
    "VoxelGrid",
    "VoxelIndex",
    "anchor_of",
    "build_views",
    "frame_pixel_to_voxel",
    "fuse_directional",
    "load_cloud",
    "load_point_mask",
    "normalize",
    "project_prompt",
    "reference_propagate",
    "refine",
    "render_video",
    "save_cloud",
    "save_point_mask",
    "segment_3d",
    "slice_grid",
    "voxel_of_point",
    "voxelize",
]
