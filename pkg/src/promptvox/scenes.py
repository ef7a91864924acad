"""Synthetic block scenes for tests, benchmarks, and demos.

Scenes are built directly in normalized [0, 1]^3 coordinates: solid
axis-aligned blocks of uniform color, one point per voxel center, plus two
corner marker points at (0,0,0) and (1,1,1) so the bounding box spans the
whole unit cube and normalization is an exact identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud_io import PointCloud, SourceKind

_PALETTE = (
    (1.0, 0.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, 0.0, 1.0),
    (1.0, 1.0, 0.0),
    (1.0, 0.0, 1.0),
    (0.0, 1.0, 1.0),
    (1.0, 0.5, 0.0),
    (0.5, 0.0, 1.0),
    (0.0, 0.5, 0.5),
    (0.6, 0.3, 0.1),
)


@dataclass(frozen=True)
class Block:
    lo: tuple[int, int, int]  # inclusive voxel range at the scene resolution
    hi: tuple[int, int, int]  # inclusive
    color: tuple[float, float, float]
    point_indices: np.ndarray  # indices of this block's points in the cloud

    @property
    def center(self) -> tuple[float, float, float]:
        return tuple((lo + hi + 1) / 2.0 for lo, hi in zip(self.lo, self.hi))

    def center_position(self, resolution: int) -> tuple[float, float, float]:
        return tuple(c / resolution for c in self.center)

    def extents(self, resolution: int) -> tuple[float, float, float]:
        return tuple((hi + 1 - lo) / resolution for lo, hi in zip(self.lo, self.hi))

    def voxel_set(self) -> set[tuple[int, int, int]]:
        return {
            (i, j, k)
            for i in range(self.lo[0], self.hi[0] + 1)
            for j in range(self.lo[1], self.hi[1] + 1)
            for k in range(self.lo[2], self.hi[2] + 1)
        }


@dataclass(frozen=True)
class BlockScene:
    cloud: PointCloud
    blocks: list[Block]
    resolution: int


def _block_points(lo, hi, resolution):
    axes = [np.arange(lo[d], hi[d] + 1) for d in range(3)]
    ii, jj, kk = np.meshgrid(*axes, indexing="ij")
    voxels = np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=1)
    return (voxels + 0.5) / resolution


def build_scene(block_specs, resolution: int) -> BlockScene:
    """Assemble a scene from (lo, hi, color) block specs."""
    positions = []
    colors = []
    blocks = []
    cursor = 0
    for lo, hi, color in block_specs:
        pts = _block_points(lo, hi, resolution)
        positions.append(pts)
        colors.append(np.tile(np.array(color), (pts.shape[0], 1)))
        blocks.append(
            Block(
                lo=tuple(lo),
                hi=tuple(hi),
                color=tuple(color),
                point_indices=np.arange(cursor, cursor + pts.shape[0]),
            )
        )
        cursor += pts.shape[0]
    # corner markers pin the bbox to the unit cube so normalize() is identity
    positions.append(np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]))
    colors.append(np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]))
    cloud = PointCloud(
        np.concatenate(positions), np.concatenate(colors), SourceKind.SYNTHETIC
    )
    return BlockScene(cloud=cloud, blocks=blocks, resolution=resolution)


def three_block_scene(resolution: int = 32) -> BlockScene:
    """The golden scene: red, green, and blue solid cubes on the diagonal.

    Block boundaries sit on sixteenths of the unit cube, so any resolution
    that is a multiple of 16 keeps them voxel-aligned and solid.
    """
    if resolution % 16 != 0:
        raise ValueError("golden scene needs a resolution that is a multiple of 16")
    unit = resolution // 16
    spans = [(2 * unit, 5 * unit - 1), (6 * unit, 9 * unit - 1), (10 * unit, 13 * unit - 1)]
    specs = [
        ((spans[0][0],) * 3, (spans[0][1],) * 3, (1.0, 0.0, 0.0)),
        ((spans[1][0],) * 3, (spans[1][1],) * 3, (0.0, 1.0, 0.0)),
        ((spans[2][0],) * 3, (spans[2][1],) * 3, (0.0, 0.0, 1.0)),
    ]
    return build_scene(specs, resolution)


def random_block_scene(
    rng: np.random.Generator,
    resolution: int = 32,
    n_blocks: int = 3,
    max_side: int = 6,
) -> BlockScene:
    """Random disjoint solid blocks with distinct palette colors.

    Blocks keep at least one empty voxel between each other and never touch
    the corner marker voxels.
    """
    max_side = min(max_side, resolution - 3)
    placed: list[tuple[np.ndarray, np.ndarray]] = []
    for _ in range(10_000):
        if len(placed) == n_blocks:
            break
        sides = rng.integers(2, max_side + 1, size=3)
        lo = np.array([int(rng.integers(1, resolution - 1 - s)) for s in sides])
        hi = lo + sides - 1
        overlap = any(
            (lo <= other_hi + 1).all() and (hi >= other_lo - 1).all()
            for other_lo, other_hi in placed
        )
        if not overlap:
            placed.append((lo, hi))
    if len(placed) < n_blocks:
        raise RuntimeError(f"could not place {n_blocks} disjoint blocks at R={resolution}")
    color_picks = rng.choice(len(_PALETTE), size=n_blocks, replace=False)
    specs = [
        (tuple(int(x) for x in lo), tuple(int(x) for x in hi), _PALETTE[c])
        for (lo, hi), c in zip(placed, color_picks)
    ]
    return build_scene(specs, resolution)
