/**
 * Point picking: the rendered point nearest to the cursor, within a pixel
 * radius, becomes the 3D point prompt. Uses the same projection as the
 * renderer, so what you click is what you prompt.
 */

import { CameraPose, Viewport, projectPoint } from "./camera.js";
import { DisplayCloud, displayCount, fullIndexOf, positionOf } from "./points.js";

export interface Pick {
  /** row in the displayed cloud */
  row: number;
  /** index into the full cloud (row * stride) */
  fullIndex: number;
  /** the picked point's original coordinates: this is the prompt position */
  position: [number, number, number];
  screenDistance: number;
}

export function pickPoint(
  cloud: DisplayCloud,
  pose: CameraPose,
  viewport: Viewport,
  x: number,
  y: number,
  radiusPx = 8,
): Pick | null {
  let best: Pick | null = null;
  let bestKey: [number, number] | null = null; // (screen distance, depth)
  for (let row = 0; row < displayCount(cloud); row++) {
    const position = positionOf(cloud, row);
    const projected = projectPoint(pose, viewport, {
      x: position[0],
      y: position[1],
      z: position[2],
    });
    if (!projected) continue;
    const dx = projected.x - x;
    const dy = projected.y - y;
    const distance = Math.hypot(dx, dy);
    if (distance > radiusPx) continue;
    const key: [number, number] = [distance, projected.depth];
    if (
      bestKey === null ||
      key[0] < bestKey[0] ||
      (key[0] === bestKey[0] && key[1] < bestKey[1])
    ) {
      bestKey = key;
      best = {
        row,
        fullIndex: fullIndexOf(cloud, row),
        position,
        screenDistance: distance,
      };
    }
  }
  return best;
}
