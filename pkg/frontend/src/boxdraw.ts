/**
 * Box prompt construction from two drag gestures: first the footprint on a
 * horizontal plane, then the height. Rotation angles are entered numerically
 * in the form, not drawn.
 */

import {
  CameraPose,
  Ray,
  Vec3,
  Viewport,
  intersectZPlane,
  screenToRay,
} from "./camera.js";

const MIN_EXTENT = 1e-6;

export interface BoxDraft {
  center: [number, number, number];
  dims: [number, number, number];
  rotation: [number, number, number];
}

export interface FootprintDrag {
  a: Vec3;
  b: Vec3;
  planeZ: number;
}

/** Drag across the plane z = planeZ; null when a ray misses the plane. */
export function footprintFromDrag(
  pose: CameraPose,
  viewport: Viewport,
  start: { x: number; y: number },
  end: { x: number; y: number },
  planeZ: number,
): FootprintDrag | null {
  const hitA = intersectZPlane(screenToRay(pose, viewport, start.x, start.y), planeZ);
  const hitB = intersectZPlane(screenToRay(pose, viewport, end.x, end.y), planeZ);
  if (!hitA || !hitB) return null;
  return { a: hitA, b: hitB, planeZ };
}

/**
 * Combine a footprint with a drawn height. Degenerate extents (a zero-area
 * drag or zero height) are rejected by returning an error string.
 */
export function boxFromGestures(
  footprint: FootprintDrag,
  height: number,
): BoxDraft | { error: string } {
  const dims: [number, number, number] = [
    Math.abs(footprint.b.x - footprint.a.x),
    Math.abs(footprint.b.y - footprint.a.y),
    Math.abs(height),
  ];
  if (dims.some((d) => d < MIN_EXTENT)) {
    return { error: "box has zero extent; drag a footprint, then a height" };
  }
  const center: [number, number, number] = [
    (footprint.a.x + footprint.b.x) / 2,
    (footprint.a.y + footprint.b.y) / 2,
    footprint.planeZ + height / 2,
  ];
  return { center, dims, rotation: [0, 0, 0] };
}

export function isDraft(value: BoxDraft | { error: string }): value is BoxDraft {
  return !("error" in value);
}
