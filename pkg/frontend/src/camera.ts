/**
 * Orbit camera math shared by rendering and picking.
 *
 * The camera circles a target point at a fixed distance; z is up. All
 * projection used for drawing goes through projectPoint, and picking reuses
 * the same function, so "the point under the cursor" is exact by
 * construction.
 */

export interface Vec3 {
  x: number;
  y: number;
  z: number;
}

export interface CameraPose {
  target: Vec3;
  distance: number;
  /** radians around the z axis */
  yaw: number;
  /** radians above the horizon, clamped inside (-pi/2, pi/2) */
  pitch: number;
  /** vertical field of view in radians */
  fov: number;
}

export interface Viewport {
  width: number;
  height: number;
}

export interface ScreenPoint {
  x: number;
  y: number;
  /** distance along the view direction, > 0 in front of the camera */
  depth: number;
}

export interface Ray {
  origin: Vec3;
  dir: Vec3;
}

export const vec3 = (x: number, y: number, z: number): Vec3 => ({ x, y, z });

export const add = (a: Vec3, b: Vec3): Vec3 => vec3(a.x + b.x, a.y + b.y, a.z + b.z);
export const sub = (a: Vec3, b: Vec3): Vec3 => vec3(a.x - b.x, a.y - b.y, a.z - b.z);
export const scale = (a: Vec3, s: number): Vec3 => vec3(a.x * s, a.y * s, a.z * s);
export const dot = (a: Vec3, b: Vec3): number => a.x * b.x + a.y * b.y + a.z * b.z;
export const cross = (a: Vec3, b: Vec3): Vec3 =>
  vec3(a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x);
export const length = (a: Vec3): number => Math.sqrt(dot(a, a));
export const normalize = (a: Vec3): Vec3 => {
  const len = length(a);
  return len > 0 ? scale(a, 1 / len) : vec3(0, 0, 0);
};

export function eyePosition(pose: CameraPose): Vec3 {
  const horizontal = Math.cos(pose.pitch);
  const offset = vec3(
    horizontal * Math.cos(pose.yaw),
    horizontal * Math.sin(pose.yaw),
    Math.sin(pose.pitch),
  );
  return add(pose.target, scale(offset, pose.distance));
}

interface Basis {
  eye: Vec3;
  forward: Vec3;
  right: Vec3;
  up: Vec3;
  focal: number;
}

export function cameraBasis(pose: CameraPose, viewport: Viewport): Basis {
  const eye = eyePosition(pose);
  const forward = normalize(sub(pose.target, eye));
  const worldUp = vec3(0, 0, 1);
  let right = cross(forward, worldUp);
  if (length(right) < 1e-9) {
    // looking straight up or down; any horizontal right vector will do
    right = vec3(Math.sin(pose.yaw), -Math.cos(pose.yaw), 0);
  }
  right = normalize(right);
  const up = cross(right, forward);
  const focal = viewport.height / 2 / Math.tan(pose.fov / 2);
  return { eye, forward, right, up, focal };
}

/** World point to screen pixel; null when at or behind the camera plane. */
export function projectPoint(
  pose: CameraPose,
  viewport: Viewport,
  point: Vec3,
): ScreenPoint | null {
  const { eye, forward, right, up, focal } = cameraBasis(pose, viewport);
  const d = sub(point, eye);
  const depth = dot(d, forward);
  if (depth <= 1e-9) return null;
  const x = viewport.width / 2 + (focal * dot(d, right)) / depth;
  const y = viewport.height / 2 - (focal * dot(d, up)) / depth;
  return { x, y, depth };
}

/** Pixel to world ray, the inverse of projectPoint up to depth. */
export function screenToRay(
  pose: CameraPose,
  viewport: Viewport,
  x: number,
  y: number,
): Ray {
  const { eye, forward, right, up, focal } = cameraBasis(pose, viewport);
  const cx = (x - viewport.width / 2) / focal;
  const cy = (viewport.height / 2 - y) / focal;
  const dir = normalize(add(add(forward, scale(right, cx)), scale(up, cy)));
  return { origin: eye, dir };
}

/** Where a ray crosses the horizontal plane z = planeZ, if it does. */
export function intersectZPlane(ray: Ray, planeZ: number): Vec3 | null {
  if (Math.abs(ray.dir.z) < 1e-12) return null;
  const t = (planeZ - ray.origin.z) / ray.dir.z;
  if (t <= 0) return null;
  return add(ray.origin, scale(ray.dir, t));
}

/** World units covered by one pixel at the given depth. */
export function worldPerPixel(pose: CameraPose, viewport: Viewport, depth: number): number {
  const focal = viewport.height / 2 / Math.tan(pose.fov / 2);
  return depth / focal;
}

export function orbit(pose: CameraPose, dYaw: number, dPitch: number): CameraPose {
  const limit = Math.PI / 2 - 0.01;
  return {
    ...pose,
    yaw: pose.yaw + dYaw,
    pitch: Math.min(limit, Math.max(-limit, pose.pitch + dPitch)),
  };
}

export function zoom(pose: CameraPose, factor: number): CameraPose {
  return { ...pose, distance: Math.min(100, Math.max(0.05, pose.distance * factor)) };
}
