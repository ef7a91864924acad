/**
 * Canvas 2D point renderer: projected splats sorted far-to-near, selection
 * overlay in green, prompt markers on top.
 */

import { CameraPose, Viewport, projectPoint, vec3 } from "./camera.js";
import { DisplayCloud, colorOf, displayCount, fullIndexOf, positionOf } from "./points.js";
import { PromptDraft } from "./state.js";

export const OVERLAY_COLOR = "#27e02a";
export const MARKER_COLOR = "#ff3131";

export interface RenderOptions {
  pointSize: number;
  overlay: ReadonlySet<number>;
  draft: PromptDraft | null;
}

export function renderCloud(
  ctx: CanvasRenderingContext2D,
  cloud: DisplayCloud | null,
  pose: CameraPose,
  viewport: Viewport,
  options: RenderOptions,
): void {
  ctx.fillStyle = "#111318";
  ctx.fillRect(0, 0, viewport.width, viewport.height);
  if (!cloud) return;

  const rows = displayCount(cloud);
  const drawList: { x: number; y: number; depth: number; style: string; selected: boolean }[] =
    [];
  for (let row = 0; row < rows; row++) {
    const [px, py, pz] = positionOf(cloud, row);
    const projected = projectPoint(pose, viewport, vec3(px, py, pz));
    if (!projected) continue;
    const selected = options.overlay.has(fullIndexOf(cloud, row));
    const [r, g, b] = colorOf(cloud, row);
    const style = selected
      ? OVERLAY_COLOR
      : `rgb(${Math.round(r * 255)},${Math.round(g * 255)},${Math.round(b * 255)})`;
    drawList.push({ x: projected.x, y: projected.y, depth: projected.depth, style, selected });
  }
  drawList.sort((a, b) => b.depth - a.depth);
  for (const splat of drawList) {
    ctx.fillStyle = splat.style;
    const size = splat.selected ? options.pointSize + 1 : options.pointSize;
    ctx.fillRect(splat.x - size / 2, splat.y - size / 2, size, size);
  }
  if (options.draft) renderDraft(ctx, pose, viewport, options.draft);
}

function renderDraft(
  ctx: CanvasRenderingContext2D,
  pose: CameraPose,
  viewport: Viewport,
  draft: PromptDraft,
): void {
  ctx.strokeStyle = MARKER_COLOR;
  ctx.fillStyle = MARKER_COLOR;
  if (draft.kind === "point") {
    const projected = projectPoint(pose, viewport, vec3(...draft.position));
    if (!projected) return;
    ctx.beginPath();
    ctx.arc(projected.x, projected.y, 6, 0, Math.PI * 2);
    ctx.stroke();
    ctx.beginPath();
    ctx.arc(projected.x, projected.y, 2, 0, Math.PI * 2);
    ctx.fill();
    return;
  }
  const { center, dims } = draft.box;
  const half = dims.map((d) => d / 2);
  const corners: [number, number, number][] = [];
  for (const sx of [-1, 1])
    for (const sy of [-1, 1])
      for (const sz of [-1, 1])
        corners.push([
          center[0] + sx * half[0],
          center[1] + sy * half[1],
          center[2] + sz * half[2],
        ]);
  const edges: [number, number][] = [
    [0, 1], [2, 3], [4, 5], [6, 7],
    [0, 2], [1, 3], [4, 6], [5, 7],
    [0, 4], [1, 5], [2, 6], [3, 7],
  ];
  ctx.beginPath();
  for (const [a, b] of edges) {
    const pa = projectPoint(pose, viewport, vec3(...corners[a]));
    const pb = projectPoint(pose, viewport, vec3(...corners[b]));
    if (!pa || !pb) continue;
    ctx.moveTo(pa.x, pa.y);
    ctx.lineTo(pb.x, pb.y);
  }
  ctx.stroke();
}
