/**
 * DOM wiring for the prompt studio: load a cloud, orbit it, click points,
 * drag boxes, submit prompts, and refine the current selection.
 */

import {
  ApiError,
  addPrompt,
  createCloud,
  createSession,
  getMaskIndices,
  getPoints,
} from "./api.js";
import { boxFromGestures, footprintFromDrag, isDraft } from "./boxdraw.js";
import { CameraPose, Viewport, orbit, vec3, worldPerPixel, zoom } from "./camera.js";
import { pickPoint } from "./picking.js";
import { DisplayCloud, bounds, fromRows } from "./points.js";
import { renderCloud } from "./renderer.js";
import {
  StudioState,
  canRefine,
  canSubmit,
  cloudLoaded,
  draftCleared,
  draftPlaced,
  initialState,
  promptFromDraft,
  refinePrompt,
  requestFailed,
  resultReceived,
  sessionOpened,
  submitStarted,
} from "./state.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const canvas = $("viewport") as unknown as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusLine = $("status");
const historyList = $("history");
const refineButton = $("refine") as HTMLButtonElement;
const submitButton = $("submit") as HTMLButtonElement;

let state: StudioState = initialState(
  (document.querySelector("#server") as HTMLInputElement).value || "http://127.0.0.1:8080",
);
let cloud: DisplayCloud | null = null;
let pose: CameraPose = {
  target: vec3(0.5, 0.5, 0.5),
  distance: 2.2,
  yaw: Math.PI / 4,
  pitch: Math.PI / 6,
  fov: Math.PI / 4,
};
let dragging: { mode: "orbit" | "footprint" | "height"; x: number; y: number } | null = null;
let footprintStart: { x: number; y: number } | null = null;
let boxMode = false;

function viewport(): Viewport {
  return { width: canvas.width, height: canvas.height };
}

function setState(next: StudioState): void {
  state = next;
  draw();
}

function draw(): void {
  renderCloud(ctx, cloud, pose, viewport(), {
    pointSize: 3,
    overlay: state.overlay,
    draft: state.draft,
  });
  statusLine.textContent =
    state.message ??
    (state.pending
      ? "segmenting..."
      : `${state.overlay.size} selected of ${state.nPoints} points`);
  refineButton.disabled = !canRefine(state);
  submitButton.disabled = !canSubmit(state) || state.draft === null;
  historyList.innerHTML = state.history
    .map((h) => `<li>${h.label}: ${h.selectedCount} pts</li>`)
    .join("");
}

async function loadCloud(file: File): Promise<void> {
  const server = (document.querySelector("#server") as HTMLInputElement).value;
  state = { ...initialState(server) };
  const raw = new Uint8Array(await file.arrayBuffer());
  let binary = "";
  raw.forEach((byte) => (binary += String.fromCharCode(byte)));
  const format = file.name.endsWith(".ply")
    ? "ply"
    : file.name.endsWith(".bin")
      ? "kitti_bin"
      : "xyzrgb_text";
  try {
    const uploaded = await createCloud(server, format, btoa(binary));
    const stride = Math.max(1, Math.floor(uploaded.n_points / 60000));
    const fetched = await getPoints(server, uploaded.cloud_id, stride);
    cloud = fromRows(fetched.n_points, fetched.stride, fetched.points);
    const { min, max } = bounds(cloud);
    pose = {
      ...pose,
      target: vec3((min[0] + max[0]) / 2, (min[1] + max[1]) / 2, (min[2] + max[2]) / 2),
      distance: 2.2 * Math.max(max[0] - min[0], max[1] - min[1], max[2] - min[2], 0.1),
    };
    const resolution = parseInt(($("resolution") as HTMLInputElement).value, 10) || 64;
    const session = await createSession(server, uploaded.cloud_id, resolution);
    setState(
      sessionOpened(
        cloudLoaded(state, uploaded.cloud_id, uploaded.n_points, fetched.stride),
        session.session_id,
      ),
    );
  } catch (error) {
    setState(requestFailed(state, describe(error)));
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return `${error.code}: ${error.message}`;
  return String(error);
}

async function submitCurrentDraft(): Promise<void> {
  if (!state.draft || !canSubmit(state) || !state.sessionId) return;
  const prompt = promptFromDraft(state.draft);
  const label = state.draft.kind === "point" ? "point" : "box";
  await submit(prompt, label);
}

async function submit(prompt: ReturnType<typeof promptFromDraft>, label: string): Promise<void> {
  if (!state.sessionId) return;
  setState(submitStarted(state));
  try {
    const result = await addPrompt(state.serverUrl, state.sessionId, prompt);
    const indices = await getMaskIndices(state.serverUrl, state.sessionId, result.result_id);
    setState(resultReceived(state, result.result_id, label, indices));
  } catch (error) {
    setState(requestFailed(state, describe(error)));
  }
}

canvas.addEventListener("mousedown", (event) => {
  const rect = canvas.getBoundingClientRect();
  const x = event.clientX - rect.left;
  const y = event.clientY - rect.top;
  if (boxMode && cloud) {
    if (!footprintStart) {
      footprintStart = { x, y };
      dragging = { mode: "footprint", x, y };
    } else {
      dragging = { mode: "height", x, y };
    }
  } else {
    dragging = { mode: "orbit", x, y };
  }
});

canvas.addEventListener("mousemove", (event) => {
  if (!dragging) return;
  const rect = canvas.getBoundingClientRect();
  const x = event.clientX - rect.left;
  const y = event.clientY - rect.top;
  if (dragging.mode === "orbit") {
    pose = orbit(pose, -(x - dragging.x) * 0.008, (y - dragging.y) * 0.008);
    dragging = { ...dragging, x, y };
    draw();
  }
});

canvas.addEventListener("mouseup", (event) => {
  const rect = canvas.getBoundingClientRect();
  const x = event.clientX - rect.left;
  const y = event.clientY - rect.top;
  if (!dragging) return;
  const gesture = dragging;
  dragging = null;

  if (gesture.mode === "orbit") {
    const moved = Math.hypot(x - gesture.x, y - gesture.y);
    if (moved < 3 && cloud) {
      const picked = pickPoint(cloud, pose, viewport(), x, y);
      if (picked) {
        setState(draftPlaced(state, { kind: "point", position: picked.position }));
      } else {
        setState(requestFailed(state, "no point under the cursor"));
      }
    }
    return;
  }
  if (!cloud) return;
  if (gesture.mode === "footprint" && footprintStart) {
    const { min } = bounds(cloud);
    const footprint = footprintFromDrag(pose, viewport(), footprintStart, { x, y }, min[2]);
    if (!footprint) {
      footprintStart = null;
      setState(requestFailed(state, "footprint drag missed the ground plane"));
      return;
    }
    (canvas as any)._footprint = footprint;
    setState({ ...state, message: "now drag vertically for the box height" });
    return;
  }
  if (gesture.mode === "height") {
    const footprint = (canvas as any)._footprint;
    footprintStart = null;
    if (!footprint) return;
    const pixels = gesture.y - y;
    const height = pixels * worldPerPixel(pose, viewport(), pose.distance);
    const built = boxFromGestures(footprint, height);
    if (isDraft(built)) {
      setState(draftPlaced(state, { kind: "box", box: built }));
    } else {
      setState(requestFailed(state, built.error));
    }
  }
});

canvas.addEventListener("wheel", (event) => {
  event.preventDefault();
  pose = zoom(pose, event.deltaY > 0 ? 1.1 : 0.9);
  draw();
});

$("file").addEventListener("change", (event) => {
  const input = event.target as HTMLInputElement;
  if (input.files && input.files[0]) void loadCloud(input.files[0]);
});

$("boxmode").addEventListener("change", (event) => {
  boxMode = (event.target as HTMLInputElement).checked;
  footprintStart = null;
});

submitButton.addEventListener("click", () => void submitCurrentDraft());
refineButton.addEventListener("click", () => {
  if (canRefine(state)) void submit(refinePrompt(state), "refine");
});
$("clear").addEventListener("click", () => setState(draftCleared(state)));

draw();
