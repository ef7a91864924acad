/**
 * Live integration against the segmentation service (reference backend).
 *
 * Spawns `python3 -m promptvox.cli serve` on a free port, uploads the golden
 * three-block scene, and drives the same code paths the UI uses: pick a
 * point -> point prompt -> overlay, then refine -> mask prompt -> overlay.
 * Skipped when the service package is not importable.
 */

import { spawn, spawnSync } from "node:child_process";
import { createServer } from "node:net";
import { readFileSync } from "node:fs";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  addPrompt,
  createCloud,
  createSession,
  getMaskIndices,
  getPoints,
  getSession,
  health,
} from "../src/api.js";
import { CameraPose, projectPoint, vec3 } from "../src/camera.js";
import { pickPoint } from "../src/picking.js";
import { fromRows } from "../src/points.js";
import {
  canRefine,
  cloudLoaded,
  initialState,
  refinePrompt,
  resultReceived,
  sessionOpened,
  submitStarted,
} from "../src/state.js";

const FIXTURE = new URL("./fixtures/three_blocks_r32.txt", import.meta.url).pathname;

const pythonAvailable =
  spawnSync("python3", ["-c", "import promptvox"], { timeout: 30_000 }).status === 0;

const maybe = pythonAvailable ? describe : describe.skip;

async function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const port = (probe.address() as { port: number }).port;
      probe.close(() => resolve(port));
    });
  });
}

maybe("prompt studio against the live service", () => {
  let child: ReturnType<typeof spawn>;
  let base: string;

  beforeAll(async () => {
    const port = await freePort();
    base = `http://127.0.0.1:${port}`;
    child = spawn(
      "python3",
      ["-m", "promptvox.cli", "serve", "--port", String(port), "--host", "127.0.0.1"],
      { stdio: "ignore" },
    );
    const deadline = Date.now() + 30_000;
    while (!(await health(base))) {
      if (Date.now() > deadline) throw new Error("service did not come up");
      await new Promise((r) => setTimeout(r, 150));
    }
  }, 40_000);

  afterAll(() => {
    child?.kill("SIGTERM");
  });

  it("pick-point overlay equals the red block; refine does not shrink it", async () => {
    const raw = readFileSync(FIXTURE);
    const uploaded = await createCloud(base, "xyzrgb_text", raw.toString("base64"));
    const session = await createSession(base, uploaded.cloud_id, 32);
    const fetched = await getPoints(base, uploaded.cloud_id, 1);
    const cloud = fromRows(fetched.n_points, fetched.stride, fetched.points);

    // the red block's point rows, straight from the fixture colors
    const expectedRed: number[] = [];
    fetched.points.forEach((row, i) => {
      if (row[3] === 1 && row[4] === 0 && row[5] === 0) expectedRed.push(i);
    });
    expect(expectedRed).toHaveLength(216);

    let state = sessionOpened(
      cloudLoaded(initialState(base), uploaded.cloud_id, uploaded.n_points, fetched.stride),
      session.session_id,
    );

    // click in the middle of the red block, exactly as the canvas would
    const pose: CameraPose = {
      target: vec3(0.5, 0.5, 0.5),
      distance: 2.5,
      yaw: 0.8,
      pitch: 0.5,
      fov: Math.PI / 4,
    };
    const viewport = { width: 1200, height: 900 };
    const someRedRow = expectedRed[Math.floor(expectedRed.length / 2)];
    const redPoint = fetched.points[someRedRow];
    const screen = projectPoint(pose, viewport, vec3(redPoint[0], redPoint[1], redPoint[2]))!;
    const pick = pickPoint(cloud, pose, viewport, screen.x, screen.y)!;
    expect(pick).not.toBeNull();
    expect(pick.position[0]).toBeCloseTo(redPoint[0], 12);

    state = submitStarted(state);
    const pointResult = await addPrompt(base, session.session_id, {
      type: "point",
      point: pick.position,
    });
    const pointIndices = await getMaskIndices(base, session.session_id, pointResult.result_id);
    state = resultReceived(state, pointResult.result_id, "point", pointIndices);

    expect(pointIndices).toEqual(expectedRed);
    expect(state.overlay.size).toBe(216);

    // refine: the current overlay goes back as a schema-valid mask prompt
    expect(canRefine(state)).toBe(true);
    const maskBody = refinePrompt(state);
    expect(maskBody.type).toBe("mask");
    state = submitStarted(state);
    const refined = await addPrompt(base, session.session_id, maskBody);
    const refinedIndices = await getMaskIndices(base, session.session_id, refined.result_id);
    state = resultReceived(state, refined.result_id, "refine", refinedIndices);

    // non-shrinking on a uniform block (here: exact fixed point)
    for (const idx of pointIndices) expect(refinedIndices).toContain(idx);
    expect(refinedIndices).toEqual(pointIndices);

    // server history mirrors the two prompts in order
    const info = await getSession(base, session.session_id);
    expect(info.history.map((h) => h.result_id)).toEqual([
      pointResult.result_id,
      refined.result_id,
    ]);
  }, 60_000);

  it("box prompt drawn around the green block selects it", async () => {
    const raw = readFileSync(FIXTURE);
    const uploaded = await createCloud(base, "xyzrgb_text", raw.toString("base64"));
    const session = await createSession(base, uploaded.cloud_id, 32);
    const fetched = await getPoints(base, uploaded.cloud_id, 1);

    const greenRows: number[] = [];
    fetched.points.forEach((row, i) => {
      if (row[4] === 1 && row[3] === 0 && row[5] === 0) greenRows.push(i);
    });
    const xs = greenRows.map((i) => fetched.points[i][0]);
    const ys = greenRows.map((i) => fetched.points[i][1]);
    const zs = greenRows.map((i) => fetched.points[i][2]);
    const pad = 1 / 64; // half a voxel on each side of the sampled centers
    const center: [number, number, number] = [
      (Math.min(...xs) + Math.max(...xs)) / 2,
      (Math.min(...ys) + Math.max(...ys)) / 2,
      (Math.min(...zs) + Math.max(...zs)) / 2,
    ];
    const dims: [number, number, number] = [
      Math.max(...xs) - Math.min(...xs) + 2 * pad,
      Math.max(...ys) - Math.min(...ys) + 2 * pad,
      Math.max(...zs) - Math.min(...zs) + 2 * pad,
    ];
    const result = await addPrompt(base, session.session_id, {
      type: "box",
      center,
      dims,
      rotation: [0, 0, 0],
    });
    const indices = await getMaskIndices(base, session.session_id, result.result_id);
    expect(indices).toEqual(greenRows);
  }, 60_000);
});
