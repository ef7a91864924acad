/**
 * Typed client for the segmentation service REST API.
 *
 * Every request body is validated against its zod schema before it leaves
 * the browser, and every response is parsed, so a drifting server shows up
 * as a loud schema error rather than silent nonsense.
 */

import { z } from "zod";

export const PointPromptBody = z.object({
  type: z.literal("point"),
  point: z.tuple([z.number(), z.number(), z.number()]),
});

export const BoxPromptBody = z.object({
  type: z.literal("box"),
  center: z.tuple([z.number(), z.number(), z.number()]),
  dims: z.tuple([z.number().positive(), z.number().positive(), z.number().positive()]),
  rotation: z.tuple([z.number(), z.number(), z.number()]).default([0, 0, 0]),
});

export const MaskPromptBody = z.object({
  type: z.literal("mask"),
  indices: z.array(z.number().int().nonnegative()).nonempty(),
});

export const PromptBody = z.discriminatedUnion("type", [
  PointPromptBody,
  BoxPromptBody,
  MaskPromptBody,
]);
export type PromptBody = z.infer<typeof PromptBody>;

const CreateCloudResponse = z.object({ cloud_id: z.string(), n_points: z.number().int() });
const CreateSessionResponse = z.object({ session_id: z.string(), resolution: z.number().int() });
const AddPromptResponse = z.object({
  result_id: z.string(),
  selected_count: z.number().int(),
  n_points: z.number().int(),
  anchor: z.array(z.number().int()).length(3),
});
const MaskResponse = z.object({ n: z.number().int(), indices: z.array(z.number().int()) });
const PointsResponse = z.object({
  n_points: z.number().int(),
  stride: z.number().int(),
  points: z.array(z.array(z.number()).length(6)),
});
const SessionInfoResponse = z.object({
  session_id: z.string(),
  cloud_id: z.string(),
  resolution: z.number().int(),
  backend: z.string(),
  history: z.array(
    z.object({
      prompt: z.record(z.unknown()),
      result_id: z.string(),
      selected_count: z.number().int(),
    }),
  ),
});
const ErrorBody = z.object({
  error: z.object({ code: z.string(), message: z.string() }),
});

export type AddPromptResult = z.infer<typeof AddPromptResponse>;
export type SessionInfo = z.infer<typeof SessionInfoResponse>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(
  url: string,
  schema: z.ZodType<T>,
  init?: RequestInit,
): Promise<T> {
  const response = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const text = await response.text();
  if (!response.ok) {
    const parsed = ErrorBody.safeParse(safeJson(text));
    if (parsed.success) {
      throw new ApiError(response.status, parsed.data.error.code, parsed.data.error.message);
    }
    throw new ApiError(response.status, "HttpError", text || response.statusText);
  }
  return schema.parse(JSON.parse(text));
}

function safeJson(text: string): unknown {
  try {
    return JSON.parse(text);
  } catch {
    return null;
  }
}

export async function health(base: string): Promise<boolean> {
  try {
    const response = await fetch(`${base}/healthz`);
    return response.ok;
  } catch {
    return false;
  }
}

export async function createCloud(
  base: string,
  format: string,
  contentB64: string,
): Promise<{ cloud_id: string; n_points: number }> {
  return request(`${base}/clouds`, CreateCloudResponse, {
    method: "POST",
    body: JSON.stringify({ format, content_b64: contentB64 }),
  });
}

export async function createSession(
  base: string,
  cloudId: string,
  resolution?: number,
  backend?: string,
): Promise<{ session_id: string; resolution: number }> {
  return request(`${base}/sessions`, CreateSessionResponse, {
    method: "POST",
    body: JSON.stringify({ cloud_id: cloudId, resolution, backend }),
  });
}

export async function addPrompt(
  base: string,
  sessionId: string,
  prompt: PromptBody,
): Promise<AddPromptResult> {
  const body = PromptBody.parse(prompt); // schema-valid or we never send it
  return request(`${base}/sessions/${sessionId}/prompts`, AddPromptResponse, {
    method: "POST",
    body: JSON.stringify(body),
  });
}

export async function getMaskIndices(
  base: string,
  sessionId: string,
  resultId: string,
): Promise<number[]> {
  const parsed = await request(
    `${base}/sessions/${sessionId}/results/${resultId}/mask?format=indices_json`,
    MaskResponse,
  );
  return parsed.indices;
}

export async function getPoints(
  base: string,
  cloudId: string,
  stride = 1,
): Promise<z.infer<typeof PointsResponse>> {
  return request(`${base}/clouds/${cloudId}/points?stride=${stride}`, PointsResponse);
}

export async function getSession(base: string, sessionId: string): Promise<SessionInfo> {
  return request(`${base}/sessions/${sessionId}`, SessionInfoResponse);
}
