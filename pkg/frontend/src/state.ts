/**
 * Studio state and its transitions, kept as pure functions so the
 * interaction rules (single in-flight request, overlay/history bookkeeping,
 * refine gating) are unit-testable without a DOM.
 */

import { PromptBody } from "./api.js";
import { BoxDraft } from "./boxdraw.js";

export interface HistoryEntry {
  resultId: string;
  selectedCount: number;
  label: string;
}

export type PromptDraft =
  | { kind: "point"; position: [number, number, number] }
  | { kind: "box"; box: BoxDraft };

export interface StudioState {
  serverUrl: string;
  cloudId: string | null;
  sessionId: string | null;
  nPoints: number;
  stride: number;
  overlay: ReadonlySet<number>;
  history: readonly HistoryEntry[];
  draft: PromptDraft | null;
  pending: boolean;
  message: string | null;
}

export function initialState(serverUrl: string): StudioState {
  return {
    serverUrl,
    cloudId: null,
    sessionId: null,
    nPoints: 0,
    stride: 1,
    overlay: new Set(),
    history: [],
    draft: null,
    pending: false,
    message: null,
  };
}

export function cloudLoaded(
  state: StudioState,
  cloudId: string,
  nPoints: number,
  stride: number,
): StudioState {
  return {
    ...state,
    cloudId,
    nPoints,
    stride,
    sessionId: null,
    overlay: new Set(),
    history: [],
    draft: null,
    message: null,
  };
}

export function sessionOpened(state: StudioState, sessionId: string): StudioState {
  return { ...state, sessionId, overlay: new Set(), history: [], message: null };
}

export function draftPlaced(state: StudioState, draft: PromptDraft): StudioState {
  return { ...state, draft, message: null };
}

export function draftCleared(state: StudioState): StudioState {
  return { ...state, draft: null };
}

/** One request in flight at a time; submitting while pending is a no-op. */
export function canSubmit(state: StudioState): boolean {
  return state.sessionId !== null && !state.pending;
}

export function submitStarted(state: StudioState): StudioState {
  if (!canSubmit(state)) throw new Error("submit while busy or without a session");
  return { ...state, pending: true, message: null };
}

export function resultReceived(
  state: StudioState,
  resultId: string,
  label: string,
  indices: number[],
): StudioState {
  return {
    ...state,
    pending: false,
    draft: null,
    overlay: new Set(indices),
    history: [...state.history, { resultId, selectedCount: indices.length, label }],
  };
}

/** Failures keep the previous overlay; only the message changes. */
export function requestFailed(state: StudioState, message: string): StudioState {
  return { ...state, pending: false, message };
}

export function canRefine(state: StudioState): boolean {
  return canSubmit(state) && state.overlay.size > 0;
}

/** The current overlay resubmitted as a mask prompt. */
export function refinePrompt(state: StudioState): PromptBody {
  if (state.overlay.size === 0) throw new Error("refine needs a non-empty overlay");
  const indices = [...state.overlay].sort((a, b) => a - b);
  return { type: "mask", indices: indices as [number, ...number[]] };
}

export function promptFromDraft(draft: PromptDraft): PromptBody {
  if (draft.kind === "point") {
    return { type: "point", point: draft.position };
  }
  return {
    type: "box",
    center: draft.box.center,
    dims: draft.box.dims,
    rotation: draft.box.rotation,
  };
}

export function displayRowToFullIndex(state: StudioState, row: number): number {
  return row * state.stride;
}
