/** Lasso segmentation state: free-polygon selection with first-commit-wins. */

import { Point, pointInPolygonEvenOdd, polygonArea } from "./geometry.js";

export interface LabeledPoint {
  label: string;
  x: number;
  y: number;
}

export interface Segment {
  color: string;
  members: string[];
}

export interface LassoState {
  committed: Segment[];
}

export interface SelectionResult {
  members: string[];
  notice?: string;
}

export const SEGMENT_PALETTE = [
  "#9467bd", "#d62728", "#2ca02c", "#1f77b4", "#ff7f0e",
  "#8c564b", "#e377c2", "#bcbd22", "#17becf", "#7f7f7f",
];

export function emptyState(): LassoState {
  return { committed: [] };
}

export function committedLabels(state: LassoState): Set<string> {
  const out = new Set<string>();
  for (const seg of state.committed) for (const m of seg.members) out.add(m);
  return out;
}

/**
 * Points inside the polygon, excluding anything already committed —
 * when two lassos overlap, the first selection keeps the point.
 */
export function lassoSelect(
  points: readonly LabeledPoint[],
  polygon: readonly Point[],
  state: LassoState = emptyState(),
): SelectionResult {
  if (polygon.length < 3) {
    return { members: [], notice: "draw at least three points" };
  }
  if (polygonArea(polygon) === 0) {
    return { members: [], notice: "selection has no area" };
  }
  const taken = committedLabels(state);
  const members = points
    .filter((p) => !taken.has(p.label) && pointInPolygonEvenOdd([p.x, p.y], polygon))
    .map((p) => p.label);
  return { members };
}

export interface CommitResult {
  state: LassoState;
  notice?: string;
}

/** Make a selection operative as the next segment; empty selections no-op. */
export function commitSegment(state: LassoState, selection: SelectionResult): CommitResult {
  if (selection.members.length === 0) {
    return { state, notice: "nothing selected; segment not added" };
  }
  const color = SEGMENT_PALETTE[state.committed.length % SEGMENT_PALETTE.length]!;
  return {
    state: {
      committed: [...state.committed, { color, members: [...selection.members] }],
    },
  };
}

/** Extension over the reference workflow: drop the most recent segment. */
export function removeLastSegment(state: LassoState): LassoState {
  return { committed: state.committed.slice(0, -1) };
}

export function unassignedLabels(
  points: readonly LabeledPoint[],
  state: LassoState,
): string[] {
  const taken = committedLabels(state);
  return points.filter((p) => !taken.has(p.label)).map((p) => p.label);
}

export interface SegmentsRequest {
  name: string;
  model_id: string;
  segments: string[][];
}

/** Body for POST /segments once the user finalizes the segmentation. */
export function toSegmentsRequest(
  state: LassoState,
  name: string,
  modelId: string,
): SegmentsRequest {
  if (state.committed.length === 0) {
    throw new Error("no segments committed");
  }
  return {
    name,
    model_id: modelId,
    segments: state.committed.map((s) => [...s.members]),
  };
}
