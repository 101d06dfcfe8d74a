/** View-model layer: turns result bundles into renderable view descriptions. */

import type { CorrLoadingsPayload, DatasetDoc, ExplvarPayload, ModelBundle, ScatterPayload } from "./api.js";

export const SECTOR_RANGE: readonly [number, number] = [2, 12];

export interface PlotViewState {
  pcX: number;
  pcY: number;
  showConsumerLabels: boolean;
  showAttributeLabels: boolean;
  colorBy: string | null;
  sectorCount: number;
  drawSectors: boolean;
}

export function defaultViewState(): PlotViewState {
  return {
    pcX: 1,
    pcY: 2,
    showConsumerLabels: true,
    showAttributeLabels: true,
    colorBy: null,
    sectorCount: 4,
    drawSectors: false,
  };
}

/** Axis selectors may never exceed the model's component count. */
export function clampAxes(state: PlotViewState, nComponents: number): PlotViewState {
  const clamp = (v: number) => Math.min(Math.max(1, Math.round(v)), Math.max(1, nComponents));
  return { ...state, pcX: clamp(state.pcX), pcY: clamp(state.pcY) };
}

export function clampSectors(n: number): number {
  return Math.min(Math.max(SECTOR_RANGE[0], Math.round(n)), SECTOR_RANGE[1]);
}

/** Color-by choices are the dataset's underscore groups plus segment sets. */
export function colorByOptions(
  dataset: Pick<DatasetDoc, "groups"> | null,
  segmentSetNames: readonly string[],
): string[] {
  const groups = dataset
    ? [...Object.keys(dataset.groups.rows), ...Object.keys(dataset.groups.cols)]
    : [];
  return [...groups.sort(), ...segmentSetNames.map((n) => `segments:${n}`)];
}

export interface ViewSpec {
  name: string;
  kind: "scatter" | "corr" | "line";
  title: string;
  payload: unknown;
}

/**
 * The overview grid: scores, loadings, correlation loadings and explained
 * variance, each enlargeable into a drill-down view.
 */
export function overviewViews(bundle: ModelBundle): ViewSpec[] {
  const plots = bundle.result.plots ?? {};
  const wanted: [string, ViewSpec["kind"], string][] = [
    ["scores", "scatter", "Scores"],
    ["loadings", "scatter", "Loadings"],
    ["corr_loadings", "corr", "Correlation loadings"],
    ["explvar", "line", "Explained variance"],
  ];
  return wanted
    .filter(([name]) => name in plots)
    .map(([name, kind, title]) => ({ name, kind, title, payload: plots[name] }));
}

export interface ScatterPoints {
  labels: string[];
  points: [number, number][];
}

/** Re-derive scatter coordinates for any PC pair from the stored matrices. */
export function pointsForPcs(
  matrix: number[][],
  labels: string[],
  pcX: number,
  pcY: number,
): ScatterPoints {
  const points = matrix.map((row) => [row[pcX - 1] ?? 0, row[pcY - 1] ?? 0] as [number, number]);
  return { labels, points };
}

export interface CorrViewModel {
  rings: number[];
  consumers: ScatterPoints;
  attributes: ScatterPoints | null;
  sectorBoundaries: number[] | null;
  sectorCounts: number[] | null;
  legend: string[];
}

/** Joint correlation-loadings view; sector legend shows per-sector counts. */
export function corrView(payload: CorrLoadingsPayload, state: PlotViewState): CorrViewModel {
  const consumers: ScatterPoints = {
    labels: state.showConsumerLabels ? payload.x_labels : payload.x_labels.map(() => ""),
    points: payload.x_points,
  };
  const attributes: ScatterPoints | null = payload.y_points
    ? {
        labels: state.showAttributeLabels
          ? payload.y_labels ?? []
          : (payload.y_labels ?? []).map(() => ""),
        points: payload.y_points,
      }
    : null;
  const boundaries = state.drawSectors ? payload.sector_boundaries ?? null : null;
  const counts = state.drawSectors ? payload.sector_counts ?? null : null;
  return {
    rings: payload.rings,
    consumers,
    attributes,
    sectorBoundaries: boundaries,
    sectorCounts: counts,
    legend: counts ? counts.map((c, k) => `sector ${k}: ${c} consumers`) : [],
  };
}

export interface LineSeries {
  label: string;
  x: number[];
  y: number[];
}

export function explvarSeries(payload: ExplvarPayload): LineSeries[] {
  const out: LineSeries[] = [];
  const entries: [string, number[] | undefined][] = [
    ["calibrated X", payload.calibrated_x],
    ["validated X", payload.validated_x],
    ["calibrated Y", payload.calibrated_y],
    ["validated Y", payload.validated_y],
  ];
  for (const [label, values] of entries) {
    if (values) out.push({ label, x: payload.components, y: values });
  }
  return out;
}

export function scatterFromPayload(payload: ScatterPayload): ScatterPoints {
  return {
    labels: payload.labels,
    points: payload.x.map((x, i) => [x, payload.y[i] ?? 0] as [number, number]),
  };
}
