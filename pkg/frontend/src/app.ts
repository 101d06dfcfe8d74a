/** Single-page client: dataset browser, method panels, plots, segmentation. */

import { SensokitClient } from "./api.js";
import type { CorrLoadingsPayload, DatasetListing, ExplvarPayload, ModelBundle, ScatterPayload } from "./api.js";
import type { Point } from "./geometry.js";
import {
  LassoState,
  SEGMENT_PALETTE,
  commitSegment,
  emptyState,
  lassoSelect,
  removeLastSegment,
  toSegmentsRequest,
  unassignedLabels,
} from "./lasso.js";
import { renderLines, renderScatter } from "./plot.js";
import {
  PlotViewState,
  clampAxes,
  clampSectors,
  corrView,
  defaultViewState,
  explvarSeries,
  overviewViews,
  scatterFromPayload,
} from "./views.js";

const client = new SensokitClient("");

interface AppState {
  datasets: DatasetListing[];
  bundle: ModelBundle | null;
  view: PlotViewState;
  lasso: LassoState;
  lassoPoints: { label: string; x: number; y: number }[];
  notice: string;
}

const state: AppState = {
  datasets: [],
  bundle: null,
  view: defaultViewState(),
  lasso: emptyState(),
  lassoPoints: [],
  notice: "",
};

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function option(value: string, label?: string): HTMLOptionElement {
  const o = document.createElement("option");
  o.value = value;
  o.textContent = label ?? value;
  return o;
}

async function refreshDatasets(): Promise<void> {
  state.datasets = await client.listDatasets();
  const tbody = byId<HTMLTableSectionElement>("dataset-rows");
  tbody.replaceChildren();
  for (const d of state.datasets) {
    const tr = document.createElement("tr");
    const dims = d.summary.dims;
    tr.innerHTML =
      `<td>${d.name}</td><td>${d.role}</td><td>${dims[0]}×${dims[1]}</td>` +
      `<td>${d.summary.missing_count}</td>`;
    tbody.appendChild(tr);
  }
  for (const [selId, role] of [
    ["pca-dataset", null],
    ["prefmap-liking", "liking"],
    ["prefmap-descriptive", "descriptive"],
    ["seg-liking", "liking"],
    ["seg-chars", "characteristics"],
  ] as const) {
    const sel = byId<HTMLSelectElement>(selId);
    const keep = sel.value;
    sel.replaceChildren();
    for (const d of state.datasets) {
      if (role === null || d.role === role) sel.appendChild(option(d.id, d.name));
    }
    if (keep) sel.value = keep;
  }
}

function setNotice(text: string): void {
  state.notice = text;
  byId<HTMLParagraphElement>("notice").textContent = text;
}

function renderBundleViews(): void {
  const host = byId<HTMLDivElement>("plots");
  host.replaceChildren();
  const bundle = state.bundle;
  if (!bundle) return;
  const n = bundle.result.model?.n_components ?? 1;
  state.view = clampAxes(state.view, n);
  for (const spec of overviewViews(bundle)) {
    const cell = document.createElement("div");
    cell.className = "plot-cell";
    if (spec.kind === "scatter") {
      const pts = scatterFromPayload(spec.payload as ScatterPayload);
      cell.appendChild(renderScatter([pts], { title: spec.title }).svg);
    } else if (spec.kind === "corr") {
      const payload = spec.payload as CorrLoadingsPayload;
      const vm = corrView(payload, state.view);
      const series = [vm.consumers, ...(vm.attributes ? [vm.attributes] : [])];
      const { svg } = renderScatter(series, {
        title: spec.title,
        rings: vm.rings,
        sectorBoundaries: vm.sectorBoundaries,
        defaultColor: "#1f77b4",
        onLasso: (polygon) => handleLasso(polygon, payload),
      });
      cell.appendChild(svg);
      if (vm.legend.length) {
        const ul = document.createElement("ul");
        for (const item of vm.legend) {
          const li = document.createElement("li");
          li.textContent = item;
          ul.appendChild(li);
        }
        cell.appendChild(ul);
      }
    } else {
      cell.appendChild(renderLines(explvarSeries(spec.payload as ExplvarPayload), spec.title));
    }
    host.appendChild(cell);
  }
  renderSegmentList();
}

function handleLasso(polygon: Point[], payload: CorrLoadingsPayload): void {
  state.lassoPoints = payload.x_labels.map((label, i) => ({
    label,
    x: payload.x_points[i]?.[0] ?? 0,
    y: payload.x_points[i]?.[1] ?? 0,
  }));
  const selection = lassoSelect(state.lassoPoints, polygon, state.lasso);
  if (selection.notice) {
    setNotice(selection.notice);
    return;
  }
  const committed = commitSegment(state.lasso, selection);
  if (committed.notice) {
    setNotice(committed.notice);
    return;
  }
  state.lasso = committed.state;
  setNotice(`added segment ${state.lasso.committed.length} with ${selection.members.length} consumers`);
  renderSegmentList();
}

function renderSegmentList(): void {
  const ul = byId<HTMLUListElement>("segments");
  ul.replaceChildren();
  state.lasso.committed.forEach((seg, i) => {
    const li = document.createElement("li");
    li.style.color = seg.color ?? SEGMENT_PALETTE[0]!;
    li.textContent = `segment ${i + 1}: ${seg.members.length} consumers`;
    ul.appendChild(li);
  });
  const left = unassignedLabels(state.lassoPoints, state.lasso).length;
  if (state.lassoPoints.length) {
    const li = document.createElement("li");
    li.textContent = `unassigned: ${left}`;
    ul.appendChild(li);
  }
}

async function runPca(): Promise<void> {
  const dataset = byId<HTMLSelectElement>("pca-dataset").value;
  const standardise = byId<HTMLInputElement>("pca-standardise").checked;
  const components = Number(byId<HTMLInputElement>("pca-components").value) || 2;
  try {
    const job = await client.submitModel({ method: "pca", dataset, standardise, components });
    state.bundle = await client.waitForModel(job.id);
    state.lasso = emptyState();
    setNotice(`PCA done (${state.bundle.id})`);
    renderBundleViews();
  } catch (err) {
    setNotice(String(err));
  }
}

async function runPrefmap(): Promise<void> {
  const liking = byId<HTMLSelectElement>("prefmap-liking").value;
  const descriptive = byId<HTMLSelectElement>("prefmap-descriptive").value;
  const direction = byId<HTMLSelectElement>("prefmap-direction").value;
  const engine = byId<HTMLSelectElement>("prefmap-engine").value;
  const sectors = clampSectors(Number(byId<HTMLInputElement>("prefmap-sectors").value) || 4);
  state.view.drawSectors = byId<HTMLInputElement>("prefmap-draw-sectors").checked;
  try {
    const job = await client.submitModel({
      method: "prefmap", liking, descriptive, direction, engine, sectors,
    });
    state.bundle = await client.waitForModel(job.id);
    state.lasso = emptyState();
    setNotice(`preference map done (${state.bundle.id})`);
    renderBundleViews();
  } catch (err) {
    setNotice(String(err));
  }
}

async function finalizeSegments(): Promise<void> {
  if (!state.bundle) {
    setNotice("run a liking model first");
    return;
  }
  try {
    const request = toSegmentsRequest(state.lasso, "ui-segments", state.bundle.id);
    const created = await client.postSegments(request);
    setNotice(`segments stored; dataset ${created.dataset_id} added`);
    await refreshDatasets();
    const chars = byId<HTMLSelectElement>("seg-chars").value;
    if (chars) {
      const job = await client.submitModel({
        method: "inddiff", mode: "plsda", characteristics: chars, segments: created.id,
      });
      state.bundle = await client.waitForModel(job.id);
      setNotice("discriminant analysis done");
      renderBundleViews();
    }
  } catch (err) {
    setNotice(String(err));
  }
}

export function start(): void {
  byId<HTMLButtonElement>("pca-run").addEventListener("click", () => void runPca());
  byId<HTMLButtonElement>("prefmap-run").addEventListener("click", () => void runPrefmap());
  byId<HTMLButtonElement>("seg-finalize").addEventListener("click", () => void finalizeSegments());
  byId<HTMLButtonElement>("seg-undo").addEventListener("click", () => {
    state.lasso = removeLastSegment(state.lasso);
    renderSegmentList();
  });
  void refreshDatasets();
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", start);
}
