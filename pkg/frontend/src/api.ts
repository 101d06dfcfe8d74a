/** Typed REST client for the sensokit service. */

export interface DatasetSummary {
  dims: [number, number];
  mean: number | null;
  std: number | null;
  min: number | null;
  max: number | null;
  missing_count: number;
}

export interface DatasetListing {
  id: string;
  name: string;
  role: string;
  summary: DatasetSummary;
  row_groups: string[];
  col_groups: string[];
}

export interface DatasetDoc {
  meta: { id: string; name: string; role: string };
  row_labels: string[];
  col_labels: string[];
  values: (number | null)[][];
  groups: { rows: Record<string, string[]>; cols: Record<string, string[]> };
}

export interface ScatterPayload {
  kind: string;
  pcs: [number, number];
  labels: string[];
  x: number[];
  y: number[];
  explvar: number[];
}

export interface CorrLoadingsPayload {
  kind: "corr_loadings";
  pcs: [number, number];
  rings: number[];
  x_labels: string[];
  x_points: [number, number][];
  y_labels?: string[];
  y_points?: [number, number][];
  sector_boundaries?: number[];
  sector_counts?: number[];
  point_sector?: number[];
}

export interface ExplvarPayload {
  kind: "explvar";
  components: number[];
  calibrated_x: number[];
  validated_x?: number[];
  calibrated_y?: number[];
  validated_y?: number[];
}

export interface ModelBundle {
  id: string;
  method: string;
  state: string;
  options: Record<string, unknown>;
  result: {
    model?: { n_components: number; [k: string]: unknown };
    plots?: Record<string, unknown>;
    consumer_labels?: string[];
    conjoint_results?: Record<string, unknown>[];
  };
}

export interface JobStatus {
  id: string;
  state: "queued" | "running" | "done" | "failed";
  error?: string;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = (await res.json()) as { error?: string };
      if (body.error) detail = body.error;
    } catch {
      /* keep statusText */
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export class SensokitClient {
  constructor(private baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  healthz(): Promise<{ status: string }> {
    return fetch(this.url("/healthz")).then((r) => asJson(r));
  }

  listDatasets(): Promise<DatasetListing[]> {
    return fetch(this.url("/datasets")).then((r) => asJson(r));
  }

  getDataset(id: string): Promise<DatasetDoc> {
    return fetch(this.url(`/datasets/${id}`)).then((r) => asJson(r));
  }

  async uploadDataset(
    filename: string,
    content: Blob | string,
    options: Record<string, unknown>,
  ): Promise<{ id: string; summary: DatasetSummary }> {
    const form = new FormData();
    const blob = typeof content === "string" ? new Blob([content]) : content;
    form.append("file", blob, filename);
    form.append("options", JSON.stringify(options));
    const res = await fetch(this.url("/datasets"), { method: "POST", body: form });
    return asJson(res);
  }

  deleteDataset(id: string): Promise<void> {
    return fetch(this.url(`/datasets/${id}`), { method: "DELETE" }).then((r) => {
      if (!r.ok) throw new ApiError(r.status, r.statusText);
    });
  }

  async submitModel(body: Record<string, unknown>): Promise<JobStatus> {
    const res = await fetch(this.url("/models"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return asJson(res);
  }

  getModel(id: string): Promise<ModelBundle | JobStatus> {
    return fetch(this.url(`/models/${id}`)).then((r) => asJson(r));
  }

  /** Poll a submitted job until it is done or failed. */
  async waitForModel(id: string, timeoutMs = 60_000, intervalMs = 150): Promise<ModelBundle> {
    const start = Date.now();
    for (;;) {
      const doc = await this.getModel(id);
      if (doc.state === "done") return doc as ModelBundle;
      if (doc.state === "failed") {
        throw new ApiError(500, (doc as JobStatus).error ?? "fit failed");
      }
      if (Date.now() - start > timeoutMs) throw new ApiError(408, "job timed out");
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  getPlot<T>(modelId: string, name: string): Promise<T> {
    return fetch(this.url(`/models/${modelId}/plots/${name}`)).then((r) => asJson(r));
  }

  async postSegments(body: {
    name: string;
    model_id: string;
    segments: string[][];
  }): Promise<{ id: string; dataset_id: string; segment_sizes: number[] }> {
    const res = await fetch(this.url("/segments"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return asJson(res);
  }

  listSegments(): Promise<Record<string, unknown>[]> {
    return fetch(this.url("/segments")).then((r) => asJson(r));
  }
}
