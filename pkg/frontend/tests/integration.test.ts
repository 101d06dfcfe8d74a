/**
 * End-to-end check against the real HTTP service: committed lasso segments
 * posted to /segments must show up as a characteristics dataset.
 */

import { spawn, ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SensokitClient } from "../src/api.js";
import type { CorrLoadingsPayload } from "../src/api.js";
import { commitSegment, emptyState, lassoSelect, toSegmentsRequest } from "../src/lasso.js";

const PORT = 18000 + Math.floor(Math.random() * 10000);
const BASE = `http://127.0.0.1:${PORT}`;

let proc: ChildProcess | null = null;
const client = new SensokitClient(BASE);

function likingCsv(J = 5, N = 8): string {
  const lines = ["," + Array.from({ length: N }, (_, i) => `C${i + 1}`).join(",")];
  let seed = 42;
  const rand = () => {
    seed = (seed * 1103515245 + 12345) % 2147483648;
    return seed / 2147483648;
  };
  for (let j = 0; j < J; j++) {
    const row = Array.from({ length: N }, () => 1 + Math.floor(rand() * 9));
    lines.push(`P${j + 1},` + row.join(","));
  }
  return lines.join("\n") + "\n";
}

beforeAll(async () => {
  proc = spawn(
    "python3",
    ["-m", "sensokit.cli", "serve", "--port", String(PORT),
     "--session-dir", `/tmp/sensokit-it-${PORT}`],
    { stdio: "ignore" },
  );
  const deadline = Date.now() + 30_000;
  for (;;) {
    try {
      await client.healthz();
      break;
    } catch {
      if (Date.now() > deadline) throw new Error("service did not start");
      await new Promise((resolve) => setTimeout(resolve, 250));
    }
  }
}, 40_000);

afterAll(() => {
  proc?.kill();
});

describe("segments round trip through the service", () => {
  it("posting committed segments registers a characteristics dataset", async () => {
    const up = await client.uploadDataset("lik.csv", likingCsv(), {
      role: "liking",
      delimiter: "comma",
      dataset_name: "it-liking",
    });
    expect(up.summary.dims).toEqual([5, 8]);

    const job = await client.submitModel({
      method: "pca", dataset: up.id, components: 2,
    });
    const bundle = await client.waitForModel(job.id);
    const corr = bundle.result.plots?.["corr_loadings"] as CorrLoadingsPayload;
    expect(corr.x_labels).toHaveLength(8);

    // lasso two halves of the consumer cloud around their actual positions
    const pts = corr.x_labels.map((label, i) => ({
      label,
      x: corr.x_points[i]?.[0] ?? 0,
      y: corr.x_points[i]?.[1] ?? 0,
    }));
    const xs = pts.map((p) => p.x).sort((a, b) => a - b);
    const splitX = xs[Math.floor(xs.length / 2)]!;
    const lo = Math.min(...xs) - 1;
    const hi = Math.max(...xs) + 1;
    const left: [number, number][] = [[lo, -2], [splitX, -2], [splitX, 2], [lo, 2]];
    const right: [number, number][] = [[splitX, -2], [hi, -2], [hi, 2], [splitX, 2]];

    let state = emptyState();
    const selLeft = lassoSelect(pts, left, state);
    state = commitSegment(state, selLeft).state;
    const selRight = lassoSelect(pts, right, state);
    state = commitSegment(state, selRight).state;
    expect(selLeft.members.length + selRight.members.length).toBeLessThanOrEqual(8);
    expect(selLeft.members.length).toBeGreaterThan(0);
    expect(selRight.members.length).toBeGreaterThan(0);
    // overlap rule: nothing selected twice
    const overlap = selRight.members.filter((m) => selLeft.members.includes(m));
    expect(overlap).toEqual([]);

    const created = await client.postSegments(
      toSegmentsRequest(state, "it-segments", bundle.id),
    );
    expect(created.segment_sizes).toEqual([
      selLeft.members.length, selRight.members.length,
    ]);

    const listing = await client.listDatasets();
    const derived = listing.find((d) => d.id === created.dataset_id);
    expect(derived).toBeDefined();
    expect(derived!.role).toBe("characteristics");
    expect(derived!.summary.dims).toEqual([8, 1]);

    const segs = await client.listSegments();
    expect(segs.some((s) => s["name"] === "it-segments")).toBe(true);
  }, 60_000);
});
