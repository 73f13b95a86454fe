import { describe, expect, it } from "vitest";

import type {
  ConceptRequest,
  DiscoveryResult,
  GraphExplanation,
  NodeExplanation,
  RepsResponse,
  RunInfo,
  ScoreReport,
} from "../src/api.js";
import { AppController, type ConceptApi } from "../src/state.js";

const RUN: RunInfo = {
  manifest: {
    dataset: { name: "ba_shapes", seed: 1, task: "node_classification", num_classes: 4 },
    metrics: { train_accuracy: 0.95, test_accuracy: 0.96 },
  },
  layers: [
    { index: 0, kind: "conv", row_unit: "node", width: 20 },
    { index: 1, kind: "conv", row_unit: "node", width: 20 },
    { index: 2, kind: "conv", row_unit: "node", width: 20 },
    { index: 3, kind: "linear", row_unit: "node", width: 4 },
  ],
  final_conv_index: 2,
  class_names: ["base", "top", "middle", "bottom"],
  task: "node_classification",
  num_units: 700,
  total_nodes: 700,
  concept_models: [],
};

class FakeApi implements ConceptApi {
  discoverCalls: ConceptRequest[] = [];
  scoreCalls: { modelId: number; n: number }[] = [];
  repCalls: { modelId: number; concept: number; n: number }[] = [];
  private nextId = 0;
  private byConfig = new Map<string, DiscoveryResult>();
  gate: Promise<void> | null = null;

  async run(): Promise<RunInfo> {
    return RUN;
  }

  async discover(req: ConceptRequest): Promise<DiscoveryResult> {
    this.discoverCalls.push(req);
    if (this.gate) await this.gate;
    const key = JSON.stringify(req);
    if (!this.byConfig.has(key)) {
      const k = req.params.k ?? 3;
      this.byConfig.set(key, {
        id: this.nextId++,
        n_concepts: k,
        cluster_sizes: Array.from({ length: k }, () => Math.floor(700 / k)),
        noise_count: 0,
        silhouette: 0.4,
      });
    }
    return this.byConfig.get(key)!;
  }

  async scores(modelId: number, n: number): Promise<ScoreReport> {
    this.scoreCalls.push({ modelId, n });
    return {
      model_id: modelId,
      n,
      top_m: 3,
      dataset: "ba_shapes",
      completeness: { score: 0.8 + modelId * 0.01, tree_depth: 3, tree_leaves: 5 },
      purity: { min: 0, max: 2, avg: 0.5 },
      heuristics: { recovered: 3, hits: {} },
      model_metrics: { train_accuracy: 0.95, test_accuracy: 0.96 },
    };
  }

  async reps(modelId: number, concept: number, n: number): Promise<RepsResponse> {
    this.repCalls.push({ modelId, concept, n });
    return {
      concept,
      representations: [
        {
          subgraph: {
            parent_node_ids: [1, 2],
            edges: [[0, 1]],
            anchor_ids: [0],
            hop_radius: n,
            node_labels: [1, 2],
          },
          node: 1,
          graph_index: 0,
          distance: 0.1,
        },
      ],
    };
  }

  async explainNode(nodeId: number, modelId: number, n: number): Promise<NodeExplanation> {
    const rep = (await this.reps(modelId, 0, n)).representations[0];
    return {
      node: nodeId,
      concept: 0,
      predicted_class: 1,
      actual_class: 1,
      global_representations: [rep],
      local_representations: [rep],
    };
  }

  async explainGraph(graphId: number, modelId: number, n: number): Promise<GraphExplanation> {
    const rep = (await this.reps(modelId, 0, n)).representations[0];
    return {
      graph_index: graphId,
      predicted_class: 0,
      actual_class: 0,
      contributions: [[0, 3]],
      representatives: { "0": rep },
    };
  }
}

async function freshApp() {
  const api = new FakeApi();
  const app = new AppController(api);
  await app.init();
  return { api, app };
}

describe("AppController", () => {
  it("initializes on the final convolution layer and discovers once", async () => {
    const { api, app } = await freshApp();
    expect(app.state.params.layer).toBe(2);
    expect(api.discoverCalls).toHaveLength(1);
    expect(api.discoverCalls[0]).toMatchObject({ layer: 2, algorithm: "kmeans", params: { k: 10 } });
    expect(app.state.gallery).toHaveLength(10);
  });

  it("changing k rebuilds the gallery with the new concept count", async () => {
    const { app } = await freshApp();
    await app.setParams({ k: 5 });
    expect(app.state.discovery?.n_concepts).toBe(5);
    expect(app.state.gallery).toHaveLength(5);
    await app.setParams({ k: 10 });
    expect(app.state.gallery).toHaveLength(10);
  });

  it("changing n re-scores without a new discovery", async () => {
    const { api, app } = await freshApp();
    const discoveries = api.discoverCalls.length;
    const scores = api.scoreCalls.length;
    await app.setParams({ n: 3 });
    expect(api.discoverCalls.length).toBe(discoveries);
    expect(api.scoreCalls.length).toBe(scores + 1);
    expect(api.scoreCalls.at(-1)).toMatchObject({ n: 3 });
  });

  it("keeps at most one discovery in flight and settles on the last params", async () => {
    const { api, app } = await freshApp();
    let release!: () => void;
    api.gate = new Promise((resolve) => (release = resolve));
    const p1 = app.setParams({ k: 4 });
    const p2 = app.setParams({ k: 6 });
    const p3 = app.setParams({ k: 8 });
    release();
    api.gate = null;
    await Promise.all([p1, p2, p3]);
    await new Promise((resolve) => setTimeout(resolve, 0));
    // 1 initial + 1 for k=4 + 1 trailing rerun with the latest params (k=8)
    expect(api.discoverCalls.length).toBe(3);
    expect(api.discoverCalls.at(-1)?.params.k).toBe(8);
    expect(app.state.discovery?.n_concepts).toBe(8);
  });

  it("identical parameter choices reproduce identical galleries (no client state)", async () => {
    const first = await freshApp();
    await first.app.setParams({ k: 7, n: 1 });
    const second = await freshApp();
    await second.app.setParams({ k: 7, n: 1 });
    expect(second.app.state.gallery).toEqual(first.app.state.gallery);
    expect(second.app.state.scores).toEqual(first.app.state.scores);
  });

  it("accumulates a history of tried settings without duplicates", async () => {
    const { app } = await freshApp();
    await app.setParams({ k: 5 });
    await app.setParams({ n: 3 });
    await app.setParams({ k: 10 });
    const labels = app.state.history.map((h) => `${h.label}|${h.n}`);
    expect(new Set(labels).size).toBe(labels.length);
    expect(app.state.history.length).toBeGreaterThanOrEqual(4);
    const k5 = app.state.history.find((h) => h.k === 5 && h.n === 2);
    expect(k5?.completeness).toBeCloseTo(0.81, 5);
  });

  it("records the inspected node", async () => {
    const { app } = await freshApp();
    const doc = await app.inspectNode(514);
    expect(doc.node).toBe(514);
    expect(app.state.inspection?.node).toBe(514);
  });

  it("dbscan parameters travel in the request body", async () => {
    const { api, app } = await freshApp();
    await app.setParams({ algorithm: "dbscan", eps: 0.7, minPts: 9 });
    expect(api.discoverCalls.at(-1)).toMatchObject({
      algorithm: "dbscan",
      params: { eps: 0.7, min_pts: 9 },
    });
  });
});
