/** Typed client for the run-artifact query service. */

export interface LayerInfo {
  index: number;
  kind: "conv" | "pool" | "linear";
  row_unit: "node" | "graph";
  width: number;
}

export interface ConceptModelInfo {
  id: number;
  layer: number;
  config: Record<string, unknown>;
  n_concepts: number;
}

export interface RunInfo {
  manifest: {
    dataset: { name: string | null; seed: number; task: string; num_classes: number };
    metrics: { train_accuracy: number; test_accuracy: number };
    [key: string]: unknown;
  };
  layers: LayerInfo[];
  final_conv_index: number;
  class_names: string[] | null;
  task: string;
  num_units: number;
  total_nodes: number;
  concept_models: ConceptModelInfo[];
}

export interface DrSpec {
  kind: "none" | "pca";
  dims?: number;
}

export interface ConceptRequest {
  layer: number;
  algorithm: "kmeans" | "ahc" | "dbscan";
  params: { k?: number; eps?: number; min_pts?: number };
  dr?: DrSpec;
  seed?: number;
}

export interface DiscoveryResult {
  id: number;
  n_concepts: number;
  cluster_sizes: number[];
  noise_count: number;
  silhouette: number | null;
}

export interface SubgraphPayload {
  parent_node_ids: number[];
  edges: [number, number][];
  anchor_ids: number[];
  hop_radius: number;
  node_tags?: number[];
  node_labels?: number[];
}

export interface Representation {
  subgraph: SubgraphPayload;
  node: number;
  graph_index: number;
  distance: number;
}

export interface RepsResponse {
  concept: number;
  representations: Representation[];
}

export interface PurityReport {
  per_concept?: Record<string, number | { skipped: string }>;
  min?: number;
  max?: number;
  avg?: number;
  empty?: string;
}

export interface ScoreReport {
  model_id: number;
  n: number;
  top_m: number;
  dataset: string | null;
  completeness: { score: number; tree_depth: number; tree_leaves: number };
  purity: PurityReport;
  heuristics: { recovered: number; hits: Record<string, number[]> } | null;
  model_metrics: { train_accuracy: number; test_accuracy: number };
}

export interface NodeExplanation {
  node: number;
  concept: number;
  predicted_class: number;
  actual_class: number;
  global_representations: Representation[];
  local_representations: Representation[];
}

export interface GraphExplanation {
  graph_index: number;
  predicted_class: number;
  actual_class: number;
  contributions: [number, number][];
  representatives: Record<string, Representation>;
}

export interface ActivationsResponse {
  layer: number;
  row_unit: string;
  points: number[][];
  labels: number[];
  concepts?: number[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail: unknown = null;
      try {
        detail = (await response.json()).detail;
      } catch {
        detail = await response.text().catch(() => null);
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  run(): Promise<RunInfo> {
    return this.request<RunInfo>("/api/run");
  }

  discover(req: ConceptRequest, signal?: AbortSignal): Promise<DiscoveryResult> {
    return this.request<DiscoveryResult>("/api/concepts", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
      signal,
    });
  }

  scores(modelId: number, n: number, top = 3, signal?: AbortSignal): Promise<ScoreReport> {
    const q = new URLSearchParams({ n: String(n), top: String(top) });
    return this.request<ScoreReport>(`/api/concepts/${modelId}/scores?${q}`, { signal });
  }

  reps(
    modelId: number,
    concept: number,
    n: number,
    top = 5,
    order: "centroid" | { node: number } = "centroid",
    signal?: AbortSignal,
  ): Promise<RepsResponse> {
    const orderValue = order === "centroid" ? "centroid" : `node:${order.node}`;
    const q = new URLSearchParams({
      concept: String(concept),
      n: String(n),
      top: String(top),
      order: orderValue,
    });
    return this.request<RepsResponse>(`/api/concepts/${modelId}/reps?${q}`, { signal });
  }

  explainNode(
    nodeId: number,
    modelId: number,
    n: number,
    top = 5,
    signal?: AbortSignal,
  ): Promise<NodeExplanation> {
    const q = new URLSearchParams({ model: String(modelId), n: String(n), top: String(top) });
    return this.request<NodeExplanation>(`/api/explain/node/${nodeId}?${q}`, { signal });
  }

  explainGraph(
    graphId: number,
    modelId: number,
    n: number,
    signal?: AbortSignal,
  ): Promise<GraphExplanation> {
    const q = new URLSearchParams({ model: String(modelId), n: String(n) });
    return this.request<GraphExplanation>(`/api/explain/graph/${graphId}?${q}`, { signal });
  }

  activations(layer: number, dims = 2, modelId?: number, signal?: AbortSignal): Promise<ActivationsResponse> {
    const q = new URLSearchParams({ layer: String(layer), dr: `pca:${dims}` });
    if (modelId !== undefined) q.set("model", String(modelId));
    return this.request<ActivationsResponse>(`/api/activations?${q}`, { signal });
  }
}
