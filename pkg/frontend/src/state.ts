/** Panel state machine.
 *
 * All determinism lives server-side; this controller only coordinates
 * requests. Discovery requests never overlap (at most one in flight, the
 * latest parameter change wins); score and representation fetches are
 * cancel-and-replace on every slider move.
 */

import type {
  ConceptRequest,
  DiscoveryResult,
  GraphExplanation,
  NodeExplanation,
  Representation,
  RepsResponse,
  RunInfo,
  ScoreReport,
} from "./api.js";

/** The slice of the API the controller needs (lets tests substitute fakes). */
export interface ConceptApi {
  run(): Promise<RunInfo>;
  discover(req: ConceptRequest, signal?: AbortSignal): Promise<DiscoveryResult>;
  scores(modelId: number, n: number, top?: number, signal?: AbortSignal): Promise<ScoreReport>;
  reps(
    modelId: number,
    concept: number,
    n: number,
    top?: number,
    order?: "centroid" | { node: number },
    signal?: AbortSignal,
  ): Promise<RepsResponse>;
  explainNode(
    nodeId: number,
    modelId: number,
    n: number,
    top?: number,
    signal?: AbortSignal,
  ): Promise<NodeExplanation>;
  explainGraph(
    graphId: number,
    modelId: number,
    n: number,
    signal?: AbortSignal,
  ): Promise<GraphExplanation>;
}

export interface PanelParams {
  layer: number;
  algorithm: "kmeans" | "ahc" | "dbscan";
  k: number;
  eps: number;
  minPts: number;
  pcaDims: number | null; // scatter/DR toggle; null = raw space
  seed: number;
  n: number;
  topM: number;
}

export interface GalleryCard {
  concept: number;
  size: number;
  representations: Representation[];
}

export interface HistoryEntry {
  label: string;
  k: number;
  n: number;
  completeness: number;
  purityAvg: number | null;
  silhouette: number | null;
  heuristics: number | null;
}

export interface AppState {
  run: RunInfo | null;
  params: PanelParams;
  modelId: number | null;
  discovery: DiscoveryResult | null;
  scores: ScoreReport | null;
  gallery: GalleryCard[];
  history: HistoryEntry[];
  inspection: NodeExplanation | null;
  graphInspection: GraphExplanation | null;
  busy: boolean;
  error: string | null;
}

const DISCOVERY_KEYS: (keyof PanelParams)[] = [
  "layer", "algorithm", "k", "eps", "minPts", "pcaDims", "seed",
];

type Listener = (state: AppState) => void;

export class AppController {
  readonly state: AppState;
  private listeners: Listener[] = [];
  private discoveryInFlight = false;
  private pendingDiscovery = false;
  private refreshAbort: AbortController | null = null;
  private generation = 0;

  constructor(private readonly api: ConceptApi) {
    this.state = {
      run: null,
      params: {
        layer: 0,
        algorithm: "kmeans",
        k: 10,
        eps: 0.5,
        minPts: 5,
        pcaDims: null,
        seed: 0,
        n: 2,
        topM: 5,
      },
      modelId: null,
      discovery: null,
      scores: null,
      gallery: [],
      history: [],
      inspection: null,
      graphInspection: null,
      busy: false,
      error: null,
    };
  }

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  async init(): Promise<void> {
    const run = await this.api.run();
    this.state.run = run;
    this.state.params.layer = run.final_conv_index;
    this.emit();
    await this.runDiscovery();
  }

  /** Update parameters; kicks discovery or re-scoring as appropriate. */
  async setParams(patch: Partial<PanelParams>): Promise<void> {
    const before = this.state.params;
    const needsDiscovery = DISCOVERY_KEYS.some(
      (key) => key in patch && patch[key] !== before[key],
    );
    const needsRefresh = ("n" in patch && patch.n !== before.n)
      || ("topM" in patch && patch.topM !== before.topM);
    this.state.params = { ...before, ...patch };
    this.emit();
    if (needsDiscovery) {
      await this.runDiscovery();
    } else if (needsRefresh && this.state.modelId !== null) {
      await this.refreshModelViews();
    }
  }

  private buildRequest(): ConceptRequest {
    const p = this.state.params;
    const request: ConceptRequest = {
      layer: p.layer,
      algorithm: p.algorithm,
      params: p.algorithm === "dbscan" ? { eps: p.eps, min_pts: p.minPts } : { k: p.k },
      seed: p.seed,
    };
    if (p.pcaDims !== null) {
      request.dr = { kind: "pca", dims: p.pcaDims };
    }
    return request;
  }

  private async runDiscovery(): Promise<void> {
    if (this.discoveryInFlight) {
      this.pendingDiscovery = true;
      return;
    }
    this.discoveryInFlight = true;
    this.state.busy = true;
    this.state.error = null;
    this.emit();
    try {
      const result = await this.api.discover(this.buildRequest());
      this.state.discovery = result;
      this.state.modelId = result.id;
      this.emit();
      await this.refreshModelViews();
    } catch (err) {
      this.state.error = String(err);
    } finally {
      this.state.busy = false;
      this.discoveryInFlight = false;
      this.emit();
      if (this.pendingDiscovery) {
        this.pendingDiscovery = false;
        await this.runDiscovery();
      }
    }
  }

  /** Re-fetch scores and the gallery for the current model and (n, topM). */
  async refreshModelViews(): Promise<void> {
    const modelId = this.state.modelId;
    const discovery = this.state.discovery;
    if (modelId === null || discovery === null) return;
    this.refreshAbort?.abort();
    const abort = new AbortController();
    this.refreshAbort = abort;
    const generation = ++this.generation;
    const { n, topM } = this.state.params;
    try {
      const scores = await this.api.scores(modelId, n, 3, abort.signal);
      if (generation !== this.generation) return;
      this.state.scores = scores;
      this.pushHistory(scores);
      this.emit();
      const cards: GalleryCard[] = [];
      for (let concept = 0; concept < discovery.n_concepts; concept++) {
        const reps = await this.api.reps(modelId, concept, n, topM, "centroid", abort.signal);
        if (generation !== this.generation) return;
        cards.push({
          concept,
          size: discovery.cluster_sizes[concept],
          representations: reps.representations,
        });
        this.state.gallery = cards.slice();
        this.emit();
      }
    } catch (err) {
      if ((err as Error).name !== "AbortError" && generation === this.generation) {
        this.state.error = String(err);
        this.emit();
      }
    }
  }

  private configLabel(): string {
    const p = this.state.params;
    const dr = p.pcaDims === null ? "raw" : `pca:${p.pcaDims}`;
    const core = p.algorithm === "dbscan"
      ? `dbscan eps=${p.eps} minPts=${p.minPts}`
      : `${p.algorithm} k=${p.k}`;
    return `L${p.layer} ${core} ${dr} seed=${p.seed}`;
  }

  private pushHistory(scores: ScoreReport): void {
    const entry: HistoryEntry = {
      label: this.configLabel(),
      k: this.state.params.k,
      n: this.state.params.n,
      completeness: scores.completeness.score,
      purityAvg: scores.purity.avg ?? null,
      silhouette: this.state.discovery?.silhouette ?? null,
      heuristics: scores.heuristics?.recovered ?? null,
    };
    const key = `${entry.label}|n=${entry.n}`;
    if (!this.state.history.some((h) => `${h.label}|n=${h.n}` === key)) {
      this.state.history.push(entry);
    }
  }

  async inspectNode(nodeId: number): Promise<NodeExplanation> {
    const modelId = this.state.modelId;
    if (modelId === null) throw new Error("no concept model yet");
    const { n, topM } = this.state.params;
    const doc = await this.api.explainNode(nodeId, modelId, n, topM);
    this.state.inspection = doc;
    this.emit();
    return doc;
  }

  async inspectGraph(graphId: number): Promise<GraphExplanation> {
    const modelId = this.state.modelId;
    if (modelId === null) throw new Error("no concept model yet");
    const doc = await this.api.explainGraph(graphId, modelId, this.state.params.n);
    this.state.graphInspection = doc;
    this.emit();
    return doc;
  }
}
