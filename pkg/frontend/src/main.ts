/** DOM wiring: binds the parameter panel, gallery, dashboard, inspector and
 * scatter to the state controller. All rendering is innerHTML of SVG/HTML
 * strings produced by pure functions. */

import { ApiClient } from "./api.js";
import type { Representation } from "./api.js";
import type { AppState } from "./state.js";
import { AppController } from "./state.js";
import { renderScatterSvg, renderSubgraphSvg, representationCaption } from "./render.js";

const api = new ApiClient("");
const app = new AppController(api);

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function fmt(value: number | null | undefined, digits = 3): string {
  return value === null || value === undefined ? "–" : value.toFixed(digits);
}

function renderPanel(state: AppState): void {
  const run = state.run;
  if (!run) return;
  const layerSelect = el<HTMLSelectElement>("layer");
  if (layerSelect.options.length === 0) {
    run.layers
      .filter((layer) => layer.kind === "conv")
      .forEach((layer) => {
        const option = document.createElement("option");
        option.value = String(layer.index);
        option.textContent = `conv ${layer.index} (${layer.width} units)`;
        layerSelect.appendChild(option);
      });
  }
  layerSelect.value = String(state.params.layer);
  el<HTMLSelectElement>("algorithm").value = state.params.algorithm;
  el<HTMLInputElement>("k").value = String(state.params.k);
  el<HTMLElement>("k-value").textContent = String(state.params.k);
  el<HTMLInputElement>("n").value = String(state.params.n);
  el<HTMLElement>("n-value").textContent = String(state.params.n);
  el<HTMLInputElement>("seed").value = String(state.params.seed);
  el<HTMLInputElement>("dr-pca").checked = state.params.pcaDims !== null;
  document.body.classList.toggle("dbscan-mode", state.params.algorithm === "dbscan");
  el<HTMLElement>("busy").style.visibility = state.busy ? "visible" : "hidden";
  el<HTMLElement>("error").textContent = state.error ?? "";
}

function renderDashboard(state: AppState): void {
  const scores = state.scores;
  el<HTMLElement>("completeness").textContent = fmt(scores?.completeness.score);
  el<HTMLElement>("purity").textContent = scores
    ? `${fmt(scores.purity.min)} / ${fmt(scores.purity.max)} / ${fmt(scores.purity.avg)}`
    : "–";
  el<HTMLElement>("silhouette").textContent = fmt(state.discovery?.silhouette ?? null);
  el<HTMLElement>("heuristics").textContent =
    scores?.heuristics === null || scores === null
      ? "n/a"
      : `${scores.heuristics!.recovered}/8`;
  const rows = state.history
    .map(
      (h) => `<tr><td>${h.label}</td><td>${h.n}</td><td>${fmt(h.completeness)}</td>` +
        `<td>${fmt(h.purityAvg)}</td><td>${fmt(h.silhouette)}</td>` +
        `<td>${h.heuristics === null ? "n/a" : h.heuristics + "/8"}</td></tr>`,
    )
    .join("");
  el<HTMLElement>("history-body").innerHTML = rows;
}

function renderGallery(state: AppState): void {
  const classNames = state.run?.class_names ?? null;
  const cards = state.gallery
    .map((card) => {
      const reps = card.representations
        .map(
          (rep) =>
            `<figure>${renderSubgraphSvg(rep.subgraph)}` +
            `<figcaption>${representationCaption(rep, classNames)}</figcaption></figure>`,
        )
        .join("");
      return (
        `<section class="concept-card"><h3>concept ${card.concept} ` +
        `<span class="size">(${card.size} nodes)</span></h3>` +
        `<div class="reps">${reps}</div></section>`
      );
    })
    .join("");
  el<HTMLElement>("gallery").innerHTML = cards;
}

function renderInspector(state: AppState): void {
  const target = el<HTMLElement>("inspector-result");
  const classNames = state.run?.class_names ?? null;
  const name = (cls: number) => classNames?.[cls] ?? `class ${cls}`;
  const figures = (reps: Representation[]) =>
    reps
      .map(
        (rep) =>
          `<figure>${renderSubgraphSvg(rep.subgraph)}` +
          `<figcaption>${representationCaption(rep, classNames)}</figcaption></figure>`,
      )
      .join("");
  const doc = state.inspection;
  if (doc) {
    const section = (title: string, reps: typeof doc.global_representations) =>
      `<h4>${title}</h4><div class="reps">${figures(reps)}</div>`;
    target.innerHTML =
      `<p>node <b>${doc.node}</b> → concept <b>${doc.concept}</b>, ` +
      `predicted <b>${name(doc.predicted_class)}</b>, actual <b>${name(doc.actual_class)}</b></p>` +
      section("nearest the cluster centroid (global)", doc.global_representations) +
      section("nearest this node (local)", doc.local_representations);
    return;
  }
  const gdoc = state.graphInspection;
  if (gdoc) {
    const rows = gdoc.contributions
      .map(([concept, count]) => `<tr><td>concept ${concept}</td><td>${count} nodes</td></tr>`)
      .join("");
    const reps = Object.entries(gdoc.representatives)
      .map(
        ([concept, rep]) =>
          `<figure>${renderSubgraphSvg(rep.subgraph, { title: `concept ${concept}` })}` +
          `<figcaption>${representationCaption(rep, classNames)}</figcaption></figure>`,
      )
      .join("");
    target.innerHTML =
      `<p>graph <b>${gdoc.graph_index}</b>, predicted <b>${name(gdoc.predicted_class)}</b>, ` +
      `actual <b>${name(gdoc.actual_class)}</b></p>` +
      `<table class="contrib"><tbody>${rows}</tbody></table>` +
      `<div class="reps">${reps}</div>`;
    return;
  }
  target.innerHTML = "";
}

async function renderScatter(state: AppState): Promise<void> {
  if (!state.run || state.modelId === null) return;
  const colorConcepts = el<HTMLInputElement>("scatter-concepts").checked;
  try {
    const data = await api.activations(state.params.layer, 2, state.modelId);
    const colors = colorConcepts && data.concepts ? data.concepts : data.labels;
    el<HTMLElement>("scatter").innerHTML = renderScatterSvg(data.points, data.labels, {
      colorBy: colors,
    });
  } catch {
    el<HTMLElement>("scatter").innerHTML = "<p class='muted'>scatter unavailable</p>";
  }
}

function renderRunHeader(state: AppState): void {
  const run = state.run;
  if (!run) return;
  const m = run.manifest;
  el<HTMLElement>("run-title").textContent =
    `${m.dataset.name ?? "dataset"} · seed ${m.dataset.seed} · ` +
    `test acc ${(m.metrics.test_accuracy as number).toFixed(3)}`;
}

function bind(): void {
  el<HTMLSelectElement>("layer").addEventListener("change", (e) => {
    void app.setParams({ layer: Number((e.target as HTMLSelectElement).value) });
  });
  el<HTMLSelectElement>("algorithm").addEventListener("change", (e) => {
    const algorithm = (e.target as HTMLSelectElement).value as "kmeans" | "ahc" | "dbscan";
    void app.setParams({ algorithm });
  });
  el<HTMLInputElement>("k").addEventListener("change", (e) => {
    void app.setParams({ k: Number((e.target as HTMLInputElement).value) });
  });
  el<HTMLInputElement>("n").addEventListener("change", (e) => {
    void app.setParams({ n: Number((e.target as HTMLInputElement).value) });
  });
  el<HTMLInputElement>("eps").addEventListener("change", (e) => {
    void app.setParams({ eps: Number((e.target as HTMLInputElement).value) });
  });
  el<HTMLInputElement>("min-pts").addEventListener("change", (e) => {
    void app.setParams({ minPts: Number((e.target as HTMLInputElement).value) });
  });
  el<HTMLInputElement>("seed").addEventListener("change", (e) => {
    void app.setParams({ seed: Number((e.target as HTMLInputElement).value) });
  });
  el<HTMLInputElement>("dr-pca").addEventListener("change", (e) => {
    const on = (e.target as HTMLInputElement).checked;
    void app.setParams({ pcaDims: on ? 2 : null });
  });
  el<HTMLButtonElement>("inspect").addEventListener("click", () => {
    const id = Number(el<HTMLInputElement>("inspect-id").value);
    const isGraphTask = app.state.run?.task === "graph_classification";
    const request = isGraphTask ? app.inspectGraph(id) : app.inspectNode(id);
    void request.catch((err) => {
      el<HTMLElement>("inspector-result").innerHTML = `<p class="error">${String(err)}</p>`;
    });
  });
  el<HTMLInputElement>("scatter-concepts").addEventListener("change", () => {
    void renderScatter(app.state);
  });
}

app.onChange((state) => {
  renderRunHeader(state);
  renderPanel(state);
  renderDashboard(state);
  renderGallery(state);
  renderInspector(state);
});
app.onChange((state) => {
  if (!state.busy && state.modelId !== null) void renderScatter(state);
});

bind();
void app.init();
