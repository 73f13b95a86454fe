/** SVG string builders (no DOM dependency, so they are unit-testable in node). */

import type { Representation, SubgraphPayload } from "./api.js";
import { layoutSubgraph } from "./layout.js";

export const ANCHOR_COLOR = "#2e9e4f"; // clustered nodes (green)
export const PERIPHERY_COLOR = "#e87bb4"; // explored neighborhood (pink)

const CLASS_COLORS = [
  "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
  "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd",
];

export function classColor(label: number): string {
  return CLASS_COLORS[((label % CLASS_COLORS.length) + CLASS_COLORS.length) % CLASS_COLORS.length];
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface SubgraphRenderOptions {
  width?: number;
  height?: number;
  title?: string;
  classNames?: string[] | null;
}

export function renderSubgraphSvg(sub: SubgraphPayload, options: SubgraphRenderOptions = {}): string {
  const width = options.width ?? 220;
  const height = options.height ?? 180;
  const pos = layoutSubgraph(sub, { width, height });
  const anchors = new Set(sub.anchor_ids);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" role="img">`,
  );
  if (options.title) {
    parts.push(`<text x="${width / 2}" y="12" text-anchor="middle" class="sub-title">${esc(options.title)}</text>`);
  }
  for (const [a, b] of sub.edges) {
    parts.push(
      `<line x1="${pos[a].x.toFixed(1)}" y1="${pos[a].y.toFixed(1)}" ` +
        `x2="${pos[b].x.toFixed(1)}" y2="${pos[b].y.toFixed(1)}" class="sub-edge"/>`,
    );
  }
  sub.parent_node_ids.forEach((parentId, i) => {
    const fill = anchors.has(i) ? ANCHOR_COLOR : PERIPHERY_COLOR;
    const r = anchors.has(i) ? 8 : 6;
    parts.push(
      `<circle cx="${pos[i].x.toFixed(1)}" cy="${pos[i].y.toFixed(1)}" r="${r}" fill="${fill}" class="sub-node"/>`,
    );
    parts.push(
      `<text x="${pos[i].x.toFixed(1)}" y="${(pos[i].y - r - 2).toFixed(1)}" text-anchor="middle" class="sub-label">${parentId}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("");
}

export function representationCaption(rep: Representation, classNames?: string[] | null): string {
  const sub = rep.subgraph;
  const anchorLocal = sub.anchor_ids[0];
  const label = sub.node_labels?.[anchorLocal];
  const cls = label === undefined ? "" : ` · ${classNames?.[label] ?? `class ${label}`}`;
  return `node ${rep.node}${cls} · d=${rep.distance.toFixed(3)}`;
}

export interface ScatterOptions {
  width?: number;
  height?: number;
  colorBy?: number[]; // defaults to labels
}

export function renderScatterSvg(points: number[][], labels: number[], options: ScatterOptions = {}): string {
  const width = options.width ?? 460;
  const height = options.height ?? 360;
  const colors = options.colorBy ?? labels;
  if (points.length === 0) {
    return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}"></svg>`;
  }
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1] ?? 0);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  const margin = 14;
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">`,
  ];
  points.forEach((p, i) => {
    const x = margin + ((p[0] - minX) / spanX) * (width - 2 * margin);
    const y = height - margin - (((p[1] ?? 0) - minY) / spanY) * (height - 2 * margin);
    parts.push(
      `<circle cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="2.4" fill="${classColor(colors[i] ?? 0)}" fill-opacity="0.75"/>`,
    );
  });
  parts.push("</svg>");
  return parts.join("");
}
