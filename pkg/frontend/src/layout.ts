/** Deterministic force-directed layout for small subgraphs.
 *
 * Positions are seeded from a hash of the subgraph's canonical content, so a
 * given subgraph renders identically across sessions and page reloads.
 */

import type { SubgraphPayload } from "./api.js";
import { hashString, mulberry32 } from "./rng.js";

export interface Point {
  x: number;
  y: number;
}

export interface LayoutOptions {
  width?: number;
  height?: number;
  iterations?: number;
  springLength?: number;
}

export function subgraphKey(sub: SubgraphPayload): string {
  return JSON.stringify({
    n: sub.parent_node_ids.length,
    e: [...sub.edges].sort((a, b) => a[0] - b[0] || a[1] - b[1]),
    a: [...sub.anchor_ids].sort((x, y) => x - y),
    p: sub.parent_node_ids,
  });
}

export function layoutSubgraph(sub: SubgraphPayload, options: LayoutOptions = {}): Point[] {
  const width = options.width ?? 220;
  const height = options.height ?? 180;
  const iterations = options.iterations ?? 200;
  const n = sub.parent_node_ids.length;
  if (n === 0) return [];
  const rand = mulberry32(hashString(subgraphKey(sub)));
  const pos: Point[] = [];
  for (let i = 0; i < n; i++) {
    pos.push({ x: (rand() - 0.5) * width * 0.5, y: (rand() - 0.5) * height * 0.5 });
  }
  if (n === 1) {
    return [{ x: width / 2, y: height / 2 }];
  }

  const springLength = options.springLength ?? Math.min(width, height) / Math.max(2.5, Math.sqrt(n) + 1);
  const repulsion = springLength * springLength;
  let temperature = Math.min(width, height) / 8;
  const cooling = 0.95;

  for (let iter = 0; iter < iterations; iter++) {
    const fx = new Array<number>(n).fill(0);
    const fy = new Array<number>(n).fill(0);
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        let dx = pos[i].x - pos[j].x;
        let dy = pos[i].y - pos[j].y;
        let d2 = dx * dx + dy * dy;
        if (d2 < 1e-6) {
          // deterministic nudge for coincident nodes
          dx = 1e-3 * (i - j);
          dy = 1e-3;
          d2 = dx * dx + dy * dy;
        }
        const f = repulsion / d2;
        fx[i] += dx * f;
        fy[i] += dy * f;
        fx[j] -= dx * f;
        fy[j] -= dy * f;
      }
    }
    for (const [a, b] of sub.edges) {
      const dx = pos[a].x - pos[b].x;
      const dy = pos[a].y - pos[b].y;
      const d = Math.sqrt(dx * dx + dy * dy) || 1e-3;
      const f = (d - springLength) / d * 0.5;
      fx[a] -= dx * f;
      fy[a] -= dy * f;
      fx[b] += dx * f;
      fy[b] += dy * f;
    }
    for (let i = 0; i < n; i++) {
      // mild centering keeps disconnected pieces on canvas
      fx[i] -= pos[i].x * 0.01;
      fy[i] -= pos[i].y * 0.01;
      const mag = Math.sqrt(fx[i] * fx[i] + fy[i] * fy[i]) || 1e-9;
      const step = Math.min(mag, temperature);
      pos[i].x += (fx[i] / mag) * step;
      pos[i].y += (fy[i] / mag) * step;
    }
    temperature = Math.max(temperature * cooling, 0.5);
  }

  // scale into the viewport with a margin
  const xs = pos.map((p) => p.x);
  const ys = pos.map((p) => p.y);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const margin = 18;
  const spanX = Math.max(maxX - minX, 1e-6);
  const spanY = Math.max(maxY - minY, 1e-6);
  return pos.map((p) => ({
    x: margin + ((p.x - minX) / spanX) * (width - 2 * margin),
    y: margin + ((p.y - minY) / spanY) * (height - 2 * margin),
  }));
}
