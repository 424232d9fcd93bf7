// Static topology layout: breadth-first layering from the first host.
//
// The served node order is the topology file order, so the layering is
// a deterministic function of the document; no physics, no randomness.

import type { TopologyView } from "./types.js";

export interface Point {
  x: number;
  y: number;
}

export function layoutTopology(topo: TopologyView): Record<string, Point> {
  const neighbors = new Map<string, string[]>();
  for (const node of topo.nodes) {
    neighbors.set(node.label, []);
  }
  for (const link of topo.links) {
    neighbors.get(link.a)?.push(link.b);
    neighbors.get(link.b)?.push(link.a);
  }
  const start =
    topo.nodes.find((n) => n.kind === "host")?.label ?? topo.nodes[0]?.label;
  const depth = new Map<string, number>();
  if (start !== undefined) {
    depth.set(start, 0);
    const queue = [start];
    while (queue.length) {
      const here = queue.shift()!;
      for (const there of neighbors.get(here) ?? []) {
        if (!depth.has(there)) {
          depth.set(there, depth.get(here)! + 1);
          queue.push(there);
        }
      }
    }
  }
  // anything unreachable parks in a trailing column
  const maxSeen = Math.max(0, ...depth.values());
  for (const node of topo.nodes) {
    if (!depth.has(node.label)) depth.set(node.label, maxSeen + 1);
  }
  const columns = new Map<number, string[]>();
  for (const node of topo.nodes) {
    const d = depth.get(node.label)!;
    if (!columns.has(d)) columns.set(d, []);
    columns.get(d)!.push(node.label);
  }
  const maxDepth = Math.max(...columns.keys());
  const out: Record<string, Point> = {};
  for (const [d, labels] of columns) {
    labels.sort();
    labels.forEach((label, i) => {
      out[label] = {
        x: maxDepth === 0 ? 0.5 : d / maxDepth,
        y: (i + 1) / (labels.length + 1),
      };
    });
  }
  return out;
}
