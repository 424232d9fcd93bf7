// DOM rendering: SVG topology, flow table, event feed.
//
// Renderers are write-only projections of the view model and the last
// served snapshots; they hold no state of their own.

import type { FlowView, TopologyView } from "./types.js";
import type { Point } from "./layout.js";
import type { FeedEntry, ViewModel } from "./state.js";
import { utilizationBand } from "./state.js";

const BAND_COLORS = { green: "#16a34a", amber: "#d97706", red: "#dc2626" };
const KIND_COLORS = { core: "#1d4ed8", edge: "#7c3aed", host: "#475569" };
const SVG_NS = "http://www.w3.org/2000/svg";

export function renderTopology(
  svg: SVGSVGElement,
  topo: TopologyView,
  positions: Record<string, Point>,
  highlightTunnel: number | null,
): void {
  const width = svg.viewBox.baseVal.width || svg.clientWidth || 800;
  const height = svg.viewBox.baseVal.height || svg.clientHeight || 420;
  const margin = 50;
  const px = (p: Point) => margin + p.x * (width - 2 * margin);
  const py = (p: Point) => margin + p.y * (height - 2 * margin);
  svg.replaceChildren();

  const tunnel = topo.tunnels.find((t) => t.id === highlightTunnel);
  const tunnelEdges = new Set<string>();
  if (tunnel) {
    const path = [tunnel.ingress, ...tunnel.core_path, tunnel.egress];
    for (let i = 0; i + 1 < path.length; i++) {
      tunnelEdges.add([path[i], path[i + 1]].sort().join("|"));
    }
  }

  for (const link of topo.links) {
    const a = positions[link.a];
    const b = positions[link.b];
    if (!a || !b) continue;
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(px(a)));
    line.setAttribute("y1", String(py(a)));
    line.setAttribute("x2", String(px(b)));
    line.setAttribute("y2", String(py(b)));
    line.setAttribute("stroke", BAND_COLORS[utilizationBand(link.utilization)]);
    const onTunnel = tunnelEdges.has([link.a, link.b].sort().join("|"));
    line.setAttribute("stroke-width", onTunnel ? "5" : "2.5");
    if (onTunnel) line.setAttribute("stroke-dasharray", "6 3");
    line.appendChild(title(
      `${link.a}-${link.b}: ${(100 * link.utilization).toFixed(0)}% of ` +
      `${link.capacity_mbps} Mbps, ${link.latency_ms} ms`));
    svg.appendChild(line);

    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String((px(a) + px(b)) / 2));
    label.setAttribute("y", String((py(a) + py(b)) / 2 - 4));
    label.setAttribute("class", "link-label");
    label.textContent = `${(100 * link.utilization).toFixed(0)}%`;
    svg.appendChild(label);
  }

  for (const node of topo.nodes) {
    const p = positions[node.label];
    if (!p) continue;
    const group = document.createElementNS(SVG_NS, "g");
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(px(p)));
    circle.setAttribute("cy", String(py(p)));
    circle.setAttribute("r", node.kind === "core" ? "16" : "12");
    circle.setAttribute("fill", KIND_COLORS[node.kind]);
    circle.appendChild(title(
      node.node_id ? `${node.label} nodeID ${node.node_id}` : node.label));
    group.appendChild(circle);
    const text = document.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(px(p)));
    text.setAttribute("y", String(py(p) - 20));
    text.setAttribute("class", "node-label");
    text.textContent = node.label;
    group.appendChild(text);
    svg.appendChild(group);
  }
}

function title(text: string): SVGTitleElement {
  const el = document.createElementNS(SVG_NS, "title");
  el.textContent = text;
  return el;
}

export interface FlowActions {
  onReallocate(flowId: number, objective: string): void;
  onMigrate(flowId: number, tunnelId: number): void;
}

export function renderFlows(
  tbody: HTMLTableSectionElement,
  flows: FlowView[],
  tunnels: number[],
  actions: FlowActions,
): void {
  tbody.replaceChildren();
  for (const flow of flows) {
    const row = document.createElement("tr");
    row.append(
      cell(String(flow.id)),
      cell(`${flow.src_host} -> ${flow.dst_host}`),
      cell(`proto ${flow.protocol} tos ${flow.tos}`),
      cell(flow.state, `state-${flow.state.toLowerCase()}`),
      cell(flow.tunnel_id === null ? "-" : `tunnel ${flow.tunnel_id}`),
      cell(`${flow.throughput_mbps.toFixed(2)} Mbps`),
    );
    const controls = document.createElement("td");
    const reallocate = document.createElement("button");
    reallocate.textContent = "reallocate";
    reallocate.disabled = flow.state !== "ALLOCATED";
    reallocate.addEventListener("click", () =>
      actions.onReallocate(flow.id, flow.objective));
    controls.appendChild(reallocate);
    const select = document.createElement("select");
    for (const tid of tunnels) {
      const option = document.createElement("option");
      option.value = String(tid);
      option.textContent = `tunnel ${tid}`;
      if (tid === flow.tunnel_id) option.selected = true;
      select.appendChild(option);
    }
    select.disabled = flow.state !== "ALLOCATED";
    select.addEventListener("change", () =>
      actions.onMigrate(flow.id, Number(select.value)));
    controls.appendChild(select);
    row.appendChild(controls);
    tbody.appendChild(row);
  }
}

function cell(text: string, className?: string): HTMLTableCellElement {
  const td = document.createElement("td");
  td.textContent = text;
  if (className) td.className = className;
  return td;
}

export function renderFeed(list: HTMLUListElement, feed: FeedEntry[]): void {
  list.replaceChildren();
  for (const entry of [...feed].reverse().slice(0, 40)) {
    const item = document.createElement("li");
    item.textContent = `#${entry.seq} ${entry.topic}: ${entry.summary}`;
    list.appendChild(item);
  }
}

export function renderStatus(
  banner: HTMLElement,
  connected: boolean,
  vm: ViewModel,
): void {
  banner.textContent = connected
    ? `connected, t=${vm.clock}s, ${Object.keys(vm.flows).length} flows, ` +
      `${vm.migrations} migrations`
    : "disconnected from gateway, retrying";
  banner.className = connected ? "status ok" : "status down";
}
