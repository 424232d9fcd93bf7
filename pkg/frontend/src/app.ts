// Dashboard bootstrap: connect to the gateway, keep the view model in
// sync with the event stream, and wire the operator controls.
//
// Sync discipline: one event-stream subscription drives incremental
// updates; any connection loss or sequence gap triggers a full snapshot
// resync, then the stream resumes from the last seen sequence number.

import { GatewayClient, GatewayError } from "./api.js";
import { layoutTopology } from "./layout.js";
import { drawLines, mergeTail, newBuffer, type ChartBuffer } from "./charts.js";
import {
  applyEvent,
  initialViewModel,
  validateIntent,
  type ViewModel,
} from "./state.js";
import { renderFeed, renderFlows, renderStatus, renderTopology } from "./render.js";
import type { FlowView, TopologyView } from "./types.js";

const gatewayUrl =
  new URLSearchParams(location.search).get("gateway") ?? location.origin;
const client = new GatewayClient(gatewayUrl);

let vm: ViewModel = initialViewModel();
let topology: TopologyView | null = null;
let flows: FlowView[] = [];
let connected = false;
let bandwidthBuffers: ChartBuffer[] = [];
let throughputBuffers: ChartBuffer[] = [];

const el = {
  status: document.getElementById("status") as HTMLElement,
  svg: document.getElementById("topology") as unknown as SVGSVGElement,
  flowsBody: document.getElementById("flows-body") as HTMLTableSectionElement,
  feed: document.getElementById("feed") as HTMLUListElement,
  form: document.getElementById("flow-form") as HTMLFormElement,
  formErrors: document.getElementById("form-errors") as HTMLElement,
  srcSelect: document.getElementById("src-host") as HTMLSelectElement,
  dstSelect: document.getElementById("dst-host") as HTMLSelectElement,
  bandwidthChart: document.getElementById("bandwidth-chart") as HTMLCanvasElement,
  throughputChart: document.getElementById("throughput-chart") as HTMLCanvasElement,
  stepButton: document.getElementById("step") as HTMLButtonElement,
};

function hosts(): string[] {
  return (topology?.nodes ?? [])
    .filter((n) => n.kind === "host")
    .map((n) => n.label);
}

async function resync(): Promise<void> {
  topology = await client.topology();
  flows = await client.flows();
  fillHostSelects();
  render();
}

function fillHostSelects(): void {
  for (const select of [el.srcSelect, el.dstSelect]) {
    const current = select.value;
    select.replaceChildren();
    for (const host of hosts()) {
      const option = document.createElement("option");
      option.value = host;
      option.textContent = host;
      select.appendChild(option);
    }
    if (current) select.value = current;
  }
  if (!el.srcSelect.value && hosts().length) el.srcSelect.value = hosts()[0];
  if (!el.dstSelect.value && hosts().length > 1) {
    el.dstSelect.value = hosts()[1];
  }
}

async function refreshCharts(): Promise<void> {
  if (!topology) return;
  const n = 60;
  const nextBandwidth: ChartBuffer[] = [];
  for (const [i, tunnel] of topology.tunnels.entries()) {
    const series = `path:${tunnel.id}:bandwidth`;
    const buffer = bandwidthBuffers[i] ?? newBuffer(series);
    try {
      nextBandwidth.push(mergeTail(buffer, await client.telemetry(series, n)));
    } catch {
      nextBandwidth.push(buffer); // not enough history yet
    }
  }
  bandwidthBuffers = nextBandwidth;
  const nextThroughput: ChartBuffer[] = [];
  for (const flow of flows) {
    const series = `flow:${flow.id}:throughput`;
    const buffer =
      throughputBuffers.find((b) => b.series === series) ??
      newBuffer(series);
    try {
      nextThroughput.push(mergeTail(buffer, await client.telemetry(series, n)));
    } catch {
      nextThroughput.push(buffer);
    }
  }
  throughputBuffers = nextThroughput;
}

function render(): void {
  renderStatus(el.status, connected, vm);
  if (topology) {
    renderTopology(el.svg, topology, layoutTopology(topology),
                   vm.lastDecision?.tunnelId ?? null);
  }
  renderFlows(el.flowsBody, flows,
              (topology?.tunnels ?? []).map((t) => t.id), {
    onReallocate: (flowId, objective) => {
      client.reallocate(flowId, objective).catch(showError);
    },
    onMigrate: (flowId, tunnelId) => {
      client.migrate(flowId, tunnelId).catch(showError);
    },
  });
  renderFeed(el.feed, vm.feed);
  drawLines(el.bandwidthChart, bandwidthBuffers, "path available bandwidth (Mbps)");
  drawLines(el.throughputChart, throughputBuffers, "flow throughput (Mbps)");
}

function showError(error: unknown): void {
  const message =
    error instanceof GatewayError ? JSON.stringify(error.detail) : String(error);
  el.formErrors.textContent = message;
}

el.form.addEventListener("submit", (event) => {
  event.preventDefault();
  const data = new FormData(el.form);
  const fields = {
    srcHost: String(data.get("src_host") ?? ""),
    dstHost: String(data.get("dst_host") ?? ""),
    demandMbps: Number(data.get("demand_mbps")),
  };
  const errors = validateIntent(fields, hosts());
  if (errors.length) {
    el.formErrors.textContent = errors.join("; ");
    return; // invalid input never reaches the gateway
  }
  el.formErrors.textContent = "";
  client
    .createFlow({
      src_host: fields.srcHost,
      dst_host: fields.dstHost,
      protocol: Number(data.get("protocol")),
      tos: Number(data.get("tos")),
      demand_mbps: fields.demandMbps,
      objective: String(data.get("objective")),
    })
    .catch(showError);
});

el.stepButton.addEventListener("click", () => {
  client.advance(5).catch(showError);
});

async function followEvents(): Promise<void> {
  for (;;) {
    try {
      await resync();
      connected = true;
      render();
      for await (const message of client.events({ since: vm.lastSeq })) {
        vm = applyEvent(vm, message);
        if (vm.needsResync) {
          vm = { ...vm, needsResync: false };
          await resync();
        }
        if (message.topic === "telemetry.tick") {
          flows = await client.flows();
          topology = await client.topology();
          await refreshCharts();
        }
        if (message.topic.startsWith("flow.") ||
            message.topic === "pbr.installed") {
          flows = await client.flows();
        }
        render();
      }
    } catch {
      connected = false;
      render();
      await new Promise((resolve) => setTimeout(resolve, 1000));
    }
  }
}

void followEvents();
