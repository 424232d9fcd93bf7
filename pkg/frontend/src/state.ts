// Dashboard view-model: a pure fold over (snapshots, bus events).
//
// The reducer owns everything the event stream can tell us (flow
// lifecycle, clock, decisions, the feed); link utilization and chart
// data come from served snapshots fetched on ticks.  Replaying a bus
// log through `applyEvent` must land on the same view state as a live
// run, which the test suite asserts against a real gateway.

import type { BusMessage } from "./types.js";

export interface FlowVM {
  id: number;
  state: "PENDING" | "ALLOCATED" | "FAILED";
  tunnelId: number | null;
  srcHost: string;
  dstHost: string;
  protocol: number;
  tos: number;
  demandMbps: number;
  objective: string;
  reason: string;
}

export interface FeedEntry {
  seq: number;
  topic: string;
  summary: string;
}

export interface Decision {
  flowId: number;
  tunnelId: number;
  objective: string;
  objectiveValue: number;
  fallback: boolean;
}

export interface ViewModel {
  lastSeq: number;
  clock: number;
  ticks: number;
  flows: Record<string, FlowVM>;
  migrations: number;
  lastDecision: Decision | null;
  feed: FeedEntry[];
  needsResync: boolean;
}

export const FEED_LIMIT = 200;

export function initialViewModel(): ViewModel {
  return {
    lastSeq: 0,
    clock: 0,
    ticks: 0,
    flows: {},
    migrations: 0,
    lastDecision: null,
    feed: [],
    needsResync: false,
  };
}

function summarize(message: BusMessage): string {
  const p = message.payload;
  switch (message.topic) {
    case "flow.requested":
      return `flow ${p.flow_id}: ${p.src_host} -> ${p.dst_host} ` +
        `(${p.demand_mbps} Mbps, tos ${p.tos})`;
    case "pbr.installed":
      return `flow ${p.flow_id}: PBR at ${p.edge} -> tunnel ${p.tunnel_id}`;
    case "flow.migrated":
      return `flow ${p.flow_id}: tunnel ${p.from_tunnel} -> ${p.to_tunnel}`;
    case "flow.failed":
      return `flow ${p.flow_id}: FAILED (${p.reason})`;
    case "path.selected":
      return `flow ${p.flow_id}: chose tunnel ${p.tunnel_id} ` +
        `by ${p.objective}`;
    case "prediction.ready":
      return `flow ${p.flow_id}: forecasts ready (${p.model})`;
    case "telemetry.request":
      return `flow ${p.flow_id}: telemetry windows requested`;
    case "telemetry.tick":
      return `tick t=${p.t}`;
    default:
      return message.topic;
  }
}

/** Fold one bus message into the view model.  Pure; returns a new model. */
export function applyEvent(vm: ViewModel, message: BusMessage): ViewModel {
  if (message.seq <= vm.lastSeq) {
    return vm; // duplicate delivery; the log is append-only
  }
  const next: ViewModel = {
    ...vm,
    flows: { ...vm.flows },
    feed: [...vm.feed, { seq: message.seq, topic: message.topic,
                         summary: summarize(message) }].slice(-FEED_LIMIT),
    needsResync: vm.needsResync || message.seq !== vm.lastSeq + 1,
    lastSeq: message.seq,
  };
  const p = message.payload;
  switch (message.topic) {
    case "flow.requested": {
      const id = p.flow_id as number;
      next.flows[id] = {
        id,
        state: "PENDING",
        tunnelId: (p.pin_tunnel as number | null) ?? null,
        srcHost: p.src_host as string,
        dstHost: p.dst_host as string,
        protocol: p.protocol as number,
        tos: p.tos as number,
        demandMbps: p.demand_mbps as number,
        objective: p.objective as string,
        reason: "",
      };
      break;
    }
    case "pbr.installed": {
      const flow = next.flows[p.flow_id as number];
      if (flow) {
        next.flows[flow.id] = {
          ...flow,
          state: "ALLOCATED",
          tunnelId: p.tunnel_id as number,
        };
      }
      break;
    }
    case "flow.migrated":
      next.migrations += 1;
      break;
    case "flow.failed": {
      const flow = next.flows[p.flow_id as number];
      if (flow) {
        next.flows[flow.id] = {
          ...flow,
          state: "FAILED",
          reason: p.reason as string,
        };
      }
      break;
    }
    case "path.selected":
      next.lastDecision = {
        flowId: p.flow_id as number,
        tunnelId: p.tunnel_id as number,
        objective: p.objective as string,
        objectiveValue: p.objective_value as number,
        fallback: p.fallback as boolean,
      };
      break;
    case "telemetry.tick":
      next.clock = p.t as number;
      next.ticks += 1;
      break;
    default:
      break;
  }
  return next;
}

export function replayLog(messages: BusMessage[]): ViewModel {
  return messages.reduce(applyEvent, initialViewModel());
}

/** Utilization color bands: 0-50% green, 50-90% amber, above 90% red. */
export function utilizationBand(utilization: number): "green" | "amber" | "red" {
  if (utilization <= 0.5) return "green";
  if (utilization <= 0.9) return "amber";
  return "red";
}

/** Client-side form validation; invalid intents never reach the gateway. */
export function validateIntent(
  fields: { srcHost: string; dstHost: string; demandMbps: number },
  hosts: string[],
): string[] {
  const errors: string[] = [];
  if (!hosts.includes(fields.srcHost)) {
    errors.push(`source host must be one of: ${hosts.join(", ")}`);
  }
  if (!hosts.includes(fields.dstHost)) {
    errors.push(`destination host must be one of: ${hosts.join(", ")}`);
  }
  if (!(fields.demandMbps > 0)) {
    errors.push("demand must be > 0 Mbps");
  }
  return errors;
}
