// Wire types mirroring the gateway's JSON responses and bus messages.

export interface BusMessage {
  seq: number;
  topic: string;
  payload: Record<string, unknown>;
}

export interface NodeView {
  label: string;
  kind: "core" | "edge" | "host";
  addr: string | null;
  node_id: string | null;
}

export interface LinkView {
  a: string;
  b: string;
  capacity_mbps: number;
  latency_ms: number;
  utilization: number;
}

export interface TunnelView {
  id: number;
  ingress: string;
  egress: string;
  core_path: string[];
  route_id: string;
  latency_ms: number;
}

export interface TopologyView {
  name: string;
  nodes: NodeView[];
  links: LinkView[];
  tunnels: TunnelView[];
}

export interface FlowView {
  id: number;
  state: "PENDING" | "ALLOCATED" | "FAILED";
  tunnel_id: number | null;
  throughput_mbps: number;
  src_host: string;
  dst_host: string;
  protocol: number;
  tos: number;
  demand_mbps: number;
  objective: string;
  reason: string;
}

export interface FlowIntentIn {
  src_host: string;
  dst_host: string;
  protocol: number;
  tos: number;
  demand_mbps: number;
  objective?: string;
  pin_tunnel?: number | null;
}

export interface TelemetryTail {
  series: string;
  points: [number, number][];
}
