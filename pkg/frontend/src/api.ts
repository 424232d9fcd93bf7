// Typed client for the gateway REST API.  Every dashboard mutation goes
// through here; nothing in the UI touches controller state directly.

import type {
  BusMessage,
  FlowIntentIn,
  FlowView,
  TelemetryTail,
  TopologyView,
} from "./types.js";
import { readEvents, type EventStreamOptions } from "./sse.js";

export class GatewayError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`gateway error ${status}: ${JSON.stringify(detail)}`);
  }
}

export class GatewayClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    const text = await response.text();
    const body = text ? JSON.parse(text) : null;
    if (!response.ok) {
      throw new GatewayError(response.status, body?.detail ?? body);
    }
    return body as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<{ ok: boolean; clock: number }> {
    return this.request("/health");
  }

  topology(): Promise<TopologyView> {
    return this.request("/topology");
  }

  flows(): Promise<FlowView[]> {
    return this.request("/flows");
  }

  createFlow(intent: FlowIntentIn): Promise<{
    flow_id: number;
    state: string;
    tunnel_id: number | null;
  }> {
    return this.post("/flows", intent);
  }

  migrate(flowId: number, tunnelId: number): Promise<{ tunnel_id: number }> {
    return this.post(`/flows/${flowId}/migrate`, { tunnel_id: tunnelId });
  }

  reallocate(
    flowId: number,
    objective?: string,
  ): Promise<{ tunnel_id: number; objective: string; fallback: boolean }> {
    return this.post(`/flows/${flowId}/reallocate`, { objective: objective ?? null });
  }

  advance(steps: number): Promise<{ clock: number }> {
    return this.post("/advance", { steps });
  }

  telemetry(series: string, n: number): Promise<TelemetryTail> {
    return this.request(`/telemetry/${encodeURIComponent(series)}?n=${n}`);
  }

  config(edge: string): Promise<string> {
    return fetch(`${this.baseUrl}/config/${encodeURIComponent(edge)}`).then(
      async (r) => {
        if (!r.ok) throw new GatewayError(r.status, await r.text());
        return r.text();
      },
    );
  }

  events(options: EventStreamOptions = {}): AsyncGenerator<BusMessage> {
    return readEvents(this.baseUrl, options);
  }
}
