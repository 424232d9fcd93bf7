"""HTTP gateway: REST endpoints plus a server-sent event stream.

The gateway is a thin shell over one controller.  Reads return locked
snapshots; every mutation goes through the controller's serialized
command methods, so concurrent clients cannot interleave inside an
allocation pipeline.  The /events stream replays the bus log from any
sequence number and then follows it live, which is what the dashboard
uses for reconnect-and-resync.
"""

from __future__ import annotations

import queue
import threading
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from pydantic import BaseModel, Field

from .controller import Controller, ControllerError, FlowIntent
from .netsim import TopologyError
from .optimizer import Objective
from .telemetry import InsufficientHistoryError

KEEPALIVE_SECONDS = 0.5


class FlowIn(BaseModel):
    src_host: str
    dst_host: str
    protocol: int = Field(ge=0, le=255)
    tos: int = Field(ge=0, le=255)
    demand_mbps: float = Field(gt=0)
    objective: str = "max_predicted_bandwidth"
    pin_tunnel: Optional[int] = None


class MigrateIn(BaseModel):
    tunnel_id: int


class ReallocateIn(BaseModel):
    objective: Optional[str] = None


class AdvanceIn(BaseModel):
    steps: int = Field(default=1, ge=1, le=10_000)


def _objective(name: str) -> Objective:
    try:
        return Objective(name)
    except ValueError:
        raise HTTPException(422, f"unknown objective {name!r}")


def create_app(controller: Controller) -> FastAPI:
    app = FastAPI(title="polka-te gateway")
    app.state.controller = controller
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ControllerError)
    async def controller_error(request: Request, exc: ControllerError):
        status = 409 if "already uses" in str(exc) else 422
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.get("/health")
    def health():
        return {"ok": True, "clock": controller.sim.clock}

    @app.get("/topology")
    def topology():
        return controller.topology_view()

    @app.get("/flows")
    def flows():
        return controller.flows_view()

    @app.post("/flows", status_code=202)
    def create_flow(body: FlowIn):
        intent = FlowIntent(
            src_host=body.src_host,
            dst_host=body.dst_host,
            protocol=body.protocol,
            tos=body.tos,
            demand_mbps=body.demand_mbps,
            objective=_objective(body.objective),
            pin_tunnel=body.pin_tunnel,
        )
        flow_id = controller.request_flow(intent)
        controller.run_pending()
        record = controller.flows[flow_id]
        return {"flow_id": flow_id, "state": record.state.value,
                "tunnel_id": record.tunnel_id}

    @app.post("/flows/{flow_id}/migrate")
    def migrate(flow_id: int, body: MigrateIn):
        _known_flow(controller, flow_id)
        controller.migrate_flow(flow_id, body.tunnel_id)
        return {"flow_id": flow_id,
                "tunnel_id": controller.flows[flow_id].tunnel_id}

    @app.post("/flows/{flow_id}/reallocate")
    def reallocate(flow_id: int, body: ReallocateIn = None):
        _known_flow(controller, flow_id)
        objective = _objective(body.objective) if body and body.objective else None
        record = controller.reallocate_flow(flow_id, objective)
        if record is None:
            raise HTTPException(409, controller.flows[flow_id].reason)
        return {
            "flow_id": flow_id,
            "tunnel_id": record.chosen_tunnel,
            "objective": record.objective,
            "objective_value": record.objective_value,
            "fallback": record.fallback,
            "forecasts": {str(k): v for k, v in record.forecasts.items()},
        }

    @app.post("/advance")
    def advance(body: AdvanceIn = None):
        steps = body.steps if body else 1
        for _ in range(steps):
            controller.telemetry_tick()
        return {"clock": controller.sim.clock}

    @app.get("/telemetry/{series}")
    def telemetry_tail(series: str, n: int = 10):
        try:
            points = controller.store.tail(series, n)
        except InsufficientHistoryError as exc:
            if exc.available == 0 and series not in controller.store.series_keys():
                raise HTTPException(404, f"unknown series {series!r}")
            raise HTTPException(
                400, {"error": str(exc), "available": exc.available})
        return {"series": series, "points": [[t, v] for t, v in points]}

    @app.get("/telemetry")
    def telemetry_index():
        return {"series": controller.store.series_keys()}

    @app.get("/config/{edge}", response_class=PlainTextResponse)
    def edge_config(edge: str):
        try:
            return controller.render_edge_config(edge)
        except TopologyError as exc:
            raise HTTPException(404, str(exc))

    @app.get("/events")
    def events(since: int = 0, limit: Optional[int] = None):
        def stream():
            backlog, live = controller.bus.subscribe(since)
            sent = 0
            try:
                for message in backlog:
                    yield _sse(message)
                    sent += 1
                    if limit is not None and sent >= limit:
                        return
                while limit is None or sent < limit:
                    try:
                        message = live.get(timeout=KEEPALIVE_SECONDS)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield _sse(message)
                    sent += 1
            finally:
                controller.bus.unsubscribe(live)
        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


def _sse(message) -> str:
    return (f"id: {message.seq}\nevent: {message.topic}\n"
            f"data: {message.to_json()}\n\n")


def _known_flow(controller: Controller, flow_id: int) -> None:
    if flow_id not in controller.flows:
        raise HTTPException(404, f"unknown flow {flow_id}")


class Ticker(threading.Thread):
    """Background wall-clock pacemaker for serve mode."""

    def __init__(self, controller: Controller, interval: float):
        super().__init__(daemon=True, name="telemetry-ticker")
        self.controller = controller
        self.interval = interval
        self._stop = threading.Event()

    def run(self):
        while not self._stop.wait(self.interval):
            self.controller.telemetry_tick()

    def stop(self):
        self._stop.set()


def serve(controller: Controller, host: str = "127.0.0.1", port: int = 8080,
          ticker_interval: "float | None" = 1.0):
    """Run the gateway under uvicorn; blocks until interrupted."""
    import uvicorn

    app = create_app(controller)
    ticker = None
    if ticker_interval:
        ticker = Ticker(controller, ticker_interval)
        ticker.start()
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        if ticker:
            ticker.stop()
