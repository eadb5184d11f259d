"""FastAPI service wrapping the core package.

Exposes the trade-off analyzer and, when constructed around a live or replay
runner, the telemetry stream (wire protocol v1 over WebSocket) plus command
ingestion and run reports. The browser console in frontend/ is served from
the same port when its build output is present.
"""

from __future__ import annotations

import asyncio
import contextlib
import pathlib
from typing import Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import tradeoff as to
from .careplan import ActuationProfile
from .report import RunReport
from .session import Session, command_from_frame
from .telemetry import (
    CommandIngestError,
    OutboundQueue,
    TelemetryFrame,
    encode_frame,
    iter_replay,
    parse_command_frame,
)


class AlternativeModel(BaseModel):
    code: str
    slot: str
    cost: float = Field(ge=0, le=100)
    accuracy: float = Field(ge=0, le=100)
    weight: float = Field(ge=0, le=100)
    speed: float = Field(ge=0, le=100)
    available: bool = True


class TradeoffRequest(BaseModel):
    alternatives: list[AlternativeModel]
    weights: Optional[dict[str, list[float]]] = None
    k: int = 3
    availability: dict[str, bool] = Field(default_factory=dict)


class CandidateModel(BaseModel):
    codes: list[str]
    code_string: str
    breakdown: dict[str, float]
    total: float


class TradeoffResponse(BaseModel):
    ranked: list[CandidateModel]
    final: CandidateModel


class CommandRequest(BaseModel):
    kind: str
    node: Optional[str] = None
    degrees: Optional[float] = None
    liters: Optional[float] = None
    valve_open: Optional[dict[int, float]] = None
    volume_l: float = 0.0
    mask: bool = False
    times: Optional[list[float]] = None
    ref: Optional[str] = None


class AckModel(BaseModel):
    cmd_id: int
    status: str
    reason: Optional[str] = None
    deliver_t: Optional[float] = None


class CareTablesRequest(BaseModel):
    thresholds: Optional[dict[str, float]] = None
    knowledge_base: Optional[dict[str, list[str]]] = None


class ReportModel(BaseModel):
    rounds: int
    patients_visited: int
    dispenses: int
    alerts: int
    skipped_nodes: int
    avg_checkup_s: Optional[float]
    avg_medication_s: Optional[float]
    avg_response_s: Optional[float]
    battery_remaining: Optional[float]

    @classmethod
    def from_report(cls, report: RunReport) -> "ReportModel":
        return cls(**report.to_dict())


def _candidate_model(candidate: to.ConfigCandidate) -> CandidateModel:
    return CandidateModel(
        codes=list(candidate.codes()),
        code_string=candidate.code_string(),
        breakdown=dict(candidate.breakdown),
        total=candidate.total,
    )


class LiveRunner:
    """Steps a session paced to wall time and fans frames out to consoles."""

    def __init__(self, session: Session, speed: float = 1.0, wall_tick_s: float = 0.05):
        self.session = session
        self.speed = speed
        self.wall_tick_s = wall_tick_s
        self.connections: dict[int, tuple[OutboundQueue, asyncio.Event]] = {}
        self._next_conn = 0
        self._task: asyncio.Task | None = None
        self._stop = asyncio.Event()

    def register(self) -> int:
        conn_id = self._next_conn
        self._next_conn += 1
        self.connections[conn_id] = (OutboundQueue(), asyncio.Event())
        return conn_id

    def unregister(self, conn_id: int):
        self.connections.pop(conn_id, None)

    def broadcast(self, frames: list[TelemetryFrame]):
        if not frames:
            return
        for queue, event in self.connections.values():
            for frame in frames:
                queue.push(frame)
            event.set()

    def submit(self, **kwargs) -> TelemetryFrame:
        ack = self.session.submit_command(**kwargs)
        self.broadcast(self.session.drain_new_frames())
        return ack

    async def run(self):
        try:
            while not self._stop.is_set():
                steps = max(1, int(round(self.wall_tick_s * self.speed / self.session.dt)))
                for _ in range(steps):
                    self.session.step()
                self.broadcast(self.session.drain_new_frames())
                await asyncio.sleep(self.wall_tick_s)
        except asyncio.CancelledError:
            pass

    def start(self):
        self._task = asyncio.create_task(self.run())

    async def stop(self):
        self._stop.set()
        if self._task is not None:
            self._task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await self._task


class ReplayRunner(LiveRunner):
    """Re-serves a recorded frame stream at the recorded pacing."""

    def __init__(self, frames: list[TelemetryFrame], speed: float = 1.0):
        self.frames = frames
        self.speed = speed
        self.connections = {}
        self._next_conn = 0
        self._task = None
        self._stop = asyncio.Event()
        self.session = None

    def submit(self, **kwargs):
        raise CommandIngestError("replay stream does not accept commands")

    async def run(self):
        try:
            # Hold playback until the first console attaches.
            while not self.connections and not self._stop.is_set():
                await asyncio.sleep(0.01)
            for delay, frame in iter_replay(self.frames, speed=self.speed):
                if self._stop.is_set():
                    return
                if delay > 0:
                    await asyncio.sleep(delay)
                self.broadcast([frame])
        except asyncio.CancelledError:
            pass


def create_app(
    runner: LiveRunner | None = None,
    frontend_dir: str | pathlib.Path | None = None,
) -> FastAPI:
    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        if app.state.runner is not None:
            app.state.runner.start()
        yield
        if app.state.runner is not None:
            await app.state.runner.stop()

    app = FastAPI(title="robonurse", version="0.1.0", lifespan=lifespan)
    app.state.runner = runner

    @app.get("/health")
    def health():
        return {"status": "ok", "live": app.state.runner is not None}

    @app.post("/tradeoff", response_model=TradeoffResponse)
    def run_tradeoff(request: TradeoffRequest):
        try:
            catalog = [
                to.Alternative(
                    code=a.code,
                    slot=a.slot,
                    attributes={
                        "cost": a.cost,
                        "accuracy": a.accuracy,
                        "weight": a.weight,
                        "speed": a.speed,
                    },
                    available=a.available,
                )
                for a in request.alternatives
            ]
            weights = (
                to.WeightMatrix(
                    rows={k: tuple(v) for k, v in request.weights.items()}
                )
                if request.weights
                else to.WeightMatrix.default()
            )
            ranked = to.select_optimal(to.enumerate_configs(catalog, weights), k=request.k)
            final = to.apply_availability(ranked, request.availability, weights, catalog)
        except (to.CatalogError, to.ConfigurationError, to.WeightMatrixError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        except to.InfeasibleConfigurationError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        return TradeoffResponse(
            ranked=[_candidate_model(c) for c in ranked],
            final=_candidate_model(final),
        )

    def _require_runner() -> LiveRunner:
        if app.state.runner is None:
            raise HTTPException(status_code=409, detail="no live session")
        return app.state.runner

    @app.get("/report", response_model=ReportModel)
    def report():
        runner = _require_runner()
        if runner.session is None:
            raise HTTPException(status_code=409, detail="replay has no live report")
        return ReportModel.from_report(runner.session.report())

    @app.post("/command", response_model=AckModel)
    def command(request: CommandRequest):
        runner = _require_runner()
        kwargs = {
            "kind": request.kind,
            "node": request.node,
            "degrees": request.degrees,
            "liters": request.liters,
            "ref": request.ref,
        }
        if request.times:
            kwargs["time_of_day"] = tuple(request.times)
        if request.valve_open or request.volume_l or request.mask:
            kwargs["profile"] = ActuationProfile(
                valve_open=request.valve_open or {},
                pump_volume=request.volume_l,
                mask_flag=request.mask,
            )
        try:
            ack = runner.submit(**kwargs)
        except CommandIngestError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        return AckModel(
            cmd_id=int(ack.payload["cmd_id"]),
            status=str(ack.payload["status"]),
            reason=ack.payload.get("reason"),
            deliver_t=ack.payload.get("deliver_t"),
        )

    @app.post("/care-tables")
    def reload_care_tables(request: CareTablesRequest):
        runner = _require_runner()
        if runner.session is None:
            raise HTTPException(status_code=409, detail="replay has no controller")
        from .careplan import Thresholds, load_knowledge_base

        try:
            thresholds = (
                Thresholds.from_mapping(request.thresholds)
                if request.thresholds
                else None
            )
            kb = (
                load_knowledge_base(request.knowledge_base)
                if request.knowledge_base
                else None
            )
        except (TypeError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        runner.session.controller.reload_care_tables(
            thresholds=thresholds, knowledge_base=kb
        )
        runner.broadcast(runner.session.drain_new_frames())
        return {"status": "reloaded"}

    @app.websocket("/ws")
    async def websocket_stream(ws: WebSocket):
        await ws.accept()
        runner = app.state.runner
        if runner is None:
            await ws.close(code=1013)
            return
        conn_id = runner.register()
        queue, event = runner.connections[conn_id]

        async def sender():
            while True:
                await event.wait()
                event.clear()
                frames, dropped = queue.drain()
                if dropped and frames:
                    drop_alert = TelemetryFrame(
                        type="alert",
                        seq=max(frames[0].seq - 1, 0),
                        sim_time=frames[0].sim_time,
                        payload={"reason": "frames-dropped", "count": dropped},
                    )
                    await ws.send_text(encode_frame(drop_alert))
                for frame in frames:
                    await ws.send_text(encode_frame(frame))

        send_task = asyncio.create_task(sender())
        try:
            while True:
                line = await ws.receive_text()
                try:
                    frame = parse_command_frame(line)
                    runner.submit(**command_from_frame(frame))
                except CommandIngestError as exc:
                    reject = TelemetryFrame(
                        type="ack", seq=0, sim_time=0.0,
                        payload={"status": "rejected", "reason": str(exc)},
                    )
                    await ws.send_text(encode_frame(reject))
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            runner.unregister(conn_id)

    if frontend_dir is not None and pathlib.Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="console")

    return app


def default_frontend_dir() -> pathlib.Path | None:
    candidate = pathlib.Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None
