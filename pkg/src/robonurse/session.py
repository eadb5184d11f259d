"""Simulation session: wires the world, controller, and telemetry together.

A session steps the fixed-timestep loop, collects the controller's frames,
adds periodic pose frames, stamps command acks with simulated delivery times
(serial link + seeded cloud latency), and persists the stream. Headless runs
execute as fast as possible; the live service steps the same loop paced to
wall time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .careplan import ActuationProfile
from .controller import RobotController
from .report import RunReport, aggregate
from .scenario import Scenario
from .simworld import World
from .telemetry import (
    FrameStream,
    LatencyModel,
    TelemetryFrame,
    parse_command_frame,
    persist,
)


@dataclass(frozen=True)
class ScriptedCommand:
    at: float
    kind: str
    node: str | None = None
    degrees: float | None = None
    liters: float | None = None
    profile: ActuationProfile | None = None
    time_of_day: tuple[float, ...] | None = None
    ref: str | None = None


def command_from_frame(frame: TelemetryFrame) -> dict:
    """Keyword arguments for RobotController.handle_command from a cmd frame."""
    payload = frame.payload
    kwargs = {
        "kind": str(payload.get("kind")),
        "node": payload.get("node"),
        "ref": payload.get("ref"),
    }
    if "degrees" in payload:
        kwargs["degrees"] = float(payload["degrees"])
    if "liters" in payload:
        kwargs["liters"] = float(payload["liters"])
    if "times" in payload:
        kwargs["time_of_day"] = tuple(
            float(v) for v in str(payload["times"]).split("+")
        )
    valves = {}
    for cylinder in (1, 2, 3):
        key = f"valve{cylinder}"
        if key in payload:
            valves[cylinder] = float(payload[key])
    if valves or "volume_l" in payload or "mask" in payload:
        kwargs["profile"] = ActuationProfile(
            valve_open=valves,
            pump_volume=float(payload.get("volume_l", 0.0)),
            mask_flag=bool(payload.get("mask", 0)),
        )
    return kwargs


class Session:
    """Deterministic stepped run of one scenario."""

    def __init__(self, scenario: Scenario, dt: float = 0.02, log_path=None):
        self.scenario = scenario
        self.dt = dt
        self.world = World(scenario, dt=dt)
        self.stream = FrameStream()
        self.controller = RobotController(self.world, stream=self.stream)
        self.frames: list[TelemetryFrame] = []
        self.log_path = log_path
        self._unflushed: list[TelemetryFrame] = []
        self._flush_failures = 0
        self._flush_alerted = False
        self._next_flush_t = 0.0
        self._latency = LatencyModel(
            min_ms=scenario.telemetry.latency_min_ms,
            max_ms=scenario.telemetry.latency_max_ms,
            seed=scenario.seed,
        ).sampler()
        self._serial_s = scenario.telemetry.serial_delay_ms / 1000.0
        self._last_ack_delivery = -math.inf
        self._next_pose_t = 0.0
        self._script: list[ScriptedCommand] = []
        self._new_frames: list[TelemetryFrame] = []

    @property
    def t(self) -> float:
        return self.world.t

    def load_script(self, commands: list[ScriptedCommand]):
        self._script = sorted(commands, key=lambda c: c.at)

    def submit_command(self, **kwargs) -> TelemetryFrame:
        """Ingest a command: echo the cmd frame, then ack it with a simulated
        delivery time for response accounting."""
        echo_payload = {
            "kind": kwargs.get("kind"),
            "cmd_id": self.controller.next_command_id,
        }
        for key in ("node", "degrees", "liters", "ref"):
            if kwargs.get(key) is not None:
                echo_payload[key] = kwargs[key]
        cmd_frame = self.stream.make("cmd", self.t, **echo_payload)
        self._collect(cmd_frame)
        ack = self.controller.handle_command(**kwargs)
        # Outbound ack suffers the serial link plus one cloud latency sample;
        # delivery times stay monotone per stream.
        deliver_t = self.t + self._serial_s + self._latency.sample_ms() / 1000.0
        deliver_t = max(deliver_t, self._last_ack_delivery)
        self._last_ack_delivery = deliver_t
        stamped = TelemetryFrame(
            type=ack.type,
            seq=ack.seq,
            sim_time=ack.sim_time,
            patient=ack.patient,
            payload={**ack.payload, "deliver_t": round(deliver_t, 6)},
        )
        # Replace the controller's plain ack with the stamped one.
        drained = self.controller.drain_frames()
        for frame in drained:
            self._collect(stamped if frame is ack else frame)
        return stamped

    def submit_command_line(self, line: str) -> TelemetryFrame:
        frame = parse_command_frame(line)
        return self.submit_command(**command_from_frame(frame))

    def _collect(self, frame: TelemetryFrame):
        self.frames.append(frame)
        self._new_frames.append(frame)
        if self.log_path is not None:
            self._unflushed.append(frame)

    def drain_new_frames(self) -> list[TelemetryFrame]:
        frames, self._new_frames = self._new_frames, []
        return frames

    def flush_log(self):
        """Append pending frames to the run log; failed writes are retained
        and retried, with an alert raised after three consecutive failures."""
        if self.log_path is None or not self._unflushed:
            return
        try:
            persist(self._unflushed, self.log_path)
        except OSError as exc:
            self._flush_failures += 1
            if self._flush_failures >= 3 and not self._flush_alerted:
                self._flush_alerted = True
                alert = self.stream.make(
                    "alert", self.t, reason="persistence-failure",
                    detail=f"{type(exc).__name__}: retaining frames in memory",
                )
                self._collect(alert)
            return
        self._flush_failures = 0
        self._flush_alerted = False
        self._unflushed = []

    def step(self):
        while self._script and self._script[0].at <= self.t:
            scripted = self._script.pop(0)
            self.submit_command(
                kind=scripted.kind, node=scripted.node, degrees=scripted.degrees,
                liters=scripted.liters, profile=scripted.profile,
                time_of_day=scripted.time_of_day, ref=scripted.ref,
            )
        self.controller.tick(self.dt)
        for frame in self.controller.drain_frames():
            self._collect(frame)
        self.world.robot.running = self.controller.is_running()
        self.world.step(self.dt, docked=self.controller.is_docked())
        if self.t + 1e-12 >= self._next_pose_t:
            x, y, heading = self.world.robot.pose
            pose_frame = self.stream.make(
                "pose", self.t,
                x=round(x, 4), y=round(y, 4), heading=round(heading, 4),
                battery=round(self.world.battery.level, 6),
                camera_deg=self.controller.camera_pan_deg,
                mode=self.controller.mode.state.value,
            )
            self._collect(pose_frame)
            self._next_pose_t += self.scenario.telemetry.pose_interval_s
        if self.t + 1e-12 >= self._next_flush_t:
            self.flush_log()
            self._next_flush_t += 1.0

    def run(self, duration: float):
        steps = int(round(duration / self.dt))
        for _ in range(steps):
            self.step()
        self.flush_log()

    def run_until_docked(self, max_duration: float = 3600.0) -> bool:
        """Step until a started round completes and the robot re-docks."""
        deadline = self.t + max_duration
        seen_active = False
        while self.t < deadline:
            self.step()
            if self.controller.round_active or not self.controller.is_docked():
                seen_active = True
            elif seen_active and self.controller.is_docked():
                return True
        return False

    def report(self) -> RunReport:
        return aggregate(self.frames)

    def persist(self, path) -> int:
        return persist(self.frames, path)


def run_headless(
    scenario: Scenario,
    duration: float,
    script: list[ScriptedCommand] | None = None,
    dt: float = 0.02,
) -> Session:
    session = Session(scenario, dt=dt)
    if script:
        session.load_script(script)
    session.run(duration)
    return session
