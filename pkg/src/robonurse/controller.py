"""Routine/supervisory control state machine.

The robot runs scheduled rounds over the patient nodes (navigate -> measure ->
classify/prescribe/actuate -> log) and accepts real-time supervisory commands
that preempt the routine at state boundaries. Measuring and dispensing phases
are atomic; navigation may be preempted mid-leg by priority commands. Every
(state, event) pair has an explicit entry in TRANSITIONS, which the tests
enumerate exhaustively.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from . import arm
from .careplan import (
    Action,
    ActuationProfile,
    DispenseRecord,
    Dispenser,
    HealthState,
    UnknownHealthStateError,
    actuation_profile,
    classify,
    prescribe,
)
from .motion import (
    NavigationTimeoutError,
    Trajectory,
    TrajectoryFollower,
    Waypoint,
    invert_trajectory,
    trajectory_length,
)
from .scenario import Scenario
from .sensors import VitalSigns
from .simworld import World
from .telemetry import FrameStream, TelemetryFrame

CAMERA_PAN_LIMIT_DEG = 30.0
PRIORITY_KINDS = ("priority_checkup", "return_to_dock")
INSTANT_KINDS = ("camera_pan", "set_schedule")


class StateKind(str, enum.Enum):
    DOCKED = "docked"
    NAVIGATING = "navigating"
    MEASURING = "measuring"
    DISPENSING = "dispensing"
    RETURNING = "returning"
    FAULT = "fault"


class Event(str, enum.Enum):
    TICK = "tick"
    SCHEDULE_DUE = "schedule_due"
    COMMAND_READY = "command_ready"
    ARRIVED = "arrived"
    NAV_TIMEOUT = "nav_timeout"
    MEASURE_COMPLETE = "measure_complete"
    DISPENSE_COMPLETE = "dispense_complete"
    BATTERY_LOW = "battery_low"


# Exhaustive (state x event) -> handler-name table. "ignore" is an explicit
# no-op; anything else names an _on_* method.
TRANSITIONS: dict[StateKind, dict[Event, str]] = {
    StateKind.DOCKED: {
        Event.TICK: "ignore",
        Event.SCHEDULE_DUE: "start_round",
        Event.COMMAND_READY: "execute_command",
        Event.ARRIVED: "ignore",
        Event.NAV_TIMEOUT: "ignore",
        Event.MEASURE_COMPLETE: "ignore",
        Event.DISPENSE_COMPLETE: "ignore",
        Event.BATTERY_LOW: "inhibit_round",
    },
    StateKind.NAVIGATING: {
        Event.TICK: "follow_leg",
        Event.SCHEDULE_DUE: "ignore",
        Event.COMMAND_READY: "preempt_if_priority",
        Event.ARRIVED: "begin_service",
        Event.NAV_TIMEOUT: "skip_node",
        Event.MEASURE_COMPLETE: "ignore",
        Event.DISPENSE_COMPLETE: "ignore",
        Event.BATTERY_LOW: "abort_round",
    },
    StateKind.MEASURING: {
        Event.TICK: "await_measurement",
        Event.SCHEDULE_DUE: "ignore",
        Event.COMMAND_READY: "defer_to_boundary",
        Event.ARRIVED: "ignore",
        Event.NAV_TIMEOUT: "ignore",
        Event.MEASURE_COMPLETE: "run_careplan",
        Event.DISPENSE_COMPLETE: "ignore",
        Event.BATTERY_LOW: "defer_to_boundary",
    },
    StateKind.DISPENSING: {
        Event.TICK: "await_dispense",
        Event.SCHEDULE_DUE: "ignore",
        Event.COMMAND_READY: "defer_to_boundary",
        Event.ARRIVED: "ignore",
        Event.NAV_TIMEOUT: "ignore",
        Event.MEASURE_COMPLETE: "ignore",
        Event.DISPENSE_COMPLETE: "finish_dispense",
        Event.BATTERY_LOW: "defer_to_boundary",
    },
    StateKind.RETURNING: {
        Event.TICK: "follow_leg",
        Event.SCHEDULE_DUE: "ignore",
        Event.COMMAND_READY: "preempt_if_priority",
        Event.ARRIVED: "dock",
        Event.NAV_TIMEOUT: "fault",
        Event.MEASURE_COMPLETE: "ignore",
        Event.DISPENSE_COMPLETE: "ignore",
        Event.BATTERY_LOW: "ignore",
    },
    StateKind.FAULT: {
        Event.TICK: "ignore",
        Event.SCHEDULE_DUE: "ignore",
        Event.COMMAND_READY: "reject_command",
        Event.ARRIVED: "ignore",
        Event.NAV_TIMEOUT: "ignore",
        Event.MEASURE_COMPLETE: "ignore",
        Event.DISPENSE_COMPLETE: "ignore",
        Event.BATTERY_LOW: "ignore",
    },
}


@dataclass(frozen=True)
class Command:
    """Supervisory command; ids are assigned monotonically at ingestion."""

    id: int
    kind: str
    node: str | None = None
    degrees: float | None = None
    liters: float | None = None
    profile: ActuationProfile | None = None
    time_of_day: tuple[float, ...] | None = None
    issued_at: float = 0.0
    ref: str | None = None


@dataclass(frozen=True)
class RobotMode:
    state: StateKind
    node: str | None = None
    purpose: str = "routine"  # routine | supervisory
    active_command: Command | None = None


@dataclass
class CareLog:
    """Append-only health and medication log."""

    health_entries: list[tuple[str, VitalSigns, HealthState]] = field(default_factory=list)
    medication_entries: list[DispenseRecord] = field(default_factory=list)

    def append_health(self, node: str, vitals: VitalSigns, state: HealthState):
        self._check_time(vitals.timestamp)
        self.health_entries.append((node, vitals, state))

    def append_medication(self, record: DispenseRecord):
        self._check_time(record.timestamp)
        self.medication_entries.append(record)

    def _check_time(self, timestamp: float):
        last = max(
            (v.timestamp for _, v, _ in self.health_entries[-1:]),
            default=-math.inf,
        )
        if timestamp < last - 1e-9:
            raise ValueError("log timestamps must be nondecreasing")


@dataclass
class NodeTiming:
    node: str
    leg_start: float
    arrived: float | None = None
    completed: float | None = None
    skipped: bool = False

    @property
    def checkup_s(self) -> float | None:
        if self.completed is None:
            return None
        return self.completed - self.leg_start


@dataclass
class RoundReport:
    started_at: float
    completed_at: float | None = None
    timings: list[NodeTiming] = field(default_factory=list)
    dispenses: int = 0
    alerts: int = 0
    aborted: bool = False

    @property
    def avg_checkup_s(self) -> float | None:
        done = [t.checkup_s for t in self.timings if t.checkup_s is not None]
        return sum(done) / len(done) if done else None


class RobotController:
    """Single logical actor owning all mutable robot state."""

    def __init__(self, world: World, stream: FrameStream | None = None):
        self.world = world
        self.scenario: Scenario = world.scenario
        self.stream = stream or FrameStream()
        self.frames: list[TelemetryFrame] = []
        self.mode = RobotMode(state=StateKind.DOCKED)
        self.log = CareLog()
        self.dispenser = Dispenser(
            inventory=self.scenario.inventory, dosing=self.scenario.dosing
        )
        self.queue: list[Command] = []
        self._next_command_id = 1
        self.schedule = self.scenario.schedule
        self.camera_pan_deg = 0.0
        # Care tables swap atomically on hot reload.
        self.thresholds = self.scenario.thresholds
        self.knowledge_base = self.scenario.knowledge_base

        self.round_plan: list[str] = []
        self.round_active = False
        self.round_report: RoundReport | None = None
        self.completed_rounds: list[RoundReport] = []
        self.follower: TrajectoryFollower | None = None
        self.visited: list[Waypoint] = []
        self._leg_timing: NodeTiming | None = None
        self._measure_end = 0.0
        self._dispense_end = 0.0
        self._pending_dispense = None
        self._fluid_last = {p.node_id: 0.0 for p in self.scenario.patients}
        self._last_tick_time = 0.0
        self._arm_transfer_s = self._estimate_arm_transfers()

    # ------------------------------------------------------------------ util

    def _estimate_arm_transfers(self) -> dict[int, float]:
        """Pick-and-place duration per cylinder (outlets are fixed)."""
        desk = arm.EndEffectorState(position=self.scenario.room.desk_offset)
        durations = {}
        for cylinder, outlet in enumerate(self.scenario.room.outlets, start=1):
            traj = arm.pick_and_place(arm.EndEffectorState(position=outlet), desk)
            durations[cylinder] = traj.duration
        return durations

    @property
    def t(self) -> float:
        return self.world.t

    def emit(self, type: str, patient: str | None = None, **payload):
        frame = self.stream.make(type, self.t, patient=patient, **payload)
        self.frames.append(frame)
        return frame

    def drain_frames(self) -> list[TelemetryFrame]:
        frames, self.frames = self.frames, []
        return frames

    def _set_mode(self, state: StateKind, node: str | None = None,
                  purpose: str = "routine", command: Command | None = None):
        self.mode = RobotMode(state=state, node=node, purpose=purpose,
                              active_command=command)
        payload = {"mode": state.value, "purpose": purpose}
        if node:
            payload["node"] = node
        if command is not None:
            payload["cmd_id"] = command.id
        self.emit("mode", **payload)

    def is_docked(self) -> bool:
        return self.mode.state == StateKind.DOCKED

    def is_running(self) -> bool:
        return self.mode.state not in (StateKind.DOCKED, StateKind.FAULT)

    # ------------------------------------------------------ command handling

    @property
    def next_command_id(self) -> int:
        """Id the next ingested command will receive."""
        return self._next_command_id

    def handle_command(self, kind: str, node: str | None = None,
                       degrees: float | None = None, liters: float | None = None,
                       profile: ActuationProfile | None = None,
                       time_of_day=None, ref: str | None = None) -> TelemetryFrame:
        """Validate and enqueue a supervisory command; returns the ack frame."""
        cmd_id = self._next_command_id
        self._next_command_id += 1

        def reject(reason: str) -> TelemetryFrame:
            payload = {"cmd_id": cmd_id, "status": "rejected", "reason": reason}
            if ref:
                payload["ref"] = ref
            return self.emit("ack", **payload)

        known = {p.node_id for p in self.scenario.patients}
        if kind in ("priority_checkup", "manual_dispense", "fluid_supply"):
            if node not in known:
                return reject(f"unknown node {node}")
        if kind == "camera_pan":
            if degrees is None or abs(degrees) > CAMERA_PAN_LIMIT_DEG:
                return reject(f"pan limit +-{CAMERA_PAN_LIMIT_DEG:.0f} deg")
        if kind == "fluid_supply" and (liters is None or liters <= 0 or liters > 1.0):
            return reject("fluid volume must be in (0, 1] liters")
        if kind == "manual_dispense" and profile is None:
            return reject("missing dispense profile")
        if kind == "set_schedule":
            if not time_of_day or list(time_of_day) != sorted(set(time_of_day)):
                return reject("schedule times must be strictly increasing")
        if self.mode.state == StateKind.FAULT:
            return reject("controller faulted")

        command = Command(
            id=cmd_id, kind=kind, node=node, degrees=degrees, liters=liters,
            profile=profile,
            time_of_day=tuple(time_of_day) if time_of_day else None,
            issued_at=self.t, ref=ref,
        )
        if kind in PRIORITY_KINDS:
            insert_at = next(
                (i for i, c in enumerate(self.queue) if c.kind not in PRIORITY_KINDS),
                len(self.queue),
            )
            self.queue.insert(insert_at, command)
        else:
            self.queue.append(command)
        payload = {"cmd_id": cmd_id, "status": "accepted", "kind": kind}
        if ref:
            payload["ref"] = ref
        return self.emit("ack", **payload)

    def _pop_command(self) -> Command | None:
        return self.queue.pop(0) if self.queue else None

    def reload_care_tables(self, thresholds=None, knowledge_base=None):
        """Hot-swap the threshold/knowledge tables; both stay immutable."""
        if thresholds is not None:
            self.thresholds = thresholds
        if knowledge_base is not None:
            self.knowledge_base = knowledge_base
        self.emit("mode", mode="care_tables_reloaded")

    # --------------------------------------------------------------- stepping

    def tick(self, dt: float):
        """Advance the state machine by one control period."""
        now = self.t
        if self._schedule_crossed(self._last_tick_time, now):
            self._dispatch(Event.SCHEDULE_DUE)
        self._last_tick_time = now

        # Instant commands apply in any non-fault state without a mode change.
        if self.queue and self.queue[0].kind in INSTANT_KINDS and \
                self.mode.state != StateKind.FAULT:
            self._run_instant(self.queue.pop(0))

        if self.queue:
            self._dispatch(Event.COMMAND_READY)

        if self._battery_low() and self.mode.state in (
            StateKind.NAVIGATING,
        ) and self.round_active:
            self._dispatch(Event.BATTERY_LOW)

        self._dispatch(Event.TICK, dt=dt)

    def _dispatch(self, event: Event, **kwargs):
        handler_name = TRANSITIONS[self.mode.state][event]
        if handler_name == "ignore":
            return
        getattr(self, f"_on_{handler_name}")(**kwargs)

    def _schedule_crossed(self, t0: float, t1: float) -> bool:
        if self.mode.state != StateKind.DOCKED or t1 <= t0:
            return False
        day = self.schedule.day_length_s
        for checkup in self.schedule.checkup_times:
            base = math.floor(t0 / day) * day
            for cycle in (base, base + day):
                trigger = cycle + checkup
                if t0 < trigger <= t1:
                    return True
        return False

    def _battery_low(self) -> bool:
        return self.world.battery.level < self.scenario.battery.threshold

    # ------------------------------------------------------------- handlers

    def _on_ignore(self, **kwargs):
        pass

    def _estimate_round_drain(self) -> float:
        """Battery fraction a full round needs, from trajectory lengths."""
        path_m = 0.0
        for node in self.schedule.round_order:
            path_m += trajectory_length(self.scenario.patient(node).trajectory)
        path_m *= 2.0  # dock return retraces the concatenated path
        cruise = 1.74  # m/s at nominal wheel speed
        service_s = len(self.schedule.round_order) * (
            self.scenario.checkup_dwell_s + self.scenario.sensing.measure_duration_s + 5.0
        )
        round_s = path_m / cruise + service_s
        return round_s / (self.scenario.battery.capacity_hours * 3600.0)

    def _on_start_round(self, **kwargs):
        if self._battery_low() or (
            self.world.battery.level
            < self.scenario.battery.threshold + self._estimate_round_drain()
        ):
            self._on_inhibit_round()
            return
        self.round_plan = list(self.schedule.round_order)
        self.round_active = True
        self.round_report = RoundReport(started_at=self.t)
        self.visited = [Waypoint(*self.scenario.room.dock)]
        self.emit("mode", mode="round_started", purpose="routine")
        self._next_leg()

    def _on_inhibit_round(self, **kwargs):
        self.emit(
            "alert",
            reason="battery-low",
            detail=f"level {self.world.battery.level:.2f} below threshold",
        )

    def _on_execute_command(self, **kwargs):
        command = self._pop_command()
        if command is None:
            return
        self._run_command(command)

    def _on_preempt_if_priority(self, **kwargs):
        if not self.queue or self.queue[0].kind not in PRIORITY_KINDS:
            return  # non-priority commands wait for a service boundary
        command = self._pop_command()
        if self.mode.state == StateKind.NAVIGATING and self.round_active and \
                self.mode.purpose == "routine" and self.mode.node:
            # The preempted leg's node resumes first.
            self.round_plan.insert(0, self.mode.node)
            self._leg_timing = None
        self._run_command(command)

    def _on_defer_to_boundary(self, **kwargs):
        pass  # atomic phase; the queue is polled again at the boundary

    def _on_reject_command(self, **kwargs):
        command = self._pop_command()
        if command is not None:
            self.emit("ack", cmd_id=command.id, status="rejected",
                      reason="controller faulted")

    def _run_instant(self, command: Command):
        if command.kind == "camera_pan":
            self.camera_pan_deg = float(command.degrees)
            self.world.robot.camera_pan_deg = self.camera_pan_deg
            self.emit("mode", mode="camera_pan", cmd_id=command.id,
                      camera_deg=self.camera_pan_deg)
        elif command.kind == "set_schedule":
            self.schedule = replace(self.schedule, checkup_times=command.time_of_day)
            self.emit("mode", mode="schedule_set", cmd_id=command.id)

    def _run_command(self, command: Command):
        if command.kind in INSTANT_KINDS:
            self._run_instant(command)
            return
        if command.kind == "return_to_dock":
            if self.mode.state == StateKind.DOCKED:
                self.emit("mode", mode="docked", purpose="routine", cmd_id=command.id)
                return
            self._abort_remaining("return-to-dock command")
            self._begin_return()
            return
        if command.kind == "priority_checkup":
            self._begin_direct_leg(command.node, purpose="supervisory", command=command)
            return
        if command.kind == "manual_dispense":
            self._begin_direct_leg(command.node, purpose="supervisory", command=command)
            return
        if command.kind == "fluid_supply":
            self._begin_direct_leg(command.node, purpose="supervisory", command=command)
            return

    # ------------------------------------------------------------ navigation

    def _desk_waypoint(self, node: str) -> Waypoint:
        traj = self.scenario.patient(node).trajectory
        return traj.waypoints[-1]

    def _begin_leg(self, node: str):
        traj = self.scenario.patient(node).trajectory
        self.follower = TrajectoryFollower(traj)
        self._leg_timing = NodeTiming(node=node, leg_start=self.t)
        self._set_mode(StateKind.NAVIGATING, node=node, purpose="routine")

    def _begin_direct_leg(self, node: str, purpose: str, command: Command):
        waypoint = self._desk_waypoint(node)
        traj = Trajectory(node_id=node, waypoints=(waypoint,))
        self.follower = TrajectoryFollower(traj)
        self._set_mode(StateKind.NAVIGATING, node=node, purpose=purpose, command=command)

    def _begin_return(self):
        dock = Waypoint(*self.scenario.room.dock)
        if len(self.visited) > 1:
            inverted = invert_trajectory(
                Trajectory(node_id="B01", waypoints=tuple(self.visited))
            )
            # Re-dock in the canonical pose rather than the flipped heading.
            waypoints = inverted.waypoints[:-1] + (dock,)
            return_traj = Trajectory(node_id="B01", waypoints=waypoints)
        else:
            return_traj = Trajectory(node_id="B01", waypoints=(dock,))
        self.follower = TrajectoryFollower(return_traj)
        self._set_mode(StateKind.RETURNING)

    def _next_leg(self):
        if self.round_active and self._battery_low():
            self._on_abort_round()
            return
        if self.queue:
            command = self._pop_command()
            self._run_command(command)
            return
        if self.round_plan:
            self._begin_leg(self.round_plan.pop(0))
            return
        if self.round_active:
            self._begin_return()
            return
        self._begin_return()

    def _on_follow_leg(self, dt: float = 0.02, **kwargs):
        if self.follower is None:
            return
        try:
            out = self.follower.step(self.world.robot.pose[:3], dt)
        except NavigationTimeoutError:
            self.world.robot.halt()
            self._dispatch(Event.NAV_TIMEOUT)
            return
        self.world.robot.set_setpoints(out.left_rpm, out.right_rpm)
        if out.arrived:
            self.world.robot.halt()
            self._dispatch(Event.ARRIVED)

    def _on_skip_node(self, **kwargs):
        node = self.mode.node
        self.emit("alert", patient=node, reason="navigation-timeout",
                  detail=f"skipping {node}")
        if self.round_report is not None and self._leg_timing is not None:
            self._leg_timing.skipped = True
            self.round_report.timings.append(self._leg_timing)
            self.round_report.alerts += 1
        self._leg_timing = None
        command = self.mode.active_command
        if command is not None:
            self.emit("ack", cmd_id=command.id, status="failed",
                      reason="navigation-timeout")
        self._next_leg()

    def _on_fault(self, **kwargs):
        self.world.robot.halt()
        self.emit("alert", reason="fault", detail="stuck while returning to dock")
        self._set_mode(StateKind.FAULT)

    def _on_abort_round(self, **kwargs):
        self.emit("alert", reason="battery-low",
                  detail="aborting round, returning to dock")
        self._abort_remaining("battery-low")
        self._begin_return()

    def _abort_remaining(self, reason: str):
        if self.mode.state == StateKind.NAVIGATING and self.mode.purpose == "routine" \
                and self.mode.node and self._leg_timing is not None:
            self.round_plan.insert(0, self.mode.node)
            self._leg_timing = None
        for node in self.round_plan:
            self.emit("alert", patient=node, reason="node-skipped", detail=reason)
            if self.round_report is not None:
                self.round_report.timings.append(
                    NodeTiming(node=node, leg_start=self.t, skipped=True)
                )
                self.round_report.alerts += 1
        self.round_plan = []

    # ------------------------------------------------------------- servicing

    def _on_begin_service(self, **kwargs):
        node = self.mode.node
        if self.follower is not None:
            self.visited.extend(self.follower.traj.waypoints)
        self.follower = None
        if self._leg_timing is not None:
            self._leg_timing.arrived = self.t
        command = self.mode.active_command
        if command is not None and command.kind in ("manual_dispense", "fluid_supply"):
            if command.kind == "manual_dispense":
                profile = command.profile
            else:
                profile = ActuationProfile(pump_volume=command.liters)
            self._start_dispense(node, profile, mode="supervisory", command=command)
            return
        purpose = "supervisory" if command is not None else "routine"
        dwell = self.scenario.checkup_dwell_s if purpose == "routine" else 0.0
        self._measure_end = self.t + dwell + self.scenario.sensing.measure_duration_s
        self._set_mode(StateKind.MEASURING, node=node, purpose=purpose, command=command)

    def _on_await_measurement(self, **kwargs):
        if self.t + 1e-9 >= self._measure_end:
            self._dispatch(Event.MEASURE_COMPLETE)

    def _on_run_careplan(self, **kwargs):
        node = self.mode.node
        command = self.mode.active_command
        purpose = self.mode.purpose
        vitals = self.world.measure_patient(node)
        state = classify(vitals, self.thresholds)
        self.log.append_health(node, vitals, state)
        self.emit(
            "vitals", patient=node,
            hr=round(vitals.heart_rate, 3), spo2=round(vitals.spo2, 3),
            temp_f=round(vitals.temp_f, 3), flags=state.label(), purpose=purpose,
        )

        if purpose == "supervisory":
            # Priority checkup: measure and display only, then reset.
            if command is not None:
                self.emit("ack", cmd_id=command.id, status="completed")
            self._complete_node()
            return

        fluid_due = (self.t - self._fluid_last[node]) >= self.scenario.dosing.fluid_interval_s
        try:
            plan = prescribe(state, self.knowledge_base, fluid_due=fluid_due)
        except UnknownHealthStateError as exc:
            self.emit("alert", patient=node, reason="unknown-state", detail=str(exc))
            if self.round_report is not None:
                self.round_report.alerts += 1
            self._complete_node()
            return
        profile = actuation_profile(plan, self.scenario.dosing)
        if profile.is_empty():
            self._complete_node()
            return
        if Action.FLUID in plan.actions:
            self._fluid_last[node] = self.t
        self._start_dispense(node, profile, mode="routine", command=None)

    def _start_dispense(self, node: str, profile: ActuationProfile, mode: str,
                        command: Command | None):
        outcome = self.dispenser.dispense(profile, node, self.t, mode)
        arm_time = sum(
            self._arm_transfer_s[cylinder] for cylinder in profile.valve_open
        )
        self._pending_dispense = (node, profile, outcome, command)
        self._dispense_end = self.t + outcome.duration + arm_time
        self._set_mode(StateKind.DISPENSING, node=node, purpose=mode, command=command)

    def _on_await_dispense(self, **kwargs):
        if self.t + 1e-9 >= self._dispense_end:
            self._dispatch(Event.DISPENSE_COMPLETE)

    def _on_finish_dispense(self, **kwargs):
        node, profile, outcome, command = self._pending_dispense
        self._pending_dispense = None
        for record in outcome.records:
            self.log.append_medication(record)
            self.emit(
                "med", patient=node, cylinder=record.cylinder,
                medicine=record.medicine, duration=record.duration, mode=record.mode,
            )
            self.world.administer(node, Action(record.medicine))
            if self.round_report is not None and record.mode == "routine":
                self.round_report.dispenses += 1
        if profile.pump_volume > 0:
            self.emit("med", patient=node, medicine="fluid",
                      volume_l=profile.pump_volume,
                      duration=round(self.scenario.dosing.pump_runtime_s(profile.pump_volume), 3),
                      mode=self.mode.purpose)
            self.world.administer(node, Action.FLUID)
        if profile.mask_flag:
            self.emit("med", patient=node, medicine="oxygen_mask", duration=2.0,
                      mode=self.mode.purpose)
            self.world.administer(node, Action.OXYGEN_MASK)
        for alert in outcome.alerts:
            self.emit("alert", patient=node, reason=alert.reason, detail=alert.detail)
            if self.round_report is not None:
                self.round_report.alerts += 1
        if command is not None:
            self.emit("ack", cmd_id=command.id, status="completed")
        self._complete_node()

    def _complete_node(self):
        if self.mode.purpose == "routine" and self._leg_timing is not None:
            self._leg_timing.completed = self.t
            if self.round_report is not None:
                self.round_report.timings.append(self._leg_timing)
            self._leg_timing = None
        self._next_leg()

    def _on_dock(self, **kwargs):
        self.follower = None
        self.world.robot.halt()
        if self.round_active and self.round_report is not None:
            self.round_report.completed_at = self.t
            self.completed_rounds.append(self.round_report)
            self.emit(
                "mode", mode="round_completed",
                checkups=len([t for t in self.round_report.timings if not t.skipped]),
                dispenses=self.round_report.dispenses,
            )
            self.round_report = None
        self.round_active = False
        self.visited = []
        self._set_mode(StateKind.DOCKED)
