"""Scenario file loading and validation.

A scenario is a versioned YAML document describing the ward geometry, the
patients (desk poses, approach trajectories, latent-vitals processes,
medication responses), the robot and sensing parameters, the care tables,
the telemetry settings, the schedule, and the master seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import yaml

from .careplan import DosingConfig, Flag, Action, Thresholds, load_knowledge_base
from .motion import NODE_ID_PATTERN, DrivePlant, PidGains, Trajectory, Waypoint

SCENARIO_VERSION = 1


class ScenarioError(ValueError):
    """Scenario file is invalid; message names the offending field."""


@dataclass(frozen=True)
class VitalProcess:
    """Clamped mean-reverting latent process parameters for one vital."""

    mean: float
    revert_rate: float = 0.05   # 1/s pull toward the (possibly shifted) mean
    noise: float = 0.0          # diffusion scale per sqrt(s)
    minimum: float = -math.inf
    maximum: float = math.inf

    def __post_init__(self):
        if self.revert_rate < 0 or self.noise < 0:
            raise ScenarioError("vital process rates must be non-negative")
        if not self.minimum <= self.mean <= self.maximum:
            raise ScenarioError("vital mean outside its clamp bounds")


@dataclass(frozen=True)
class MedResponse:
    """Additive exponential pulse applied to a vital's latent mean."""

    action: Action
    vital: str       # heart_rate | spo2 | temp_f
    delta: float
    onset_s: float
    decay_s: float

    def __post_init__(self):
        if self.vital not in ("heart_rate", "spo2", "temp_f"):
            raise ScenarioError(f"unknown vital {self.vital!r}")
        if self.decay_s <= 0:
            raise ScenarioError("medication response decay must be positive")
        if self.onset_s < 0:
            raise ScenarioError("medication onset delay must be non-negative")


@dataclass(frozen=True)
class PatientSpec:
    node_id: str
    desk: tuple[float, float, float]     # x, y, facing heading
    trajectory: Trajectory               # leg from the previous round stop
    vitals: Mapping[str, VitalProcess]
    med_responses: tuple[MedResponse, ...] = ()

    def __post_init__(self):
        if not NODE_ID_PATTERN.match(self.node_id):
            raise ScenarioError(f"patient id {self.node_id!r} not in B01..B08")
        for key in ("heart_rate", "spo2", "temp_f"):
            if key not in self.vitals:
                raise ScenarioError(f"{self.node_id}: missing vital process {key!r}")


@dataclass(frozen=True)
class RoomSpec:
    room_id: str
    bounds: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    dock: tuple[float, float, float]
    outlets: tuple[tuple[float, float, float], ...]
    desk_offset: tuple[float, float, float]

    def __post_init__(self):
        xmin, ymin, xmax, ymax = self.bounds
        if xmin >= xmax or ymin >= ymax:
            raise ScenarioError("room bounds degenerate")
        if not (xmin <= self.dock[0] <= xmax and ymin <= self.dock[1] <= ymax):
            raise ScenarioError("dock outside room bounds")
        if len(self.outlets) != 3:
            raise ScenarioError("expected exactly 3 medicine outlets")


@dataclass(frozen=True)
class ScheduleSpec:
    checkup_times: tuple[float, ...]
    round_order: tuple[str, ...]
    day_length_s: float = 24 * 3600.0

    def __post_init__(self):
        if not self.checkup_times:
            raise ScenarioError("schedule needs at least one checkup time")
        if list(self.checkup_times) != sorted(self.checkup_times):
            raise ScenarioError("checkup times must be strictly increasing")
        if len(set(self.checkup_times)) != len(self.checkup_times):
            raise ScenarioError("checkup times must be strictly increasing")
        if not self.round_order:
            raise ScenarioError("round order must be non-empty")


@dataclass(frozen=True)
class SensingSpec:
    noise_level: float = 0.02
    ppg_sample_rate: float = 100.0
    measure_duration_s: float = 5.0

    def __post_init__(self):
        if not 0 <= self.noise_level < 0.2:
            raise ScenarioError("sensing noise level outside [0, 0.2)")


@dataclass(frozen=True)
class BatterySpec:
    capacity_hours: float = 1.38
    start_level: float = 1.0
    threshold: float = 0.2
    idle_drain_factor: float = 0.1   # idle drain relative to running drain
    charge_rate: float = 1.0 / 3600.0  # level per second while docked

    def __post_init__(self):
        if not 0 < self.capacity_hours:
            raise ScenarioError("battery capacity must be positive")
        if not 0 <= self.start_level <= 1:
            raise ScenarioError("battery level in [0, 1]")


@dataclass(frozen=True)
class TelemetrySpec:
    update_period_ms: float = 1100.0
    latency_min_ms: float = 500.0
    latency_max_ms: float = 1200.0
    serial_delay_ms: float = 36.0
    port: int = 7071
    pose_interval_s: float = 0.5


@dataclass(frozen=True)
class Scenario:
    version: int
    room: RoomSpec
    schedule: ScheduleSpec
    patients: tuple[PatientSpec, ...]
    gains: PidGains
    plant: DrivePlant
    battery: BatterySpec
    sensing: SensingSpec
    thresholds: Thresholds
    knowledge_base: Mapping[Flag, frozenset[Action]]
    dosing: DosingConfig
    telemetry: TelemetrySpec
    inventory: Mapping[int, int]
    seed: int
    checkup_dwell_s: float = 15.0

    def __post_init__(self):
        if self.version != SCENARIO_VERSION:
            raise ScenarioError(
                f"unsupported scenario version {self.version} (expected {SCENARIO_VERSION})"
            )
        if len(self.patients) > 8:
            raise ScenarioError("at most 8 patient nodes per ward")
        ids = [p.node_id for p in self.patients]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate patient node ids")
        known = set(ids)
        for node in self.schedule.round_order:
            if node not in known:
                raise ScenarioError(f"round order references unknown node {node!r}")

    def patient(self, node_id: str) -> PatientSpec:
        for p in self.patients:
            if p.node_id == node_id:
                return p
        raise KeyError(node_id)


def _pose(data, context) -> tuple[float, float, float]:
    try:
        return (float(data["x"]), float(data["y"]), float(data.get("heading", 0.0)))
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"{context}: bad pose entry ({exc})") from None


def _vital_process(data, context) -> VitalProcess:
    try:
        return VitalProcess(
            mean=float(data["mean"]),
            revert_rate=float(data.get("revert_rate", 0.05)),
            noise=float(data.get("noise", 0.0)),
            minimum=float(data.get("min", -math.inf)),
            maximum=float(data.get("max", math.inf)),
        )
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"{context}: bad vital process ({exc})") from None


def parse_scenario(doc: Mapping) -> Scenario:
    if not isinstance(doc, Mapping):
        raise ScenarioError("scenario must be a mapping")
    try:
        version = int(doc["version"])
    except KeyError:
        raise ScenarioError("missing version header") from None

    room_doc = doc.get("room")
    if not room_doc:
        raise ScenarioError("missing room section")
    room = RoomSpec(
        room_id=str(room_doc.get("id", "R01")),
        bounds=tuple(float(v) for v in room_doc.get("bounds", (0, 0, 10, 10))),
        dock=_pose(room_doc.get("dock", {}), "room.dock"),
        outlets=tuple(
            (float(o["x"]), float(o["y"]), float(o.get("z", 0.0)))
            for o in room_doc.get("outlets", ())
        ),
        desk_offset=tuple(
            float(room_doc.get("desk_offset", {}).get(k, d))
            for k, d in (("x", 0.35), ("y", 0.1), ("z", 0.0))
        ),
    )

    schedule_doc = doc.get("schedule", {})
    schedule = ScheduleSpec(
        checkup_times=tuple(float(t) for t in schedule_doc.get("checkup_times", ())),
        round_order=tuple(str(n) for n in schedule_doc.get("round_order", ())),
        day_length_s=float(schedule_doc.get("day_length_s", 24 * 3600.0)),
    )

    patients = []
    for pdoc in doc.get("patients", ()):
        node_id = str(pdoc.get("id", "?"))
        context = f"patients[{node_id}]"
        waypoints = []
        for wdoc in pdoc.get("trajectory", ()):
            waypoints.append(
                Waypoint(
                    x=float(wdoc["x"]),
                    y=float(wdoc["y"]),
                    heading=float(wdoc.get("heading", 0.0)),
                    dwell=float(wdoc.get("dwell", 0.0)),
                )
            )
        if not waypoints:
            raise ScenarioError(f"{context}: missing trajectory")
        vitals_doc = pdoc.get("vitals", {})
        vitals = {
            key: _vital_process(vitals_doc.get(key, {}), f"{context}.vitals.{key}")
            for key in ("heart_rate", "spo2", "temp_f")
        }
        responses = []
        for rdoc in pdoc.get("med_response", ()):
            responses.append(
                MedResponse(
                    action=Action(str(rdoc["action"])),
                    vital=str(rdoc["vital"]),
                    delta=float(rdoc["delta"]),
                    onset_s=float(rdoc.get("onset_s", 30.0)),
                    decay_s=float(rdoc.get("decay_s", 600.0)),
                )
            )
        patients.append(
            PatientSpec(
                node_id=node_id,
                desk=_pose(pdoc.get("desk", {}), f"{context}.desk"),
                trajectory=Trajectory(node_id=node_id, waypoints=tuple(waypoints)),
                vitals=vitals,
                med_responses=tuple(responses),
            )
        )

    robot_doc = doc.get("robot", {})
    gains_doc = robot_doc.get("gains", {})
    gains = PidGains(
        kp=float(gains_doc.get("kp", 0.8)),
        ki=float(gains_doc.get("ki", 0.5)),
        kd=float(gains_doc.get("kd", 0.05)),
        ts=float(gains_doc.get("ts", 0.02)),
    )
    plant = DrivePlant(
        wheel_radius=float(robot_doc.get("wheel_radius", 0.0426)),
        max_motor_rpm=float(robot_doc.get("max_motor_rpm", 390.0)),
        motor_time_constant=float(robot_doc.get("motor_time_constant", 0.5)),
        pwm_to_rpm_gain=float(robot_doc.get("pwm_to_rpm_gain", 7.0)),
        track_width=float(robot_doc.get("track_width", 0.30)),
    )
    battery_doc = robot_doc.get("battery", {})
    battery = BatterySpec(
        capacity_hours=float(battery_doc.get("capacity_hours", 1.38)),
        start_level=float(battery_doc.get("start_level", 1.0)),
        threshold=float(battery_doc.get("threshold", 0.2)),
        idle_drain_factor=float(battery_doc.get("idle_drain_factor", 0.1)),
        charge_rate=float(battery_doc.get("charge_rate", 1.0 / 3600.0)),
    )

    sensing_doc = doc.get("sensing", {})
    sensing = SensingSpec(
        noise_level=float(sensing_doc.get("noise_level", 0.02)),
        ppg_sample_rate=float(sensing_doc.get("ppg_sample_rate", 100.0)),
        measure_duration_s=float(sensing_doc.get("measure_duration_s", 5.0)),
    )

    thresholds = Thresholds.from_mapping(doc.get("thresholds", {}))
    kb = load_knowledge_base(
        doc.get(
            "knowledge_base",
            {
                "fever": ["M01"],
                "tachycardia": ["M02"],
                "bradycardia": ["M02"],
                "hypoxia": ["M03", "oxygen_mask"],
                "normal": ["none"],
            },
        )
    )
    dosing = DosingConfig.from_mapping(doc.get("dosing", {}))

    telemetry_doc = doc.get("telemetry", {})
    telemetry = TelemetrySpec(
        update_period_ms=float(telemetry_doc.get("update_period_ms", 1100.0)),
        latency_min_ms=float(telemetry_doc.get("latency_min_ms", 500.0)),
        latency_max_ms=float(telemetry_doc.get("latency_max_ms", 1200.0)),
        serial_delay_ms=float(telemetry_doc.get("serial_delay_ms", 36.0)),
        port=int(telemetry_doc.get("port", 7071)),
        pose_interval_s=float(telemetry_doc.get("pose_interval_s", 0.5)),
    )

    inventory = {
        int(k): int(v) for k, v in doc.get("inventory", {1: 50, 2: 50, 3: 50}).items()
    }

    return Scenario(
        version=version,
        room=room,
        schedule=schedule,
        patients=tuple(patients),
        gains=gains,
        plant=plant,
        battery=battery,
        sensing=sensing,
        thresholds=thresholds,
        knowledge_base=kb,
        dosing=dosing,
        telemetry=telemetry,
        inventory=inventory,
        seed=int(doc.get("seed", 0)),
        checkup_dwell_s=float(doc.get("checkup_dwell_s", 15.0)),
    )


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f" (line {mark.line + 1})" if mark else ""
        raise ScenarioError(f"{path}: YAML parse error{line}: {exc}") from None
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    try:
        return parse_scenario(doc)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def default_scenario_path() -> str:
    import importlib.resources

    return str(importlib.resources.files("robonurse") / "data" / "default_scenario.yaml")
