"""Deterministic ward world: latent patient vitals (clamped mean-reverting
processes with medication-response pulses), the robot body, battery, and
obstacle geometry, stepped at a fixed timestep from a single master seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import sensors
from .careplan import Action
from .motion import WheelDrive, body_speed
from .scenario import PatientSpec, Scenario

MEASURE_RANGE_M = 0.3


class MeasurementRangeError(RuntimeError):
    """Robot is too far from the patient's desk to take a measurement."""


@dataclass
class ActiveEffect:
    vital: str
    delta: float
    start_time: float   # administration time
    onset_s: float
    decay_s: float

    def value(self, t: float) -> float:
        elapsed = t - self.start_time - self.onset_s
        if elapsed < 0:
            return 0.0
        return self.delta * math.exp(-elapsed / self.decay_s)


class LatentVital:
    """Clamped mean-reverting walk around a (medication-shifted) mean."""

    def __init__(self, process, rng: np.random.Generator):
        self.process = process
        self.rng = rng
        self.value = process.mean
        self.effects: list[ActiveEffect] = []

    def shifted_mean(self, t: float) -> float:
        return self.process.mean + sum(e.value(t) for e in self.effects)

    def step(self, t: float, dt: float):
        p = self.process
        drift = p.revert_rate * (self.shifted_mean(t) - self.value) * dt
        noise = p.noise * math.sqrt(dt) * float(self.rng.standard_normal())
        self.value = min(max(self.value + drift + noise, p.minimum), p.maximum)


class Patient:
    def __init__(self, spec: PatientSpec, seed: int):
        self.spec = spec
        self.measure_count = 0
        base = np.random.SeedSequence((seed, int(spec.node_id[1:])))
        streams = base.spawn(3)
        self.vitals = {
            name: LatentVital(spec.vitals[name], np.random.default_rng(stream))
            for name, stream in zip(("heart_rate", "spo2", "temp_f"), streams)
        }

    def step(self, t: float, dt: float):
        for vital in self.vitals.values():
            vital.step(t, dt)

    def administer(self, action: Action, t: float):
        for response in self.spec.med_responses:
            if response.action == action:
                self.vitals[response.vital].effects.append(
                    ActiveEffect(
                        vital=response.vital,
                        delta=response.delta,
                        start_time=t,
                        onset_s=response.onset_s,
                        decay_s=response.decay_s,
                    )
                )

    def truth(self, t: float) -> sensors.VitalSigns:
        return sensors.VitalSigns(
            heart_rate=self.vitals["heart_rate"].value,
            spo2=self.vitals["spo2"].value,
            temp_f=self.vitals["temp_f"].value,
            timestamp=t,
        )


@dataclass
class Obstacle:
    segment: tuple[float, float, float, float]  # x1, y1, x2, y2
    expires_at: float


def _orientation(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_intersect(a, b) -> bool:
    """Proper or touching intersection of two closed segments."""
    ax1, ay1, ax2, ay2 = a
    bx1, by1, bx2, by2 = b
    d1 = _orientation(bx1, by1, bx2, by2, ax1, ay1)
    d2 = _orientation(bx1, by1, bx2, by2, ax2, ay2)
    d3 = _orientation(ax1, ay1, ax2, ay2, bx1, by1)
    d4 = _orientation(ax1, ay1, ax2, ay2, bx2, by2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True

    def on_segment(px, py, qx, qy, rx, ry):
        return min(px, qx) <= rx <= max(px, qx) and min(py, qy) <= ry <= max(py, qy)

    if d1 == 0 and on_segment(bx1, by1, bx2, by2, ax1, ay1):
        return True
    if d2 == 0 and on_segment(bx1, by1, bx2, by2, ax2, ay2):
        return True
    if d3 == 0 and on_segment(ax1, ay1, ax2, ay2, bx1, by1):
        return True
    if d4 == 0 and on_segment(ax1, ay1, ax2, ay2, bx2, by2):
        return True
    return False


class Robot:
    """Differential-drive body: two PID-regulated wheels plus pose state."""

    def __init__(self, scenario: Scenario):
        self.plant = scenario.plant
        self.left = WheelDrive(scenario.gains, scenario.plant)
        self.right = WheelDrive(scenario.gains, scenario.plant)
        self.pose = scenario.room.dock
        self.setpoints = (0.0, 0.0)
        self.camera_pan_deg = 0.0
        self.running = False

    def set_setpoints(self, left_rpm: float, right_rpm: float):
        self.setpoints = (left_rpm, right_rpm)

    def halt(self):
        """Commanded stop: zero setpoints and brake both drives."""
        self.setpoints = (0.0, 0.0)
        self.left.reset()
        self.right.reset()

    def step(self, dt: float, blocked_fn) -> None:
        left_rpm = self.left.step(self.setpoints[0], dt)
        right_rpm = self.right.step(self.setpoints[1], dt)
        v, omega = body_speed(self.plant, left_rpm, right_rpm)
        x, y, heading = self.pose
        nx = x + v * math.cos(heading) * dt
        ny = y + v * math.sin(heading) * dt
        heading = math.atan2(math.sin(heading + omega * dt), math.cos(heading + omega * dt))
        if blocked_fn(x, y, nx, ny):
            nx, ny = x, y  # wall or obstacle stops translation, not rotation
        self.pose = (nx, ny, heading)


class Battery:
    def __init__(self, spec):
        self.spec = spec
        self.level = spec.start_level
        self._running_drain = 1.0 / (spec.capacity_hours * 3600.0)

    def step(self, dt: float, running: bool, docked: bool):
        if docked:
            self.level = min(1.0, self.level + self.spec.charge_rate * dt)
            return
        rate = self._running_drain if running else self._running_drain * self.spec.idle_drain_factor
        self.level = max(0.0, self.level - rate * dt)


class World:
    """Single-threaded fixed-timestep ward simulation."""

    def __init__(self, scenario: Scenario, dt: float = 0.02):
        self.scenario = scenario
        self.dt = dt
        self.t = 0.0
        self.patients = {
            spec.node_id: Patient(spec, scenario.seed) for spec in scenario.patients
        }
        self.robot = Robot(scenario)
        self.battery = Battery(scenario.battery)
        self.obstacles: list[Obstacle] = []
        xmin, ymin, xmax, ymax = scenario.room.bounds
        self._walls = (
            (xmin, ymin, xmax, ymin),
            (xmax, ymin, xmax, ymax),
            (xmax, ymax, xmin, ymax),
            (xmin, ymax, xmin, ymin),
        )

    def blocked(self, x, y, nx, ny) -> bool:
        if x == nx and y == ny:
            return False
        move = (x, y, nx, ny)
        xmin, ymin, xmax, ymax = self.scenario.room.bounds
        if not (xmin <= nx <= xmax and ymin <= ny <= ymax):
            return True
        for obstacle in self.obstacles:
            if segments_intersect(move, obstacle.segment):
                return True
        return False

    def step(self, dt: float | None = None, docked: bool = False):
        dt = self.dt if dt is None else dt
        if dt == 0.0:
            return
        for node_id in sorted(self.patients):
            self.patients[node_id].step(self.t, dt)
        self.robot.step(dt, self.blocked)
        self.battery.step(dt, running=self.robot.running, docked=docked)
        self.obstacles = [o for o in self.obstacles if o.expires_at > self.t]
        self.t += dt

    def inject_obstacle(self, segment, duration: float):
        x1, y1, x2, y2 = segment
        xmin, ymin, xmax, ymax = self.scenario.room.bounds
        for px, py in ((x1, y1), (x2, y2)):
            if not (xmin <= px <= xmax and ymin <= py <= ymax):
                raise ValueError("obstacle endpoint outside room")
        self.obstacles.append(
            Obstacle(segment=tuple(segment), expires_at=self.t + duration)
        )

    def distance_to_desk(self, node_id: str) -> float:
        desk = self.patients[node_id].spec.desk
        x, y, _ = self.robot.pose
        return math.hypot(desk[0] - x, desk[1] - y)

    def measure_patient(self, node_id: str) -> sensors.VitalSigns:
        """Synthesize raw signals from latent truth and run the conversion
        pipeline; the robot must be within measurement range of the desk."""
        if self.distance_to_desk(node_id) > MEASURE_RANGE_M + 1e-9:
            raise MeasurementRangeError(
                f"robot {self.distance_to_desk(node_id):.2f} m from {node_id}, "
                f"measurement range is {MEASURE_RANGE_M} m"
            )
        patient = self.patients[node_id]
        truth = patient.truth(self.t)
        noise = self.scenario.sensing.noise_level
        seed_seq = np.random.SeedSequence(
            (self.scenario.seed, int(node_id[1:]), patient.measure_count, 7)
        )
        seed = int(seed_seq.generate_state(1)[0])
        patient.measure_count += 1

        capture = sensors.synthesize_ppg(
            truth,
            noise_level=noise,
            seed=seed,
            duration_s=self.scenario.sensing.measure_duration_s,
            sample_rate=self.scenario.sensing.ppg_sample_rate,
        )
        heart_rate, spo2 = sensors.measure_ppg(capture)

        v_adc = sensors.synthesize_thermistor(truth.temp_f)
        jitter_rng = np.random.default_rng(seed + 1)
        v_adc = min(1022.5, max(0.5, v_adc + 10.0 * noise * float(jitter_rng.uniform(-1, 1))))
        temp_f = sensors.temperature_from_adc(v_adc)

        return sensors.VitalSigns(
            heart_rate=heart_rate, spo2=spo2, temp_f=temp_f, timestamp=self.t
        )

    def administer(self, node_id: str, action: Action):
        self.patients[node_id].administer(action, self.t)

    def state_hash(self) -> int:
        """Deterministic digest of the mutable world state (test hook)."""
        parts = [round(self.t, 9), tuple(round(v, 12) for v in self.robot.pose),
                 round(self.battery.level, 12)]
        for node_id in sorted(self.patients):
            patient = self.patients[node_id]
            parts.append(
                tuple(round(patient.vitals[k].value, 12) for k in ("heart_rate", "spo2", "temp_f"))
            )
        return hash(tuple(map(str, parts)))
