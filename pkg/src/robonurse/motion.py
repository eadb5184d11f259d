"""Differential-drive base: wheel-speed PID, first-order drive plant,
trajectory playback with turn-then-drive pursuit, and trajectory inversion.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import Sequence

NODE_ID_PATTERN = re.compile(r"^B0[1-8]$")

ARRIVE_POS_TOL = 0.05      # m
ARRIVE_HEADING_TOL = 0.1   # rad
NO_PROGRESS_TIMEOUT = 30.0  # s
PROGRESS_EPSILON = 0.01    # m improvement that counts as progress

TURN_THRESHOLD = 0.15      # rad; spin in place above this heading error
TURN_RPM = 120.0
CRUISE_RPM = 390.0
SLOW_RADIUS = 0.5          # m; taper speed approaching a waypoint
HEADING_GAIN_RPM = 220.0   # differential correction per rad of heading error


class ControllerFaultError(ValueError):
    """Non-finite input reached the wheel controller."""


class NavigationTimeoutError(RuntimeError):
    """No progress toward the current waypoint for the timeout window."""


@dataclass(frozen=True)
class PidGains:
    kp: float = 0.8
    ki: float = 0.5
    kd: float = 0.05
    ts: float = 0.02
    output_min: float = 0.0
    output_max: float = 255.0

    def __post_init__(self):
        if self.ts <= 0:
            raise ValueError("sampling period must be positive")
        if self.output_min >= self.output_max:
            raise ValueError("output bounds inverted")
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("gains must be non-negative")


@dataclass(frozen=True)
class WheelState:
    speed_rpm: float = 0.0
    pwm: float = 0.0
    error: float = 0.0
    error_integral: float = 0.0
    last_error: float = 0.0


@dataclass(frozen=True)
class DrivePlant:
    """First-order motor model. Gain and time constant are tuned so the
    default PID gains settle a 300 RPM step within 2 s at under 2% error."""

    wheel_radius: float = 0.0426      # m; 390 RPM <-> 1.74 m/s
    max_motor_rpm: float = 390.0
    motor_time_constant: float = 0.5   # s
    pwm_to_rpm_gain: float = 7.0       # RPM per duty unit before the cap
    track_width: float = 0.30          # m

    def __post_init__(self):
        for v in (
            self.wheel_radius,
            self.max_motor_rpm,
            self.motor_time_constant,
            self.pwm_to_rpm_gain,
            self.track_width,
        ):
            if v <= 0:
                raise ValueError("plant parameters must be positive")


def pid_step(
    state: WheelState, setpoint: float, measured: float, gains: PidGains
) -> tuple[float, WheelState]:
    """One discrete PID update with conditional-integration anti-windup.

    output = kp*e + ki*sum(e*ts) + kd*(e - e_prev)/ts, clamped to the duty
    range; the integral keeps its previous value while the output saturates.
    """
    if not all(math.isfinite(v) for v in (setpoint, measured)):
        raise ControllerFaultError(f"non-finite controller input ({setpoint}, {measured})")
    e = setpoint - measured
    candidate_integral = state.error_integral + e * gains.ts
    derivative = (e - state.last_error) / gains.ts
    raw = gains.kp * e + gains.ki * candidate_integral + gains.kd * derivative
    pwm = min(max(raw, gains.output_min), gains.output_max)
    integral = candidate_integral if pwm == raw else state.error_integral
    new_state = WheelState(
        speed_rpm=measured,
        pwm=pwm,
        error=e,
        error_integral=integral,
        last_error=e,
    )
    return pwm, new_state


def plant_step(plant: DrivePlant, pwm: float, current_rpm: float, dt: float) -> float:
    """First-order lag toward gain*pwm, capped at the motor's maximum speed."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    target = min(plant.pwm_to_rpm_gain * pwm, plant.max_motor_rpm)
    alpha = 1.0 - math.exp(-dt / plant.motor_time_constant)
    return current_rpm + (target - current_rpm) * alpha


def body_speed(
    plant: DrivePlant, left_rpm: float, right_rpm: float
) -> tuple[float, float]:
    """Differential-drive mapping: (linear m/s, angular rad/s)."""
    if not all(math.isfinite(v) for v in (left_rpm, right_rpm)):
        raise ControllerFaultError("non-finite wheel speed")
    omega_l = left_rpm * 2.0 * math.pi / 60.0
    omega_r = right_rpm * 2.0 * math.pi / 60.0
    v = plant.wheel_radius * (omega_l + omega_r) / 2.0
    omega = plant.wheel_radius * (omega_r - omega_l) / plant.track_width
    return v, omega


class WheelDrive:
    """PID-regulated wheel: tracks a signed RPM setpoint.

    The PID acts on the speed magnitude (duty 0-255); the sign is an H-bridge
    direction flag. A direction flip brakes the motor state to zero first.
    """

    def __init__(self, gains: PidGains, plant: DrivePlant):
        self.gains = gains
        self.plant = plant
        self.state = WheelState()
        self.direction = 1.0
        self.magnitude_rpm = 0.0

    def reset(self):
        self.state = WheelState()
        self.direction = 1.0
        self.magnitude_rpm = 0.0

    def step(self, setpoint_rpm: float, dt: float) -> float:
        direction = math.copysign(1.0, setpoint_rpm) if setpoint_rpm != 0 else self.direction
        if direction != self.direction:
            self.direction = direction
            self.magnitude_rpm = 0.0
            self.state = WheelState()
        pwm, self.state = pid_step(
            self.state, abs(setpoint_rpm), self.magnitude_rpm, self.gains
        )
        self.magnitude_rpm = plant_step(self.plant, pwm, self.magnitude_rpm, dt)
        return self.direction * self.magnitude_rpm

    @property
    def rpm(self) -> float:
        return self.direction * self.magnitude_rpm


def _wrap(angle: float) -> float:
    return math.atan2(math.sin(angle), math.cos(angle))


@dataclass(frozen=True)
class Waypoint:
    x: float
    y: float
    heading: float = 0.0
    dwell: float = 0.0

    def __post_init__(self):
        if self.dwell < 0:
            raise ValueError("dwell must be non-negative")


@dataclass(frozen=True)
class Trajectory:
    node_id: str
    waypoints: tuple[Waypoint, ...]

    def __post_init__(self):
        if not self.waypoints:
            raise ValueError("trajectory needs at least one waypoint")
        if not NODE_ID_PATTERN.match(self.node_id):
            raise ValueError(f"node id {self.node_id!r} does not match B01..B08")


def invert_trajectory(traj: Trajectory) -> Trajectory:
    """Reverse the waypoints and rotate headings by pi; an involution."""
    flipped = tuple(
        replace(wp, heading=_wrap(wp.heading + math.pi))
        for wp in reversed(traj.waypoints)
    )
    return Trajectory(node_id=traj.node_id, waypoints=flipped)


@dataclass(frozen=True)
class FollowOutput:
    left_rpm: float
    right_rpm: float
    arrived: bool


class TrajectoryFollower:
    """Turn-then-drive waypoint pursuit with a no-progress watchdog.

    Call :meth:`step` each control period with the current pose; it returns
    signed wheel RPM setpoints and the arrival flag. Raises
    NavigationTimeoutError when the watchdog fires, after which the follower
    commands a halt.
    """

    def __init__(
        self,
        traj: Trajectory,
        arrive_pos_tol: float = ARRIVE_POS_TOL,
        arrive_heading_tol: float = ARRIVE_HEADING_TOL,
        timeout_s: float = NO_PROGRESS_TIMEOUT,
        cruise_rpm: float = CRUISE_RPM,
    ):
        self.traj = traj
        self.index = 0
        self.arrive_pos_tol = arrive_pos_tol
        self.arrive_heading_tol = arrive_heading_tol
        self.timeout_s = timeout_s
        self.cruise_rpm = cruise_rpm
        self.dwell_remaining = 0.0
        self.best_distance = math.inf
        self.stall_time = 0.0
        self.arrived = False
        self.halted = False

    def _advance(self):
        self.index += 1
        self.best_distance = math.inf
        self.stall_time = 0.0

    def step(self, pose: tuple[float, float, float], dt: float) -> FollowOutput:
        if self.arrived or self.halted:
            return FollowOutput(0.0, 0.0, self.arrived)
        if self.dwell_remaining > 0.0:
            self.dwell_remaining = max(0.0, self.dwell_remaining - dt)
            if self.dwell_remaining > 0.0:
                return FollowOutput(0.0, 0.0, False)
            if self.index >= len(self.traj.waypoints):
                self.arrived = True
                return FollowOutput(0.0, 0.0, True)

        x, y, heading = pose
        wp = self.traj.waypoints[self.index]
        dx, dy = wp.x - x, wp.y - y
        distance = math.hypot(dx, dy)

        if distance <= self.arrive_pos_tol:
            final = self.index == len(self.traj.waypoints) - 1
            heading_err = _wrap(wp.heading - heading)
            if final and abs(heading_err) > self.arrive_heading_tol:
                # Align to the commanded final heading before declaring arrival.
                turn = math.copysign(TURN_RPM, heading_err)
                self._note_progress(distance, dt)
                return FollowOutput(-turn, turn, False)
            self.dwell_remaining = wp.dwell
            self._advance()
            if self.dwell_remaining > 0.0:
                return FollowOutput(0.0, 0.0, False)
            if self.index >= len(self.traj.waypoints):
                self.arrived = True
                return FollowOutput(0.0, 0.0, True)
            return FollowOutput(0.0, 0.0, False)

        self._note_progress(distance, dt)

        bearing = math.atan2(dy, dx)
        heading_err = _wrap(bearing - heading)
        if abs(heading_err) > TURN_THRESHOLD:
            turn = math.copysign(TURN_RPM, heading_err)
            return FollowOutput(-turn, turn, False)
        base = self.cruise_rpm * min(1.0, distance / SLOW_RADIUS)
        correction = HEADING_GAIN_RPM * heading_err
        left = max(-self.cruise_rpm, min(self.cruise_rpm, base - correction))
        right = max(-self.cruise_rpm, min(self.cruise_rpm, base + correction))
        return FollowOutput(left, right, False)

    def _note_progress(self, distance: float, dt: float):
        if distance < self.best_distance - PROGRESS_EPSILON:
            self.best_distance = distance
            self.stall_time = 0.0
        else:
            self.stall_time += dt
            if self.stall_time >= self.timeout_s:
                self.halted = True
                raise NavigationTimeoutError(
                    f"no progress toward waypoint {self.index} of {self.traj.node_id} "
                    f"for {self.timeout_s} s"
                )


def trajectory_length(traj: Trajectory, start: tuple[float, float] | None = None) -> float:
    """Polyline length of a trajectory, optionally from a starting point."""
    points = [(wp.x, wp.y) for wp in traj.waypoints]
    if start is not None:
        points.insert(0, start)
    return sum(
        math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(points, points[1:])
    )
