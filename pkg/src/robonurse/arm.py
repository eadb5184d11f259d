"""3-link planar manipulator: DH kinematics, Jacobian, and inverse kinematics.

Two IK routes exist deliberately. ``ik_closed_form`` is a legacy
closed-form solver kept for reference; it mixes a prismatic-style d3 term
into the all-revolute chain, so its output is not FK-consistent with the DH
table. ``ik_dls`` is the damped-least-squares solver the controller uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

ARM_MAX_JOINT_RATE = 5.24  # rad/s
GRIP_DWELL_S = 0.3


class JointLimitError(ValueError):
    """Joint angles violate the configured limits."""


class SingularTargetError(ValueError):
    """Closed-form IK target lies on the undefined axis ray."""


class SingularMatrixError(ValueError):
    """Undamped pseudo-inverse requested at a singular configuration."""


class ReachabilityError(ValueError):
    """Target outside the solver's reach annulus."""


class ConvergenceError(RuntimeError):
    """Iterative IK failed to reach tolerance within the iteration budget."""


@dataclass(frozen=True)
class DhRow:
    theta: float
    d: float
    a: float
    alpha: float

    def __post_init__(self):
        for v in (self.theta, self.d, self.a, self.alpha):
            if not math.isfinite(v):
                raise ValueError("DH parameters must be finite")


@dataclass(frozen=True)
class DhTable:
    rows: tuple[DhRow, DhRow, DhRow]

    def __post_init__(self):
        if len(self.rows) != 3:
            raise ValueError("expected exactly 3 DH rows")
        if any(row.a <= 0 for row in self.rows):
            raise ValueError("link lengths must be positive")

    @property
    def link_lengths(self) -> tuple[float, float, float]:
        return tuple(row.a for row in self.rows)

    @classmethod
    def default(cls) -> "DhTable":
        # Link lengths 10 / 22 / 15 cm, planar (d = alpha = 0).
        return cls(
            rows=(
                DhRow(theta=0.0, d=0.0, a=0.10, alpha=0.0),
                DhRow(theta=0.0, d=0.0, a=0.22, alpha=0.0),
                DhRow(theta=0.0, d=0.0, a=0.15, alpha=0.0),
            )
        )


DEFAULT_LIMITS = ((-math.pi, math.pi),) * 3


@dataclass(frozen=True)
class JointState:
    q: tuple[float, float, float]
    limits: tuple[tuple[float, float], ...] = DEFAULT_LIMITS

    def __post_init__(self):
        if len(self.q) != 3 or len(self.limits) != 3:
            raise ValueError("expected 3 joints")
        for angle, (lo, hi) in zip(self.q, self.limits):
            if not lo - 1e-12 <= angle <= hi + 1e-12:
                raise JointLimitError(f"joint angle {angle} outside [{lo}, {hi}]")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.q, dtype=float)


@dataclass(frozen=True)
class EndEffectorState:
    position: tuple[float, float, float]
    transform: np.ndarray | None = field(default=None, compare=False, repr=False)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.position, dtype=float)


def dh_transform(row: DhRow) -> np.ndarray:
    """Homogeneous link transform for one DH row."""
    ct, st = math.cos(row.theta), math.sin(row.theta)
    ca, sa = math.cos(row.alpha), math.sin(row.alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, row.a * ct],
            [st, ct * ca, -ct * sa, row.a * st],
            [0.0, sa, ca, row.d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _with_angles(table: DhTable, q: Sequence[float]) -> list[DhRow]:
    return [
        DhRow(theta=float(angle), d=row.d, a=row.a, alpha=row.alpha)
        for row, angle in zip(table.rows, q)
    ]


def forward_kinematics(q: JointState, table: DhTable | None = None) -> EndEffectorState:
    """End-effector pose: T = A1 * A2 * A3 for the joint-substituted table."""
    table = table or DhTable.default()
    T = np.eye(4)
    for row in _with_angles(table, q.q):
        T = T @ dh_transform(row)
    return EndEffectorState(position=tuple(T[:3, 3]), transform=T)


def jacobian(q: JointState, table: DhTable | None = None) -> np.ndarray:
    """Position Jacobian d(x,y,z)/d(theta_j), geometric form for revolute joints."""
    table = table or DhTable.default()
    rows = _with_angles(table, q.q)
    origins = [np.zeros(3)]
    axes = [np.array([0.0, 0.0, 1.0])]
    T = np.eye(4)
    for row in rows:
        T = T @ dh_transform(row)
        origins.append(T[:3, 3].copy())
        axes.append(T[:3, 2].copy())
    p_end = origins[-1]
    J = np.zeros((3, 3))
    for j in range(3):
        J[:, j] = np.cross(axes[j], p_end - origins[j])
    return J


class ClosedFormIkSolution(NamedTuple):
    """Reference-mode closed-form output (not FK-consistent)."""

    theta1: float
    d3: float
    theta2: float


def ik_closed_form(target: EndEffectorState, table: DhTable | None = None) -> ClosedFormIkSolution:
    """Legacy closed-form IK, retained for reference.

    theta1 = atan2(y, x); d3 = z - d1;
    theta2 = atan2(sqrt(x^2+y^2) - a1, d3) - atan2(a2, d3).
    """
    table = table or DhTable.default()
    x, y, z = target.position
    if x == 0.0 and y == 0.0:
        raise SingularTargetError("target on the z axis: theta1 undefined")
    d1 = table.rows[0].d
    a1 = table.rows[0].a
    a2 = table.rows[1].a
    theta1 = math.atan2(y, x)
    d3 = z - d1
    theta2 = math.atan2(math.hypot(x, y) - a1, d3) - math.atan2(a2, d3)
    return ClosedFormIkSolution(theta1=theta1, d3=d3, theta2=theta2)


def damped_pinv(J: np.ndarray, lam: float) -> np.ndarray:
    """Damped pseudo-inverse (J^T J + lambda^2 I)^-1 J^T."""
    if lam < 0:
        raise ValueError("damping must be non-negative")
    J = np.asarray(J, dtype=float)
    n = J.shape[1]
    A = J.T @ J + lam**2 * np.eye(n)
    if lam == 0.0:
        if np.linalg.matrix_rank(A) < n:
            raise SingularMatrixError("J^T J singular and damping is zero")
        return np.linalg.solve(A, J.T)
    return np.linalg.solve(A, J.T)


def joint_velocities(J_pinv: np.ndarray, ee_velocity) -> np.ndarray:
    """Joint rates from the desired end-effector velocity."""
    v = np.asarray(ee_velocity, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("end-effector velocity must be finite")
    return np.asarray(J_pinv, dtype=float) @ v


def reach_annulus(table: DhTable) -> tuple[float, float]:
    a1, a2, a3 = table.link_lengths
    return abs(a1 - a2 - a3), a1 + a2 + a3


_RESTART_SEEDS = (
    (0.1, 0.2, 0.1),
    (0.5, 1.0, 0.5),
    (-0.5, -1.0, -0.5),
    (1.5, -1.0, 1.0),
)


def _wrap(angle: float) -> float:
    return math.atan2(math.sin(angle), math.cos(angle))


def ik_dls(
    target: EndEffectorState,
    q0: JointState | None = None,
    table: DhTable | None = None,
    lam: float = 0.01,
    tol: float = 1e-4,
    max_iters: int = 200,
    max_step: float = 0.5,
) -> JointState:
    """Damped-least-squares IK for planar targets inside the reach annulus.

    Deterministic given q0; falls back to a fixed list of restart seeds if the
    first descent stalls. Raises ReachabilityError before iterating when the
    target cannot be reached, ConvergenceError when the budget is exhausted.
    """
    table = table or DhTable.default()
    p = np.asarray(target.position, dtype=float)
    r = math.hypot(p[0], p[1])
    lo, hi = reach_annulus(table)
    if abs(p[2]) > 1e-9 or not lo - 1e-9 <= r <= hi + 1e-9:
        raise ReachabilityError(
            f"target {tuple(p)} outside reach annulus [{lo:.3f}, {hi:.3f}] in z=0 plane"
        )

    starts = []
    if q0 is not None:
        starts.append(tuple(q0.q))
    starts.extend(_RESTART_SEEDS)

    for start in starts:
        q = np.array(start, dtype=float)
        for _ in range(max_iters):
            ee = forward_kinematics(JointState(q=tuple(q)), table)
            err = p - ee.as_array()
            if float(np.linalg.norm(err)) <= tol:
                return JointState(q=tuple(q))
            J = jacobian(JointState(q=tuple(q)), table)
            dq = damped_pinv(J, lam) @ err
            dq = np.clip(dq, -max_step, max_step)
            q = np.array([_wrap(v) for v in q + dq])
    raise ConvergenceError(f"no convergence to {tuple(p)} within {max_iters} iterations")


@dataclass(frozen=True)
class ArmTrajectory:
    """Timed joint trajectory with grip events; joint samples at fixed steps."""

    times: tuple[float, ...]
    joints: tuple[tuple[float, float, float], ...]
    grip_events: tuple[tuple[float, str], ...]
    duration: float

    def max_joint_rate(self) -> float:
        worst = 0.0
        for i in range(1, len(self.times)):
            dt = self.times[i] - self.times[i - 1]
            if dt <= 0:
                continue
            step = max(
                abs(a - b) for a, b in zip(self.joints[i], self.joints[i - 1])
            )
            worst = max(worst, step / dt)
        return worst


def _interpolate_leg(samples, times, q_from, q_to, t_start, rate, dt):
    span = max(abs(a - b) for a, b in zip(q_from, q_to))
    duration = span / rate
    if duration == 0.0:
        return t_start
    steps = max(1, int(math.ceil(duration / dt)))
    for k in range(1, steps + 1):
        frac = min(1.0, k * dt / duration)
        q = tuple(a + frac * (b - a) for a, b in zip(q_from, q_to))
        times.append(t_start + min(k * dt, duration))
        samples.append(q)
    return t_start + duration


def pick_and_place(
    outlet: EndEffectorState,
    desk: EndEffectorState,
    table: DhTable | None = None,
    home: JointState | None = None,
    rate: float = ARM_MAX_JOINT_RATE,
    grip_dwell: float = GRIP_DWELL_S,
    dt: float = 0.02,
) -> ArmTrajectory:
    """Medicine transfer: home -> outlet (grip) -> desk (release) -> home."""
    table = table or DhTable.default()
    home = home or JointState(q=(0.0, 0.0, 0.0))
    home_ee = forward_kinematics(home, table)

    def same(a: EndEffectorState, b: EndEffectorState) -> bool:
        return bool(np.allclose(a.as_array(), b.as_array(), atol=1e-12))

    if same(outlet, home_ee) and same(desk, home_ee):
        return ArmTrajectory(
            times=(0.0,), joints=(tuple(home.q),), grip_events=(), duration=0.0
        )

    q_outlet = ik_dls(outlet, q0=home, table=table)
    q_desk = ik_dls(desk, q0=q_outlet, table=table)

    times = [0.0]
    samples = [tuple(home.q)]
    grip_events = []
    t = _interpolate_leg(samples, times, tuple(home.q), tuple(q_outlet.q), 0.0, rate, dt)
    grip_events.append((t, "grip"))
    t += grip_dwell
    times.append(t)
    samples.append(tuple(q_outlet.q))
    t = _interpolate_leg(samples, times, tuple(q_outlet.q), tuple(q_desk.q), t, rate, dt)
    grip_events.append((t, "release"))
    t += grip_dwell
    times.append(t)
    samples.append(tuple(q_desk.q))
    t = _interpolate_leg(samples, times, tuple(q_desk.q), tuple(home.q), t, rate, dt)

    return ArmTrajectory(
        times=tuple(times),
        joints=tuple(samples),
        grip_events=tuple(grip_events),
        duration=t,
    )
