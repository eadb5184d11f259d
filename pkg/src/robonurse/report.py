"""Run report aggregation.

A RunReport is computed purely from a telemetry frame stream, so replaying a
persisted log reproduces exactly the report of the live run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .telemetry import TelemetryFrame


@dataclass(frozen=True)
class RunReport:
    rounds: int
    patients_visited: int
    dispenses: int
    alerts: int
    avg_checkup_s: float | None
    avg_medication_s: float | None
    avg_response_s: float | None
    battery_remaining: float | None
    skipped_nodes: int = 0

    def lines(self) -> list[str]:
        def fmt(value, suffix=""):
            return "-" if value is None else f"{value:.3f}{suffix}"

        return [
            f"rounds completed      {self.rounds}",
            f"patients visited      {self.patients_visited}",
            f"dispenses             {self.dispenses}",
            f"alerts                {self.alerts}",
            f"skipped nodes         {self.skipped_nodes}",
            f"avg checkup time      {fmt(self.avg_checkup_s, ' s')}",
            f"avg medication time   {fmt(self.avg_medication_s, ' s')}",
            f"avg response time     {fmt(self.avg_response_s, ' s')}",
            f"battery remaining     {fmt(self.battery_remaining)}",
        ]

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "patients_visited": self.patients_visited,
            "dispenses": self.dispenses,
            "alerts": self.alerts,
            "skipped_nodes": self.skipped_nodes,
            "avg_checkup_s": self.avg_checkup_s,
            "avg_medication_s": self.avg_medication_s,
            "avg_response_s": self.avg_response_s,
            "battery_remaining": self.battery_remaining,
        }


def _mean(values) -> float | None:
    values = list(values)
    return sum(values) / len(values) if values else None


def aggregate(frames: Sequence[TelemetryFrame]) -> RunReport:
    """Derive the run report from a frame stream alone.

    Per-patient checkup time spans from the routine navigating mode frame for
    a node to the next routine leg start (or the returning transition).
    """
    rounds = 0
    visited = 0
    skipped = 0
    dispenses = 0
    alerts = 0
    checkup_spans: list[float] = []
    med_durations: list[float] = []
    responses: list[float] = []
    battery = None

    leg_start: float | None = None
    leg_timed_out = False
    pending_cmds: dict[int, float] = {}

    def close_span(end_time: float):
        nonlocal leg_start, leg_timed_out
        if leg_start is not None and not leg_timed_out:
            checkup_spans.append(end_time - leg_start)
        leg_start = None
        leg_timed_out = False

    for frame in frames:
        if frame.type == "mode":
            mode = frame.payload.get("mode")
            purpose = frame.payload.get("purpose")
            if mode == "round_completed":
                rounds += 1
            if mode == "navigating":
                # Any leg start closes the open routine span; only routine
                # legs open a new one (supervisory detours are unattributed).
                close_span(frame.sim_time)
                if purpose == "routine":
                    leg_start = frame.sim_time
            elif mode in ("returning", "docked", "fault"):
                close_span(frame.sim_time)
        elif frame.type == "vitals":
            if frame.payload.get("purpose") == "routine":
                visited += 1
        elif frame.type == "med":
            dispenses += 1
            if frame.payload.get("cylinder") is not None:
                med_durations.append(float(frame.payload["duration"]))
        elif frame.type == "alert":
            alerts += 1
            if frame.payload.get("reason") in ("navigation-timeout", "node-skipped"):
                skipped += 1
                if frame.payload.get("reason") == "navigation-timeout":
                    leg_timed_out = True
        elif frame.type == "cmd":
            cmd_id = frame.payload.get("cmd_id")
            if cmd_id is not None:
                pending_cmds[int(cmd_id)] = frame.sim_time
        elif frame.type == "ack":
            cmd_id = frame.payload.get("cmd_id")
            deliver_t = frame.payload.get("deliver_t")
            if cmd_id is not None and deliver_t is not None and int(cmd_id) in pending_cmds:
                responses.append(float(deliver_t) - pending_cmds.pop(int(cmd_id)))
        elif frame.type == "pose":
            if "battery" in frame.payload:
                battery = float(frame.payload["battery"])

    return RunReport(
        rounds=rounds,
        patients_visited=visited,
        dispenses=dispenses,
        alerts=alerts,
        skipped_nodes=skipped,
        avg_checkup_s=_mean(checkup_spans),
        avg_medication_s=_mean(med_durations),
        avg_response_s=_mean(responses),
        battery_remaining=battery,
    )
