#!/usr/bin/env python3
"""Regenerate the committed golden fixtures under tests/data/.

Run from the repository root after an intentional behavior change:
    python3 scripts/make_goldens.py
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))

from robonurse.scenario import parse_scenario
from robonurse.session import ScriptedCommand, Session
from robonurse.telemetry import encode_frame

from conftest import small_scenario_doc

DATA = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"


def golden_stream():
    """Full frame stream of the small fixture round."""
    session = Session(parse_scenario(small_scenario_doc(b01_temp=101.5)))
    session.run(90.0)
    path = DATA / "golden_stream.log"
    path.write_text(
        "".join(encode_frame(f) + "\n" for f in session.frames), encoding="utf-8"
    )
    print(f"wrote {path} ({len(session.frames)} frames)")


def golden_override_trace():
    """Mode/vitals/ack event trace of the scripted supervisory override."""
    session = Session(parse_scenario(small_scenario_doc(b01_temp=101.5)))
    session.load_script(
        [ScriptedCommand(at=18.0, kind="priority_checkup", node="B02")]
    )
    session.run(120.0)
    lines = []
    for frame in session.frames:
        if frame.type == "vitals":
            lines.append(
                f"t={frame.sim_time:09.2f} vitals {frame.patient} "
                f"purpose={frame.payload['purpose']} flags={frame.payload['flags']}"
            )
        elif frame.type == "mode" and frame.payload.get("mode") in (
            "navigating", "measuring", "dispensing", "returning", "docked",
            "round_started", "round_completed",
        ):
            node = frame.payload.get("node", "-")
            purpose = frame.payload.get("purpose", "-")
            lines.append(
                f"t={frame.sim_time:09.2f} mode {frame.payload['mode']} "
                f"node={node} purpose={purpose}"
            )
        elif frame.type == "ack":
            lines.append(
                f"t={frame.sim_time:09.2f} ack cmd={frame.payload.get('cmd_id')} "
                f"status={frame.payload['status']}"
            )
    path = DATA / "golden_override_trace.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path} ({len(lines)} events)")


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    golden_stream()
    golden_override_trace()
