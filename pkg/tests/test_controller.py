"""Controller tests: transition-table closure, routine rounds, supervisory
commands, log conservation, skip/abort paths."""

import pytest

from robonurse.careplan import ActuationProfile
from robonurse.controller import (
    TRANSITIONS,
    Event,
    RobotController,
    StateKind,
)
from robonurse.scenario import parse_scenario
from robonurse.session import ScriptedCommand, Session
from robonurse.simworld import World

from conftest import small_scenario_doc


def run_session(scenario, duration, script=None):
    session = Session(scenario)
    if script:
        session.load_script(script)
    session.run(duration)
    return session


def frames_of(session, ftype):
    return [f for f in session.frames if f.type == ftype]


class TestTransitionTable:
    def test_every_state_event_pair_defined(self):
        for state in StateKind:
            assert state in TRANSITIONS
            for event in Event:
                assert event in TRANSITIONS[state], (state, event)

    def test_every_handler_exists(self, small_scenario):
        controller = RobotController(World(small_scenario))
        for state, row in TRANSITIONS.items():
            for event, handler in row.items():
                assert hasattr(controller, f"_on_{handler}"), (state, event, handler)

    def test_fault_only_reachable_via_error_handlers(self):
        # No TICK/SCHEDULE_DUE path enters FAULT; only the nav-timeout path
        # while returning names the fault handler.
        fault_sources = [
            (state, event)
            for state, row in TRANSITIONS.items()
            for event, handler in row.items()
            if handler == "fault"
        ]
        assert fault_sources == [(StateKind.RETURNING, Event.NAV_TIMEOUT)]


class TestRoutineRound:
    def test_all_normal_round_has_no_dispenses(self, small_scenario):
        session = run_session(small_scenario, 90.0)
        assert len(session.controller.completed_rounds) == 1
        assert session.controller.log.medication_entries == []
        assert frames_of(session, "med") == []

    def test_flagged_patient_gets_one_m01(self, feverish_scenario):
        session = run_session(feverish_scenario, 90.0)
        records = session.controller.log.medication_entries
        assert len(records) == 1
        assert records[0].patient == "B01"
        assert records[0].medicine == "M01"
        assert records[0].mode == "routine"

    def test_health_entries_one_per_node(self, small_scenario):
        session = run_session(small_scenario, 90.0)
        entries = session.controller.log.health_entries
        assert [node for node, _, _ in entries] == ["B01", "B02"]

    def test_round_starts_on_schedule_crossing(self, small_scenario):
        session = Session(small_scenario)
        session.run(9.0)
        assert not any(
            f.payload.get("mode") == "round_started" for f in frames_of(session, "mode")
        )
        session.run(2.0)
        assert any(
            f.payload.get("mode") == "round_started" for f in frames_of(session, "mode")
        )

    def test_no_events_without_crossing_or_commands(self, small_scenario):
        session = Session(small_scenario)
        session.run(5.0)
        assert frames_of(session, "mode") == []
        assert frames_of(session, "vitals") == []

    def test_returns_to_dock_pose(self, small_scenario):
        session = run_session(small_scenario, 90.0)
        assert session.controller.is_docked()
        x, y, _ = session.world.robot.pose
        dock = small_scenario.room.dock
        assert abs(x - dock[0]) <= 0.06 and abs(y - dock[1]) <= 0.06

    def test_log_timestamps_nondecreasing(self, feverish_scenario):
        session = run_session(feverish_scenario, 90.0)
        entries = session.controller.log.health_entries
        times = [v.timestamp for _, v, _ in entries]
        assert times == sorted(times)


class TestLogConservation:
    def test_health_entries_match_vitals_frames(self, feverish_scenario):
        session = run_session(feverish_scenario, 90.0)
        vitals_frames = frames_of(session, "vitals")
        assert len(session.controller.log.health_entries) == len(vitals_frames)

    def test_medication_entries_match_valve_frames(self, feverish_scenario):
        session = run_session(feverish_scenario, 90.0)
        valve_frames = [
            f for f in frames_of(session, "med") if "cylinder" in f.payload
        ]
        assert len(session.controller.log.medication_entries) == len(valve_frames)

    def test_each_dispense_logged_exactly_once(self, feverish_scenario):
        session = run_session(feverish_scenario, 90.0)
        log_keys = [
            (r.patient, r.medicine, round(r.timestamp, 6))
            for r in session.controller.log.medication_entries
        ]
        assert len(log_keys) == len(set(log_keys))


class TestCommands:
    def test_unknown_node_rejected(self, small_scenario):
        session = Session(small_scenario)
        ack = session.submit_command(kind="priority_checkup", node="B99")
        assert ack.payload["status"] == "rejected"
        assert "unknown node" in ack.payload["reason"]

    def test_camera_pan_limit(self, small_scenario):
        session = Session(small_scenario)
        rejected = session.submit_command(kind="camera_pan", degrees=45.0)
        assert rejected.payload["status"] == "rejected"
        accepted = session.submit_command(kind="camera_pan", degrees=-25.0)
        assert accepted.payload["status"] == "accepted"
        session.run(1.0)
        assert session.controller.camera_pan_deg == -25.0

    def test_return_to_dock_while_docked_is_noop_ack(self, small_scenario):
        session = Session(small_scenario)
        ack = session.submit_command(kind="return_to_dock")
        assert ack.payload["status"] == "accepted"
        session.run(1.0)
        assert session.controller.is_docked()

    def test_priority_checkup_from_dock_and_return(self, small_scenario):
        session = Session(small_scenario)
        session.submit_command(kind="priority_checkup", node="B02")
        session.run(60.0)
        vitals = frames_of(session, "vitals")
        assert vitals and vitals[0].patient == "B02"
        assert vitals[0].payload["purpose"] == "supervisory"
        assert session.controller.is_docked()

    def test_override_visit_order(self, feverish_scenario):
        # Command lands during B01's measurement: B01 completes, then B02
        # supervisory, then the routine resumes with B02's scheduled visit.
        session = run_session(
            feverish_scenario,
            120.0,
            script=[ScriptedCommand(at=18.0, kind="priority_checkup", node="B02")],
        )
        visits = [
            (f.patient, f.payload["purpose"]) for f in frames_of(session, "vitals")
        ]
        assert visits == [
            ("B01", "routine"),
            ("B02", "supervisory"),
            ("B02", "routine"),
        ]

    def test_command_completion_ack_emitted(self, small_scenario):
        session = run_session(
            small_scenario,
            60.0,
            script=[ScriptedCommand(at=1.0, kind="priority_checkup", node="B01")],
        )
        acks = frames_of(session, "ack")
        statuses = [a.payload["status"] for a in acks]
        assert "accepted" in statuses and "completed" in statuses

    def test_manual_dispense_executes_profile(self, small_scenario):
        profile = ActuationProfile(valve_open={2: 2.88})
        session = run_session(
            small_scenario,
            60.0,
            script=[ScriptedCommand(at=1.0, kind="manual_dispense", node="B01",
                                    profile=profile)],
        )
        records = session.controller.log.medication_entries
        assert [r.medicine for r in records] == ["M02"]
        assert records[0].mode == "supervisory"

    def test_fluid_supply_command(self, small_scenario):
        session = run_session(
            small_scenario,
            60.0,
            script=[ScriptedCommand(at=1.0, kind="fluid_supply", node="B02",
                                    liters=0.1)],
        )
        fluid_frames = [
            f for f in frames_of(session, "med") if f.payload.get("medicine") == "fluid"
        ]
        assert len(fluid_frames) == 1
        assert fluid_frames[0].payload["volume_l"] == 0.1

    def test_set_schedule_replaces_times(self, small_scenario):
        session = Session(small_scenario)
        ack = session.submit_command(kind="set_schedule", time_of_day=(100.0, 200.0))
        assert ack.payload["status"] == "accepted"
        session.run(1.0)
        assert session.controller.schedule.checkup_times == (100.0, 200.0)

    def test_dispense_never_interrupted(self, feverish_scenario):
        session = Session(feverish_scenario)
        while session.controller.mode.state != StateKind.DISPENSING:
            session.step()
            assert session.t < 120.0
        dispense_end = session.controller._dispense_end
        session.submit_command(kind="priority_checkup", node="B02")
        while session.controller.mode.state == StateKind.DISPENSING:
            session.step()
        # The dispense phase ran to its scheduled end before the preemption.
        assert session.t + 1e-9 >= dispense_end
        assert session.controller.log.medication_entries  # record kept


class TestSkipsAndAborts:
    def test_blocked_node_skipped_with_alert(self, small_scenario):
        session = Session(small_scenario)
        # Wall across B01's final approach only; B02 stays reachable.
        session.world.inject_obstacle((2.5, 4.5, 3.5, 4.5), duration=10_000.0)
        session.run(150.0)
        alerts = frames_of(session, "alert")
        assert any(
            a.payload["reason"] == "navigation-timeout" and a.patient == "B01"
            for a in alerts
        )
        visited = [f.patient for f in frames_of(session, "vitals")]
        assert visited == ["B02"]
        assert session.controller.is_docked()

    def test_obstacle_clearing_lets_round_finish(self, small_scenario):
        session = Session(small_scenario)
        session.world.inject_obstacle((2.5, 4.5, 3.5, 4.5), duration=15.0)
        session.run(150.0)
        visited = [f.patient for f in frames_of(session, "vitals")]
        assert visited == ["B01", "B02"]

    def test_battery_low_aborts_round(self, small_scenario):
        session = Session(small_scenario)
        session.run(12.0)  # round started
        assert session.controller.round_active
        session.world.battery.level = 0.15
        session.run(60.0)
        alerts = [f.payload["reason"] for f in frames_of(session, "alert")]
        assert "battery-low" in alerts
        skipped = [
            f.patient for f in frames_of(session, "alert")
            if f.payload["reason"] == "node-skipped"
        ]
        assert skipped  # explicit skip event per missing node
        assert session.controller.is_docked()

    def test_low_battery_inhibits_round_start(self, small_scenario):
        session = Session(small_scenario)
        session.world.battery.level = 0.1
        session.run(15.0)
        assert not session.controller.round_active
        alerts = [f.payload["reason"] for f in frames_of(session, "alert")]
        assert "battery-low" in alerts


class TestOutOfStock:
    def test_empty_cylinder_raises_alert_not_record(self):
        doc = small_scenario_doc(b01_temp=101.5)
        doc["inventory"] = {1: 0, 2: 5, 3: 5}
        scenario = parse_scenario(doc)
        session = run_session(scenario, 90.0)
        assert session.controller.log.medication_entries == []
        alerts = frames_of(session, "alert")
        assert any(a.payload["reason"] == "out-of-stock" for a in alerts)


class TestCareTableReload:
    def test_reload_changes_classification(self, small_scenario):
        from robonurse.careplan import Thresholds, load_knowledge_base

        session = Session(small_scenario)
        # Lower the fever threshold below B01's normal temperature and remap
        # fever to the second cylinder, then run the round.
        session.controller.reload_care_tables(
            thresholds=Thresholds(fever_temp_f=98.0),
            knowledge_base=load_knowledge_base(
                {"fever": ["M02"], "hypoxia": ["M03"], "tachycardia": ["M02"],
                 "bradycardia": ["M02"], "normal": ["none"]}
            ),
        )
        session.run(90.0)
        records = session.controller.log.medication_entries
        assert records and all(r.medicine == "M02" for r in records)
        assert any(
            f.payload.get("mode") == "care_tables_reloaded"
            for f in frames_of(session, "mode")
        )

    def test_round_battery_estimate_blocks_marginal_start(self, small_scenario):
        session = Session(small_scenario)
        # Above the bare threshold but below threshold + estimated drain.
        session.world.battery.level = (
            small_scenario.battery.threshold
            + 0.2 * session.controller._estimate_round_drain()
        )
        session.run(15.0)
        assert not session.controller.round_active
        assert any(
            f.payload["reason"] == "battery-low" for f in frames_of(session, "alert")
        )
