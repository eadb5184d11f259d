"""Shared fixtures: a small two-patient scenario for fast controller tests,
plus per-criterion pass/fail reporting for the acceptance module."""

import pytest

from robonurse.scenario import parse_scenario


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].replace("test_", "", 1)
    outcome = "PASS" if report.passed else "FAIL"
    print(f"\n[ACCEPTANCE] {name}: {outcome}", flush=True)


def small_scenario_doc(seed=7, b01_temp=98.4, b02_spo2=97.8, checkup_dwell=1.0):
    return {
        "version": 1,
        "seed": seed,
        "checkup_dwell_s": checkup_dwell,
        "room": {
            "id": "R02",
            "bounds": [0.0, 0.0, 10.0, 6.0],
            "dock": {"x": 0.5, "y": 3.0, "heading": 0.0},
            "outlets": [
                {"x": 0.30, "y": 0.20},
                {"x": 0.32, "y": -0.18},
                {"x": 0.40, "y": 0.0},
            ],
            "desk_offset": {"x": 0.35, "y": 0.10},
        },
        "schedule": {"checkup_times": [10.0], "round_order": ["B01", "B02"]},
        "robot": {},
        "sensing": {"noise_level": 0.02},
        "thresholds": {},
        "dosing": {},
        "inventory": {1: 5, 2: 5, 3: 5},
        "patients": [
            {
                "id": "B01",
                "desk": {"x": 3.0, "y": 5.0, "heading": 1.5708},
                "trajectory": [
                    {"x": 3.0, "y": 3.0},
                    {"x": 3.0, "y": 4.75, "heading": 1.5708},
                ],
                "vitals": {
                    "heart_rate": {"mean": 72.0, "noise": 0.2, "min": 40, "max": 180},
                    "spo2": {"mean": 97.5, "noise": 0.05, "min": 80, "max": 100},
                    "temp_f": {"mean": b01_temp, "noise": 0.02, "min": 95, "max": 106},
                },
                "med_response": [
                    {"action": "M01", "vital": "temp_f", "delta": -2.0,
                     "onset_s": 30, "decay_s": 600},
                ],
            },
            {
                "id": "B02",
                "desk": {"x": 6.0, "y": 1.0, "heading": -1.5708},
                "trajectory": [
                    {"x": 6.0, "y": 1.25, "heading": -1.5708},
                ],
                "vitals": {
                    "heart_rate": {"mean": 68.0, "noise": 0.2, "min": 40, "max": 180},
                    "spo2": {"mean": b02_spo2, "noise": 0.05, "min": 80, "max": 100},
                    "temp_f": {"mean": 98.6, "noise": 0.02, "min": 95, "max": 106},
                },
            },
        ],
    }


@pytest.fixture()
def small_scenario():
    return parse_scenario(small_scenario_doc())


@pytest.fixture()
def feverish_scenario():
    return parse_scenario(small_scenario_doc(b01_temp=101.5))
