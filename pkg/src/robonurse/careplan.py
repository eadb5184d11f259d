"""Care pipeline: vitals classification, medication lookup, actuation mapping,
and the three-cylinder valve dispenser.

Thresholds and the state-to-medication table are declarative configuration
(swappable at runtime), not code.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

import yaml

from .sensors import VitalSigns

CYLINDER_OF = {"M01": 1, "M02": 2, "M03": 3}
MEDICINE_OF = {v: k for k, v in CYLINDER_OF.items()}
MAX_VALVE_TOTAL_S = 10.0
MASK_PLACEMENT_S = 2.0


class UnknownHealthStateError(LookupError):
    """A classified flag has no knowledge-base row."""


class Flag(str, enum.Enum):
    FEVER = "fever"
    HYPOXIA = "hypoxia"
    TACHYCARDIA = "tachycardia"
    BRADYCARDIA = "bradycardia"
    NORMAL = "normal"


class Action(str, enum.Enum):
    M01 = "M01"
    M02 = "M02"
    M03 = "M03"
    FLUID = "fluid"
    OXYGEN_MASK = "oxygen_mask"
    NONE = "none"


@dataclass(frozen=True)
class Thresholds:
    fever_temp_f: float = 100.4
    hypoxia_spo2: float = 94.0
    tachycardia_hr: float = 100.0
    bradycardia_hr: float = 60.0

    @classmethod
    def from_mapping(cls, data: Mapping) -> "Thresholds":
        return cls(**{k: float(v) for k, v in data.items()})

    @classmethod
    def from_file(cls, path) -> "Thresholds":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_mapping(yaml.safe_load(fh))


@dataclass(frozen=True)
class HealthState:
    flags: frozenset[Flag]
    source: VitalSigns

    def __post_init__(self):
        if not self.flags:
            raise ValueError("at least one flag must be set")
        if Flag.NORMAL in self.flags and len(self.flags) > 1:
            raise ValueError("normal excludes every other flag")

    def label(self) -> str:
        return "+".join(sorted(f.value for f in self.flags))


@dataclass(frozen=True)
class MedicationPlan:
    actions: frozenset[Action]

    def __post_init__(self):
        if Action.NONE in self.actions and len(self.actions) > 1:
            raise ValueError("'none' excludes every other action")

    def is_noop(self) -> bool:
        return self.actions == frozenset({Action.NONE})

    def label(self) -> str:
        return "+".join(sorted(a.value for a in self.actions))


@dataclass(frozen=True)
class ActuationProfile:
    valve_open: Mapping[int, float] = field(default_factory=dict)
    pump_volume: float = 0.0
    mask_flag: bool = False

    def __post_init__(self):
        for cylinder, seconds in self.valve_open.items():
            if cylinder not in (1, 2, 3):
                raise ValueError(f"unknown cylinder {cylinder}")
            if seconds < 0:
                raise ValueError("valve duration must be non-negative")
        if self.pump_volume < 0:
            raise ValueError("pump volume must be non-negative")
        if sum(self.valve_open.values()) > MAX_VALVE_TOTAL_S:
            raise ValueError("total valve-open time exceeds budget")

    def is_empty(self) -> bool:
        return not self.valve_open and self.pump_volume == 0.0 and not self.mask_flag


@dataclass(frozen=True)
class DispenseRecord:
    patient: str
    medicine: str
    cylinder: int
    timestamp: float
    duration: float
    mode: str  # routine | supervisory

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.cylinder not in (1, 2, 3):
            raise ValueError("cylinder must be 1..3")
        if self.mode not in ("routine", "supervisory"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class DosingConfig:
    dose_seconds: float = 2.88          # average medication time per valve
    fluid_dose_liters: float = 0.05
    fluid_interval_s: float = 6 * 3600.0
    pump_capacity_lph: float = 96.42

    @classmethod
    def from_mapping(cls, data: Mapping) -> "DosingConfig":
        return cls(**{k: float(v) for k, v in data.items()})

    def pump_runtime_s(self, volume_liters: float) -> float:
        return volume_liters / (self.pump_capacity_lph / 3600.0)


DEFAULT_KB: dict[Flag, frozenset[Action]] = {
    Flag.FEVER: frozenset({Action.M01}),
    Flag.TACHYCARDIA: frozenset({Action.M02}),
    Flag.BRADYCARDIA: frozenset({Action.M02}),
    Flag.HYPOXIA: frozenset({Action.M03, Action.OXYGEN_MASK}),
    Flag.NORMAL: frozenset({Action.NONE}),
}


def load_knowledge_base(data: Mapping) -> dict[Flag, frozenset[Action]]:
    """Parse a flag -> action-list mapping (e.g. from the scenario file)."""
    kb = {}
    for flag_name, actions in data.items():
        kb[Flag(flag_name)] = frozenset(Action(a) for a in actions)
    return kb


def classify(vitals: VitalSigns, thresholds: Thresholds = Thresholds()) -> HealthState:
    """Deterministic threshold evaluation; multiple flags may co-occur."""
    flags = set()
    if vitals.temp_f >= thresholds.fever_temp_f:
        flags.add(Flag.FEVER)
    if vitals.spo2 < thresholds.hypoxia_spo2:
        flags.add(Flag.HYPOXIA)
    if vitals.heart_rate > thresholds.tachycardia_hr:
        flags.add(Flag.TACHYCARDIA)
    if vitals.heart_rate < thresholds.bradycardia_hr:
        flags.add(Flag.BRADYCARDIA)
    if not flags:
        flags.add(Flag.NORMAL)
    return HealthState(flags=frozenset(flags), source=vitals)


def prescribe(
    state: HealthState,
    kb: Mapping[Flag, frozenset[Action]] | None = None,
    fluid_due: bool = False,
) -> MedicationPlan:
    """Union of the knowledge-base rows for every set flag.

    A non-normal state with the fluid interval elapsed adds a fluid dose.
    Raises UnknownHealthStateError when a flag has no row; the caller is
    expected to log, fall back to a no-op plan, and raise an alert.
    """
    kb = DEFAULT_KB if kb is None else kb
    actions: set[Action] = set()
    for flag in sorted(state.flags, key=lambda f: f.value):
        if flag not in kb:
            raise UnknownHealthStateError(f"no knowledge-base row for {flag.value}")
        actions |= kb[flag]
    if Flag.NORMAL not in state.flags:
        actions.discard(Action.NONE)
        if fluid_due:
            actions.add(Action.FLUID)
    if not actions:
        actions.add(Action.NONE)
    return MedicationPlan(actions=frozenset(actions))


def actuation_profile(
    plan: MedicationPlan, dosing: DosingConfig = DosingConfig()
) -> ActuationProfile:
    """Concrete valve/pump/mask actions realizing a medication plan."""
    valves = {}
    for action in plan.actions:
        if action.value in CYLINDER_OF:
            valves[CYLINDER_OF[action.value]] = dosing.dose_seconds
    return ActuationProfile(
        valve_open=valves,
        pump_volume=dosing.fluid_dose_liters if Action.FLUID in plan.actions else 0.0,
        mask_flag=Action.OXYGEN_MASK in plan.actions,
    )


@dataclass(frozen=True)
class DispenseAlert:
    reason: str
    patient: str
    detail: str
    timestamp: float


@dataclass
class DispenseOutcome:
    records: list[DispenseRecord]
    alerts: list[DispenseAlert]
    duration: float


class Dispenser:
    """Three-cylinder valve bank plus fluid pump, with per-cylinder stock.

    Valves open sequentially in cylinder order; an empty cylinder suppresses
    its record and raises a supervisory alert instead of dispensing.
    """

    def __init__(
        self,
        inventory: Mapping[int, int] | None = None,
        dosing: DosingConfig = DosingConfig(),
    ):
        self.inventory = dict(inventory) if inventory is not None else {1: 50, 2: 50, 3: 50}
        self.dosing = dosing

    def dispense(
        self, profile: ActuationProfile, patient: str, start_time: float, mode: str
    ) -> DispenseOutcome:
        records: list[DispenseRecord] = []
        alerts: list[DispenseAlert] = []
        t = start_time
        for cylinder in sorted(profile.valve_open):
            duration = profile.valve_open[cylinder]
            if duration <= 0:
                continue
            if self.inventory.get(cylinder, 0) <= 0:
                alerts.append(
                    DispenseAlert(
                        reason="out-of-stock",
                        patient=patient,
                        detail=f"cylinder {cylinder} empty ({MEDICINE_OF[cylinder]})",
                        timestamp=t,
                    )
                )
                continue
            self.inventory[cylinder] -= 1
            records.append(
                DispenseRecord(
                    patient=patient,
                    medicine=MEDICINE_OF[cylinder],
                    cylinder=cylinder,
                    timestamp=t,
                    duration=duration,
                    mode=mode,
                )
            )
            t += duration
        if profile.pump_volume > 0:
            t += self.dosing.pump_runtime_s(profile.pump_volume)
        if profile.mask_flag:
            t += MASK_PLACEMENT_S
        return DispenseOutcome(records=records, alerts=alerts, duration=t - start_time)
