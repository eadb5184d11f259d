"""Weighted-cost trade-off analysis over subsystem configuration alternatives.

Six subsystem slots (A..F) each offer a set of alternatives. Four criteria
(cost, accuracy, weight, speed) carry per-slot percentage weights; a
configuration's total is the sum of the four weighted criterion components.
Selection is minimum-total with deterministic lexicographic tie-breaking,
followed by an availability pass that can substitute or merge alternatives.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import yaml

SLOTS = ("A", "B", "C", "D", "E", "F")
CRITERIA = ("c", "a", "w", "s")
CRITERION_ATTR = {"c": "cost", "a": "accuracy", "w": "weight", "s": "speed"}


class CatalogError(ValueError):
    """Catalog is incomplete or malformed (e.g. a slot with no alternatives)."""


class ConfigurationError(ValueError):
    """A configuration is invalid (missing slot or attribute score)."""


class WeightMatrixError(ValueError):
    """A weight row fails validation (wrong length, negative, or sum != 100)."""

    def __init__(self, row: str, message: str):
        self.row = row
        super().__init__(f"weight row '{row}': {message}")


class InfeasibleConfigurationError(RuntimeError):
    """No available alternative exists for some slot."""


@dataclass(frozen=True)
class Alternative:
    """One subsystem alternative with normalized penalty scores in [0, 100]."""

    code: str
    slot: str
    attributes: Mapping[str, float]
    available: bool = True

    def __post_init__(self):
        if self.slot not in SLOTS:
            raise CatalogError(f"unknown slot '{self.slot}' for {self.code}")
        if not self.code or self.code[0] != self.slot:
            raise CatalogError(
                f"code '{self.code}' does not match slot '{self.slot}'"
            )
        for attr in CRITERION_ATTR.values():
            if attr not in self.attributes:
                raise ConfigurationError(f"{self.code}: missing score '{attr}'")
            score = self.attributes[attr]
            if not math.isfinite(score) or not 0.0 <= score <= 100.0:
                raise ConfigurationError(
                    f"{self.code}: score '{attr}'={score!r} outside [0, 100]"
                )

    def score(self, criterion: str) -> float:
        attr = CRITERION_ATTR[criterion]
        try:
            return float(self.attributes[attr])
        except KeyError:
            raise ConfigurationError(f"{self.code}: missing score '{attr}'") from None


@dataclass(frozen=True)
class WeightMatrix:
    """Per-criterion weight rows; each row holds six percents summing to 100."""

    rows: Mapping[str, tuple[float, ...]]

    def __post_init__(self):
        for criterion in CRITERIA:
            if criterion not in self.rows:
                raise WeightMatrixError(criterion, "row missing")
            row = self.rows[criterion]
            if len(row) != len(SLOTS):
                raise WeightMatrixError(criterion, f"expected 6 entries, got {len(row)}")
            if any(w < 0 for w in row):
                raise WeightMatrixError(criterion, "negative weight")
            total = sum(row)
            if abs(total - 100.0) > 1e-9:
                raise WeightMatrixError(criterion, f"sums to {total}, expected 100")

    def row(self, criterion: str) -> tuple[float, ...]:
        return self.rows[criterion]

    @classmethod
    def default(cls) -> "WeightMatrix":
        # Per-slot percents for cost/accuracy/weight/speed; the weight row's
        # slot-E entry is zero (source table prints a letter O there).
        return cls(
            rows={
                "c": (10.0, 30.0, 0.0, 10.0, 40.0, 10.0),
                "a": (20.0, 0.0, 40.0, 35.0, 5.0, 0.0),
                "w": (0.0, 70.0, 0.0, 0.0, 0.0, 30.0),
                "s": (30.0, 0.0, 30.0, 25.0, 15.0, 0.0),
            }
        )


@dataclass(frozen=True)
class ConfigCandidate:
    """A full configuration: one or two alternatives per slot, plus its cost.

    ``breakdown`` maps criterion -> weighted component; ``total`` is their sum.
    Both are zero until scored by :func:`total_cost`.
    """

    choices: Mapping[str, tuple[Alternative, ...]]
    breakdown: Mapping[str, float] = field(default_factory=dict)
    total: float = 0.0

    def __post_init__(self):
        for slot in SLOTS:
            alts = self.choices.get(slot, ())
            if not 1 <= len(alts) <= 2:
                raise ConfigurationError(
                    f"slot {slot} must hold 1 or 2 alternatives, has {len(alts)}"
                )
            for alt in alts:
                if alt.slot != slot:
                    raise ConfigurationError(
                        f"alternative {alt.code} filed under slot {slot}"
                    )

    def slot_score(self, slot: str, criterion: str) -> float:
        """Score for a slot; a merged (two-alternative) slot scores the mean."""
        alts = self.choices[slot]
        return sum(alt.score(criterion) for alt in alts) / len(alts)

    def code_string(self) -> str:
        return "".join(
            alt.code for slot in SLOTS for alt in sorted(self.choices[slot], key=lambda a: a.code)
        )

    def codes(self) -> tuple[str, ...]:
        return tuple(
            alt.code for slot in SLOTS for alt in sorted(self.choices[slot], key=lambda a: a.code)
        )


def cost_component(
    weights_row: Sequence[float], config: ConfigCandidate, criterion: str
) -> float:
    """Weighted criterion component: sum_i w[i]/100 * score_i.

    Zero-weight slots contribute nothing, which is how the criterion domain
    restrictions (weight applies to B/F only, speed to a subset) are realized.
    """
    component = 0.0
    for i, slot in enumerate(SLOTS):
        w = weights_row[i]
        if w == 0.0:
            continue
        component += w / 100.0 * config.slot_score(slot, criterion)
    return component


def total_cost(config: ConfigCandidate, weights: WeightMatrix) -> ConfigCandidate:
    """Return the candidate with its per-criterion breakdown and total filled."""
    breakdown = {
        criterion: cost_component(weights.row(criterion), config, criterion)
        for criterion in CRITERIA
    }
    return ConfigCandidate(
        choices=config.choices, breakdown=breakdown, total=sum(breakdown.values())
    )


def slots_of(catalog: Iterable[Alternative]) -> dict[str, list[Alternative]]:
    by_slot: dict[str, list[Alternative]] = {slot: [] for slot in SLOTS}
    for alt in catalog:
        by_slot[alt.slot].append(alt)
    for slot in SLOTS:
        by_slot[slot].sort(key=lambda a: a.code)
    return by_slot


def enumerate_configs(
    catalog: Sequence[Alternative], weights: WeightMatrix | None = None
) -> list[ConfigCandidate]:
    """Score the full Cartesian product of per-slot alternatives.

    Output order is deterministic: lexicographic by the per-slot codes.
    """
    weights = weights or WeightMatrix.default()
    by_slot = slots_of(catalog)
    for slot in SLOTS:
        if not by_slot[slot]:
            raise CatalogError(f"catalog has no alternative for slot {slot}")
    candidates = []
    for combo in itertools.product(*(by_slot[slot] for slot in SLOTS)):
        config = ConfigCandidate(choices={alt.slot: (alt,) for alt in combo})
        candidates.append(total_cost(config, weights))
    return candidates


def select_optimal(candidates: Sequence[ConfigCandidate], k: int = 1) -> list[ConfigCandidate]:
    """The k lowest-total candidates; ties broken by concatenated code string.

    Totals are compared at nanounit resolution so that candidates whose costs
    are equal by construction (but differ in float summation order) tie.
    """
    ranked = sorted(candidates, key=lambda c: (round(c.total, 9), c.code_string()))
    return ranked[: max(k, 0)]


def _is_available(alt: Alternative, availability: Mapping[str, bool]) -> bool:
    return availability.get(alt.code, alt.available)


def _slot_contribution(alt: Alternative, slot_index: int, weights: WeightMatrix) -> float:
    return sum(
        weights.row(criterion)[slot_index] / 100.0 * alt.score(criterion)
        for criterion in CRITERIA
    )


def apply_availability(
    selection: Sequence[ConfigCandidate],
    availability: Mapping[str, bool],
    weights: WeightMatrix | None = None,
    catalog: Sequence[Alternative] | None = None,
) -> ConfigCandidate:
    """Resolve the ranked selection against component availability.

    If every alternative of the top candidate is available it is returned
    unchanged. Otherwise, when the runner-up ties the winner on total cost,
    their slot choices are merged (the ranked pair differing only in one slot
    yields a two-alternative slot), and each unavailable choice is replaced by
    the cheapest available alternative in the same slot. The replacement pool
    is the supplied catalog, or failing that every alternative seen in the
    ranked list.
    """
    if not selection:
        raise InfeasibleConfigurationError("empty selection")
    weights = weights or WeightMatrix.default()
    base = selection[0]

    if all(
        _is_available(alt, availability)
        for slot in SLOTS
        for alt in base.choices[slot]
    ):
        return total_cost(base, weights)

    merged: dict[str, list[Alternative]] = {
        slot: list(base.choices[slot]) for slot in SLOTS
    }
    if len(selection) > 1 and math.isclose(
        selection[1].total, base.total, rel_tol=1e-9, abs_tol=1e-12
    ):
        for slot in SLOTS:
            for alt in selection[1].choices[slot]:
                if alt.code not in {a.code for a in merged[slot]}:
                    merged[slot].append(alt)

    pool_source: Iterable[Alternative]
    if catalog is not None:
        pool_source = catalog
    else:
        pool_source = {
            alt.code: alt
            for cand in selection
            for slot in SLOTS
            for alt in cand.choices[slot]
        }.values()
    pool = slots_of(pool_source)

    final: dict[str, tuple[Alternative, ...]] = {}
    for i, slot in enumerate(SLOTS):
        keep = [alt for alt in merged[slot] if _is_available(alt, availability)]
        if not keep:
            replacements = [
                alt for alt in pool[slot] if _is_available(alt, availability)
            ]
            if not replacements:
                raise InfeasibleConfigurationError(
                    f"no available alternative for slot {slot}"
                )
            keep = [
                min(
                    replacements,
                    key=lambda alt: (_slot_contribution(alt, i, weights), alt.code),
                )
            ]
        final[slot] = tuple(sorted(keep, key=lambda a: a.code)[:2])
    return total_cost(ConfigCandidate(choices=final), weights)


def load_catalog(path) -> list[Alternative]:
    """Load an alternatives catalog from a YAML file."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "alternatives" not in doc:
        raise CatalogError(f"{path}: expected a mapping with an 'alternatives' list")
    catalog = []
    for entry in doc["alternatives"]:
        try:
            catalog.append(
                Alternative(
                    code=str(entry["code"]),
                    slot=str(entry["slot"]),
                    attributes={
                        "cost": float(entry["cost"]),
                        "accuracy": float(entry["accuracy"]),
                        "weight": float(entry["weight"]),
                        "speed": float(entry["speed"]),
                    },
                    available=bool(entry.get("available", True)),
                )
            )
        except KeyError as exc:
            raise CatalogError(f"{path}: entry {entry!r} missing field {exc}") from None
    return catalog


def load_weights(path) -> WeightMatrix:
    """Load a weight matrix (4 named rows of 6 percents) from a YAML file."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "rows" not in doc:
        raise WeightMatrixError("?", f"{path}: expected a mapping with a 'rows' table")
    rows = {
        str(name): tuple(float(w) for w in row) for name, row in doc["rows"].items()
    }
    return WeightMatrix(rows=rows)
