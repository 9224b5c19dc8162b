"""Exact outcome statistics of sequential projective Q measurements."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from .quantum import (
    EnsembleState,
    OrderingError,
    PureState,
    born_probabilities,
    collapse,
    evolve,
)

Outcome = Tuple[int, ...]
TWO_PI_THIRDS = 2 * math.pi / 3


class Scenario(str, enum.Enum):
    """How the three correlators of a Leggett-Garg test are collected.

    SEPARATE_PAIRS runs the contexts {12}, {23} and {13} separately from the
    same preparation.  TWO_RUNS runs {13} and {123}; the {23} marginals are
    then taken from the maximally mixed state left behind by the first
    measurement.
    """

    SEPARATE_PAIRS = "separate-pairs"
    TWO_RUNS = "two-runs"

    @classmethod
    def parse(cls, value) -> "Scenario":
        if isinstance(value, cls):
            return value
        aliases = {"pairs": cls.SEPARATE_PAIRS, "i": cls.SEPARATE_PAIRS,
                   "ii": cls.TWO_RUNS}
        key = str(value).strip().lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class MeasurementSchedule:
    """Measurement phases of one context, with the labels of the times used.

    Repeated phases are allowed (an immediate re-measurement); an empty
    schedule describes an unmeasured run and only makes sense for the
    simulator.
    """

    phases: Tuple[float, ...]
    context_label: Tuple[int, ...] = ()

    def __post_init__(self):
        phases = tuple(float(p) for p in self.phases)
        if len(phases) > 3:
            raise ValueError("at most three measurement times are supported")
        if any(not math.isfinite(p) for p in phases):
            raise ValueError("measurement phases must be finite")
        if any(b < a for a, b in zip(phases, phases[1:])):
            raise OrderingError(f"phases must be non-decreasing: {phases}")
        label = tuple(int(i) for i in self.context_label) or tuple(range(1, len(phases) + 1))
        if len(label) != len(phases):
            raise ValueError("context_label must name every measurement")
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "context_label", label)

    def __len__(self) -> int:
        return len(self.phases)

    @property
    def label(self) -> str:
        return "".join(str(i) for i in self.context_label)


def context_schedule(taus: Sequence[float], context: Sequence[int]) -> MeasurementSchedule:
    """Pick the times indexed (1-based) by ``context`` out of ``taus``."""
    context = tuple(sorted(context))
    return MeasurementSchedule(tuple(taus[i - 1] for i in context), context)


def format_outcome(outcome: Outcome) -> str:
    return ",".join(f"{q:+d}" for q in outcome)


@dataclass(frozen=True)
class ContextTable:
    """Joint distribution of the outcomes of one measurement context."""

    context_label: Tuple[int, ...]
    outcomes: Dict[Outcome, float] = field(compare=True)

    def __post_init__(self):
        n = len(self.context_label)
        total = 0.0
        for key, p in self.outcomes.items():
            if len(key) != n or any(q not in (1, -1) for q in key):
                raise ValueError(f"bad outcome tuple {key!r} for context {self.context_label}")
            if not (-1e-15 <= p <= 1 + 1e-15):
                raise ValueError(f"probability {p!r} outside [0, 1]")
            total += p
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total!r}")

    def __len__(self) -> int:
        return len(self.context_label)

    def probability(self, outcome: Sequence[int]) -> float:
        return self.outcomes.get(tuple(outcome), 0.0)

    def marginal(self, index: int) -> Dict[int, float]:
        """Distribution of the ``index``-th (0-based) measurement."""
        out = {1: 0.0, -1: 0.0}
        for key, p in self.outcomes.items():
            out[key[index]] += p
        return out

    def expectation(self, index: int) -> float:
        m = self.marginal(index)
        return m[1] - m[-1]

    def product_expectation(self, i: int, j: int) -> float:
        return sum(p * key[i] * key[j] for key, p in self.outcomes.items())

    def drop_last(self) -> "ContextTable":
        if len(self) < 2:
            raise ValueError("cannot marginalize a single-measurement table")
        out: Dict[Outcome, float] = {}
        for key, p in self.outcomes.items():
            out[key[:-1]] = out.get(key[:-1], 0.0) + p
        return ContextTable(self.context_label[:-1], out)

    def to_records(self) -> List[dict]:
        """Canonical rows: lexicographic outcome order, one row per cell."""
        label = "".join(str(i) for i in self.context_label)
        return [
            {"context": label, "outcome": format_outcome(key), "probability": self.outcomes[key]}
            for key in sorted(self.outcomes)
        ]


def _chain(state: PureState, phases: Sequence[float], start: float,
           weight: float, prefix: Outcome, out: Dict[Outcome, float]) -> None:
    if not phases:
        out[prefix] = out.get(prefix, 0.0) + weight
        return
    here = evolve(state, phases[0] - start)
    p_R, p_L = born_probabilities(here)
    for q, p in ((1, p_R), (-1, p_L)):
        if p == 0.0:
            continue
        _chain(collapse(here, q), phases[1:], phases[0], weight * p, prefix + (q,), out)


def context_distribution(initial: EnsembleState, schedule: MeasurementSchedule) -> ContextTable:
    """Joint outcome table via evolve -> Born -> collapse, averaged over branches.

    The initial state is taken at phase 0.
    """
    if len(schedule) == 0:
        raise ValueError("context_distribution needs at least one measurement")
    out: Dict[Outcome, float] = {}
    for w, state in initial:
        if w > 0:
            _chain(state, schedule.phases, 0.0, w, (), out)
    for key in itertools.product((1, -1), repeat=len(schedule)):
        out.setdefault(key, 0.0)
    return ContextTable(schedule.context_label, dict(sorted(out.items())))


def marginal_expectation(initial: EnsembleState, schedule: MeasurementSchedule,
                         index: int) -> float:
    """<Q> of the ``index``-th (0-based) measurement within its context."""
    if not 0 <= index < len(schedule):
        raise IndexError(f"index {index} outside schedule of length {len(schedule)}")
    return context_distribution(initial, schedule).expectation(index)


@dataclass(frozen=True)
class SignallingReport:
    delta0: float
    terms: Tuple[float, float]
    scenario: Scenario

    def to_record(self) -> dict:
        return {
            "scenario": self.scenario.value,
            "delta0": self.delta0,
            "term_2": self.terms[0],
            "term_3": self.terms[1],
        }


def _check_triple(tau1: float, tau2: float, tau3: float) -> Tuple[float, float, float]:
    taus = (float(tau1), float(tau2), float(tau3))
    if not taus[0] < taus[1] < taus[2]:
        raise OrderingError(f"need tau1 < tau2 < tau3, got {taus}")
    return taus


def signalling_marginals(initial: EnsembleState, tau1: float, tau2: float, tau3: float,
                         scenario=Scenario.SEPARATE_PAIRS) -> Dict[str, float]:
    """The four single-variable expectations entering the signalling measure.

    Keys are ``"12_2"``, ``"23_2"``, ``"13_3"``, ``"23_3"`` (context, time).
    """
    scenario = Scenario.parse(scenario)
    taus = (tau1, tau2, tau3)
    t12 = context_distribution(initial, context_schedule(taus, (1, 2)))
    t13 = context_distribution(initial, context_schedule(taus, (1, 3)))
    source23 = initial if scenario is Scenario.SEPARATE_PAIRS else EnsembleState.maximally_mixed()
    t23 = context_distribution(source23, context_schedule(taus, (2, 3)))
    return {
        "12_2": t12.expectation(1),
        "23_2": t23.expectation(0),
        "13_3": t13.expectation(1),
        "23_3": t23.expectation(1),
    }


def delta0(initial: EnsembleState, tau1: float, tau2: float, tau3: float,
           scenario=Scenario.SEPARATE_PAIRS) -> SignallingReport:
    """Marginal-selectivity violation of the three-time Leggett-Garg system."""
    scenario = Scenario.parse(scenario)
    tau1, tau2, tau3 = _check_triple(tau1, tau2, tau3)
    m = signalling_marginals(initial, tau1, tau2, tau3, scenario)
    d2 = abs(m["12_2"] - m["23_2"])
    d3 = abs(m["13_3"] - m["23_3"])
    return SignallingReport(0.5 * (d2 + d3), (d2, d3), scenario)


def delta0_closed_form(eta: float) -> float:
    """Signalling measure for a pure oscillating state at equal 2pi/3 spacings.

    ``eta`` is the phase of the first measurement relative to the moment
    the system was localized in R.
    """
    return math.sqrt(3) / 4 * (abs(math.sin(eta)) + abs(math.cos(eta - math.pi / 6)))


def noninvasiveness_residual(initial: EnsembleState, tau_i: float, tau_k: float) -> float:
    """Total-variation distance of Q at ``tau_k`` with vs. without a measurement at ``tau_i``."""
    tau_i, tau_k = float(tau_i), float(tau_k)
    if not tau_i < tau_k:
        raise OrderingError(f"need tau_i < tau_k, got ({tau_i}, {tau_k})")
    measured = context_distribution(initial, MeasurementSchedule((tau_i, tau_k), (1, 2))).marginal(1)
    unmeasured = context_distribution(initial, MeasurementSchedule((tau_k,), (2,))).marginal(0)
    return 0.5 * sum(abs(measured[q] - unmeasured[q]) for q in (1, -1))
