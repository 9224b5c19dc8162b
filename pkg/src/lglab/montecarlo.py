"""Trajectory ensembles turned into empirical tables, correlators and reports.

Every run of a context draws from its own stream, keyed by the master seed,
the initial ensemble, the schedule and the probe phases, so separate
contexts are statistically independent experiments while any single
result is reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .beables import BeableConfig, EnsembleRun, simulate_ensemble
from .inequalities import CorrelatorTriple, InequalityReport, modified_evaluate
from .quantum import EnsembleState, PureState, born_probabilities, evolve
from .sequential import (
    ContextTable,
    MeasurementSchedule,
    Outcome,
    Scenario,
    context_distribution,
    context_schedule,
    format_outcome,
    signalling_marginals,
)

TWO_PI_THIRDS = 2 * math.pi / 3


@dataclass(frozen=True)
class EmpiricalEstimate:
    value: float
    std_error: float
    n: int

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalEstimate":
        x = np.asarray(samples, dtype=float)
        n = x.size
        if n == 0:
            raise ValueError("no samples")
        se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(x.mean()), se, n)

    def deviation(self, expected: float) -> float:
        """|value - expected| in units of the standard error."""
        diff = abs(self.value - expected)
        if self.std_error > 0:
            return diff / self.std_error
        return 0.0 if diff <= 1e-12 else math.inf

    def within(self, expected: float, k: float = 3.0) -> bool:
        return self.deviation(expected) <= k


@dataclass(frozen=True)
class EnsembleSpec:
    n_trajectories: int
    initial: EnsembleState
    schedules: Tuple[MeasurementSchedule, ...] = ()
    cfg: BeableConfig = field(default_factory=BeableConfig)
    threads: int = 1

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be at least 1")
        object.__setattr__(self, "schedules", tuple(self.schedules))

    def with_initial(self, initial: EnsembleState) -> "EnsembleSpec":
        return EnsembleSpec(self.n_trajectories, initial, self.schedules, self.cfg, self.threads)


def run_context(spec: EnsembleSpec, schedule: Optional[MeasurementSchedule],
                probes: Sequence[float] = ()) -> EnsembleRun:
    phases = () if schedule is None else schedule.phases
    label = () if schedule is None else schedule.context_label
    stream = ("context", label, tuple(float(p).hex() for p in phases),
              tuple(float(p).hex() for p in probes), repr(spec.initial))
    return simulate_ensemble(spec.initial, schedule, spec.n_trajectories, spec.cfg,
                             probes=probes, stream=repr(stream), threads=spec.threads)


@dataclass(frozen=True)
class EmpiricalContextTable:
    context_label: Tuple[int, ...]
    cells: Dict[Outcome, EmpiricalEstimate]
    n: int

    def to_table(self) -> ContextTable:
        return ContextTable(self.context_label, {k: e.value for k, e in self.cells.items()})

    def to_records(self) -> List[dict]:
        label = "".join(str(i) for i in self.context_label)
        return [{"context": label, "outcome": format_outcome(k), "probability": e.value,
                 "std_error": e.std_error, "n": e.n} for k, e in sorted(self.cells.items())]


def empirical_table(outcomes: np.ndarray, label: Tuple[int, ...]) -> EmpiricalContextTable:
    n, m = outcomes.shape
    codes = ((outcomes < 0).astype(np.int64) * (1 << np.arange(m - 1, -1, -1))).sum(axis=1)
    counts = np.bincount(codes, minlength=1 << m)
    cells = {}
    for code in range(1 << m):
        key = tuple(-1 if (code >> (m - 1 - i)) & 1 else 1 for i in range(m))
        cells[key] = EmpiricalEstimate.from_samples(codes == code) if n > 1 else \
            EmpiricalEstimate(float(counts[code]) / n, 0.0, n)
    return EmpiricalContextTable(tuple(label), cells, n)


def estimate_context(spec: EnsembleSpec, schedule: MeasurementSchedule) -> EmpiricalContextTable:
    """Outcome frequencies of ``schedule`` over ``spec.n_trajectories`` runs."""
    if len(schedule) == 0:
        raise ValueError("schedule has no measurements")
    run = run_context(spec, schedule)
    return empirical_table(run.outcomes, schedule.context_label)


def _mean(samples) -> EmpiricalEstimate:
    return EmpiricalEstimate.from_samples(samples)


def _combine(value: float, *ests: EmpiricalEstimate) -> EmpiricalEstimate:
    se = math.sqrt(sum(e.std_error ** 2 for e in ests))
    return EmpiricalEstimate(value, se, min(e.n for e in ests))


@dataclass(frozen=True)
class LGEstimate:
    """Empirical Leggett-Garg experiment next to its analytic counterpart."""

    taus: Tuple[float, float, float]
    scenario: Scenario
    correlators: Dict[str, EmpiricalEstimate]
    lg_lhs: EmpiricalEstimate
    delta0: EmpiricalEstimate
    report: InequalityReport
    analytic: InequalityReport


def _empirical_delta0(m12_2: np.ndarray, m13_3: np.ndarray,
                      q23: np.ndarray) -> EmpiricalEstimate:
    a, c = m12_2.mean(), m13_3.mean()
    b, d = q23[:, 0].mean(), q23[:, 1].mean()
    s1 = 1.0 if a >= b else -1.0
    s2 = 1.0 if c >= d else -1.0
    value = float(0.5 * (abs(a - b) + abs(c - d)))
    # delta method: the two {23} marginals share trajectories
    var = (_mean(m12_2).std_error ** 2 + _mean(m13_3).std_error ** 2
           + _mean(s1 * q23[:, 0] + s2 * q23[:, 1]).std_error ** 2)
    return EmpiricalEstimate(value, 0.5 * math.sqrt(var), len(m12_2))


def _analytic_report(initial, taus, scenario) -> InequalityReport:
    c = CorrelatorTriple(*(math.cos(b - a) for a, b in
                           ((taus[0], taus[1]), (taus[1], taus[2]), (taus[0], taus[2]))))
    m = signalling_marginals(initial, *taus, scenario)
    d = 0.5 * (abs(m["12_2"] - m["23_2"]) + abs(m["13_3"] - m["23_3"]))
    return modified_evaluate(c, d)


def estimate_lg_experiment(spec: EnsembleSpec, tau1: float, tau2: float, tau3: float,
                           scenario=Scenario.SEPARATE_PAIRS) -> LGEstimate:
    """Collect the three correlators as prescribed by ``scenario`` and evaluate.

    Separate pairs: three runs {12}, {23}, {13}.  Two runs: {13} plus {123},
    with the {23} marginals of the signalling measure taken from a {23} run
    on the maximally mixed ensemble.
    """
    scenario = Scenario.parse(scenario)
    taus = (float(tau1), float(tau2), float(tau3))
    if not taus[0] <= taus[1] <= taus[2]:
        raise ValueError(f"need tau1 <= tau2 <= tau3, got {taus}")
    o13 = run_context(spec, context_schedule(taus, (1, 3))).outcomes
    p13 = o13[:, 0] * o13[:, 1]
    c13 = _mean(p13)
    if scenario is Scenario.SEPARATE_PAIRS:
        o12 = run_context(spec, context_schedule(taus, (1, 2))).outcomes
        o23 = run_context(spec, context_schedule(taus, (2, 3))).outcomes
        c12 = _mean(o12[:, 0] * o12[:, 1])
        c23 = _mean(o23[:, 0] * o23[:, 1])
        lg = _combine(1.0 + c12.value + c23.value + c13.value, c12, c23, c13)
        m12_2 = o12[:, 1]
    else:
        o123 = run_context(spec, context_schedule(taus, (1, 2, 3))).outcomes
        p12, p23 = o123[:, 0] * o123[:, 1], o123[:, 1] * o123[:, 2]
        c12, c23 = _mean(p12), _mean(p23)
        joint = _mean(p12 + p23)
        lg = _combine(1.0 + joint.value + c13.value, joint, c13)
        m12_2 = o123[:, 1]
        mixed = spec.with_initial(EnsembleState.maximally_mixed())
        o23 = run_context(mixed, context_schedule(taus, (2, 3))).outcomes
    d0 = _empirical_delta0(m12_2.astype(float), o13[:, 1].astype(float), o23.astype(float))
    triple = CorrelatorTriple(c12.value, c23.value, c13.value)
    return LGEstimate(taus, scenario, {"c12": c12, "c23": c23, "c13": c13}, lg, d0,
                      modified_evaluate(triple, d0.value),
                      _analytic_report(spec.initial, taus, scenario))


def estimate_time_slices(spec: EnsembleSpec, taus: Sequence[float]) -> Dict[str, EmpiricalEstimate]:
    """Correlators of the undisturbed beable read at ``taus`` (no measurement)."""
    run = run_context(spec, None, probes=taus)
    q = run.slices.astype(float)
    c12, c23, c13 = q[:, 0] * q[:, 1], q[:, 1] * q[:, 2], q[:, 0] * q[:, 2]
    return {"c12": _mean(c12), "c23": _mean(c23), "c13": _mean(c13),
            "lg_lhs": _mean(1.0 + c12 + c23 + c13)}


def born_p_minus(initial: EnsembleState, tau: float) -> float:
    return sum(w * born_probabilities(evolve(s, tau))[1] for w, s in initial)


def comparison_row(experiment: str, quantity: str, analytic: Optional[float],
                   est: EmpiricalEstimate, phase: Optional[float] = None) -> dict:
    return {
        "experiment": experiment,
        "quantity": quantity,
        "phase": phase,
        "analytic": analytic,
        "empirical": est.value,
        "std_error": est.std_error,
        "n": est.n,
        "deviation_se": None if analytic is None else est.deviation(analytic),
    }


def lg_records(spec: EnsembleSpec, taus: Sequence[float],
               scenario=Scenario.SEPARATE_PAIRS) -> List[dict]:
    est = estimate_lg_experiment(spec, *taus, scenario)
    a = est.analytic
    rows = [comparison_row("lg", name, getattr(a.correlators, name), est.correlators[name])
            for name in ("c12", "c23", "c13")]
    rows.append(comparison_row("lg", "lg_lhs", a.lg_lhs, est.lg_lhs))
    rows.append(comparison_row("lg", "delta0", a.delta0, est.delta0))
    for name, e in estimate_time_slices(spec, taus).items():
        rows.append(comparison_row("lg", f"slice_{name}", None, e))
    return rows


def equivariance_records(spec: EnsembleSpec, checkpoints: Sequence[float]) -> List[dict]:
    """Fraction of unmeasured beables at -1 against the Born probability."""
    run = run_context(spec, None, probes=checkpoints)
    return [comparison_row("equivariance", "p_L", born_p_minus(spec.initial, tau),
                           _mean(run.slices[:, i] < 0), phase=float(tau))
            for i, tau in enumerate(checkpoints)]


def invasiveness_records(spec: EnsembleSpec, tau_i: float, tau_k: float) -> List[dict]:
    """Distribution of Q at ``tau_k`` with and without a prior measurement at ``tau_i``."""
    measured = run_context(spec, MeasurementSchedule((tau_i, tau_k), (1, 2))).outcomes[:, 1]
    unmeasured = run_context(spec, MeasurementSchedule((tau_k,), (2,))).outcomes[:, 0]
    pm, pu = _mean(measured > 0), _mean(unmeasured > 0)
    exact_m = context_distribution(spec.initial, MeasurementSchedule((tau_i, tau_k))).marginal(1)[1]
    exact_u = context_distribution(spec.initial, MeasurementSchedule((tau_k,))).marginal(0)[1]
    tv = _combine(abs(pm.value - pu.value), pm, pu)
    return [
        comparison_row("invasiveness", "p_plus_measured", exact_m, pm, phase=tau_k),
        comparison_row("invasiveness", "p_plus_unmeasured", exact_u, pu, phase=tau_k),
        comparison_row("invasiveness", "tv_distance", abs(exact_m - exact_u), tv, phase=tau_k),
    ]


def conditional_records(spec: EnsembleSpec, tau_i: float, tau_j: float) -> List[dict]:
    """Outcome statistics conditioned on the initial beable value.

    The analytic column is the quantum prediction for the localized state
    matching the initial beable; the unconditioned rows compare with the
    full ensemble.
    """
    sched = MeasurementSchedule((tau_i, tau_j), (1, 2))
    run = run_context(spec, sched)
    later = run_context(spec, MeasurementSchedule((tau_j,), (2,))).outcomes[:, 0]
    rows = []
    for b, state in ((1, PureState.R()), (-1, PureState.L())):
        sel = run.initial_beable == b
        if not sel.any():
            continue
        table = context_distribution(EnsembleState.pure(state), sched)
        tag = "R" if b > 0 else "L"
        rows.append(comparison_row("conditional", f"p_plus_first|{tag}", table.marginal(0)[1],
                                   _mean(run.outcomes[sel, 0] > 0), phase=tau_i))
        rows.append(comparison_row("conditional", f"p_plus_second|{tag}", table.marginal(1)[1],
                                   _mean(run.outcomes[sel, 1] > 0), phase=tau_j))
    full = context_distribution(spec.initial, sched).marginal(1)[1]
    alone = context_distribution(spec.initial, MeasurementSchedule((tau_j,))).marginal(0)[1]
    rows.append(comparison_row("conditional", "p_plus_second", full,
                               _mean(run.outcomes[:, 1] > 0), phase=tau_j))
    rows.append(comparison_row("conditional", "p_plus_unmeasured", alone,
                               _mean(later > 0), phase=tau_j))
    return rows


def signalling_scan(spec: EnsembleSpec, etas: Sequence[float], spacing: float = TWO_PI_THIRDS,
                    scenario=Scenario.SEPARATE_PAIRS, empirical: bool = True) -> List[dict]:
    """Empirical vs analytic signalling measure over first-measurement phases ``eta``.

    ``spec.initial`` is the state at phase 0, so ``eta`` is measured from the
    moment an R-localized preparation was made.
    """
    if len(etas) == 0:
        raise ValueError("eta grid is empty")
    scenario = Scenario.parse(scenario)
    rows = []
    for eta in etas:
        taus = (float(eta), float(eta) + spacing, float(eta) + 2 * spacing)
        m = signalling_marginals(spec.initial, *taus, scenario)
        exact = 0.5 * (abs(m["12_2"] - m["23_2"]) + abs(m["13_3"] - m["23_3"]))
        row = {"eta": float(eta), "delta0_analytic": exact, "delta0_empirical": None,
               "std_error": None, "n": spec.n_trajectories, "deviation_se": None}
        if empirical:
            o12 = run_context(spec, context_schedule(taus, (1, 2))).outcomes
            o13 = run_context(spec, context_schedule(taus, (1, 3))).outcomes
            source = spec if scenario is Scenario.SEPARATE_PAIRS else \
                spec.with_initial(EnsembleState.maximally_mixed())
            o23 = run_context(source, context_schedule(taus, (2, 3))).outcomes
            est = _empirical_delta0(o12[:, 1].astype(float), o13[:, 1].astype(float),
                                    o23.astype(float))
            row.update(delta0_empirical=est.value, std_error=est.std_error,
                       deviation_se=est.deviation(exact))
        rows.append(row)
    return rows


def max_deviation(rows: Sequence[dict]) -> float:
    devs = [r["deviation_se"] for r in rows if r.get("deviation_se") is not None]
    return max(devs) if devs else 0.0
