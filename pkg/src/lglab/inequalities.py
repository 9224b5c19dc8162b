"""Leggett-Garg, Suppes-Zanotti and signalling-corrected inequalities.

The coupling oracle decides contextuality directly from the three pairwise
tables by linear programming over all joint distributions of the six
context-indexed variables, independently of the closed-form bounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import linprog, minimize

from .sequential import (
    ContextTable,
    Scenario,
    context_distribution,
    context_schedule,
    delta0 as _delta0,
)
from .quantum import EnsembleState

VERDICT_TOL = 1e-12
FEASIBILITY_TOL = 1e-9


class InfeasibleTablesError(ValueError):
    """Raised when pairwise tables are not valid probability tables."""


@dataclass(frozen=True)
class CorrelatorTriple:
    c12: float
    c23: float
    c13: float

    def __post_init__(self):
        for name in ("c12", "c23", "c13"):
            v = float(getattr(self, name))
            if not -1 - 1e-12 <= v <= 1 + 1e-12:
                raise ValueError(f"{name}={v!r} outside [-1, 1]")
            object.__setattr__(self, name, v)

    @property
    def total(self) -> float:
        return self.c12 + self.c23 + self.c13

    @property
    def smallest(self) -> float:
        return min(self.c12, self.c23, self.c13)

    @classmethod
    def from_spacings(cls, alpha: float, beta: float) -> "CorrelatorTriple":
        return cls(math.cos(alpha), math.cos(beta), math.cos(alpha + beta))


def lg_evaluate(c: CorrelatorTriple, tol: float = VERDICT_TOL) -> Tuple[float, bool]:
    lhs = 1.0 + c.c12 + c.c23 + c.c13
    return lhs, lhs >= -tol


def sz_evaluate(c: CorrelatorTriple, tol: float = VERDICT_TOL) -> Tuple[bool, bool]:
    s = c.total
    return s >= -1.0 - tol, s <= 1.0 + 2.0 * c.smallest + tol


@dataclass(frozen=True)
class InequalityReport:
    correlators: CorrelatorTriple
    lg_lhs: float
    sz_lower: float
    sz_upper: float
    modified_lower: float
    modified_upper: float
    delta0: float
    verdicts: dict
    margins: dict

    @property
    def correlator_sum(self) -> float:
        return self.correlators.total

    @property
    def contextual(self) -> bool:
        return not self.verdicts["modified"]

    def verdict_text(self, name: str) -> str:
        if self.verdicts[name]:
            return "satisfied"
        return "violated (contextual)" if name == "modified" else "violated"

    def to_record(self) -> dict:
        c = self.correlators
        return {
            "c12": c.c12,
            "c23": c.c23,
            "c13": c.c13,
            "correlator_sum": c.total,
            "lg_lhs": self.lg_lhs,
            "lg_verdict": self.verdict_text("lg"),
            "lg_margin": self.margins["lg"],
            "sz_lower": self.sz_lower,
            "sz_upper": self.sz_upper,
            "sz_verdict": self.verdict_text("sz"),
            "sz_margin": self.margins["sz"],
            "delta0": self.delta0,
            "modified_lower": self.modified_lower,
            "modified_upper": self.modified_upper,
            "modified_verdict": self.verdict_text("modified"),
            "modified_margin": self.margins["modified"],
        }


def modified_evaluate(c: CorrelatorTriple, delta0: float,
                      tol: float = VERDICT_TOL) -> InequalityReport:
    """Evaluate all three inequalities; the modified one widens SZ by 2*delta0.

    Margins are signed distances to the nearest bound, negative when the
    inequality is violated.
    """
    if not delta0 >= 0:
        raise ValueError(f"delta0 must be non-negative, got {delta0!r}")
    lhs, lg_ok = lg_evaluate(c, tol)
    s = c.total
    sz_lower, sz_upper = -1.0, 1.0 + 2.0 * c.smallest
    mod_lower, mod_upper = sz_lower - 2.0 * delta0, sz_upper + 2.0 * delta0
    sz_margin = min(s - sz_lower, sz_upper - s)
    mod_margin = min(s - mod_lower, mod_upper - s)
    return InequalityReport(
        correlators=c,
        lg_lhs=lhs,
        sz_lower=sz_lower,
        sz_upper=sz_upper,
        modified_lower=mod_lower,
        modified_upper=mod_upper,
        delta0=float(delta0),
        verdicts={"lg": lg_ok, "sz": sz_margin >= -tol, "modified": mod_margin >= -tol},
        margins={"lg": lhs, "sz": sz_margin, "modified": mod_margin},
    )


def correlators(initial: EnsembleState, tau1: float, tau2: float, tau3: float,
                scenario=Scenario.SEPARATE_PAIRS) -> CorrelatorTriple:
    """Product expectations read off the context tables of the chosen scenario."""
    scenario = Scenario.parse(scenario)
    taus = (tau1, tau2, tau3)
    t13 = context_distribution(initial, context_schedule(taus, (1, 3)))
    if scenario is Scenario.SEPARATE_PAIRS:
        t12 = context_distribution(initial, context_schedule(taus, (1, 2)))
        t23 = context_distribution(initial, context_schedule(taus, (2, 3)))
        return CorrelatorTriple(t12.product_expectation(0, 1), t23.product_expectation(0, 1),
                                t13.product_expectation(0, 1))
    t123 = context_distribution(initial, context_schedule(taus, (1, 2, 3)))
    return CorrelatorTriple(t123.product_expectation(0, 1), t123.product_expectation(1, 2),
                            t13.product_expectation(0, 1))


def analyze(initial: EnsembleState, tau1: float, tau2: float, tau3: float,
            scenario=Scenario.SEPARATE_PAIRS) -> InequalityReport:
    """Full analytic pipeline for one preparation and one triple of phases."""
    c = correlators(initial, tau1, tau2, tau3, scenario)
    d = _delta0(initial, tau1, tau2, tau3, scenario).delta0
    return modified_evaluate(c, d)


def lg_lhs_spacings(alpha, beta):
    """1 + cos(a) + cos(b) + cos(a + b), vectorized."""
    alpha, beta = np.asarray(alpha), np.asarray(beta)
    return 1.0 + np.cos(alpha) + np.cos(beta) + np.cos(alpha + beta)


class MaxViolation(NamedTuple):
    alpha: float
    beta: float
    lhs: float


def _lhs_and_grad(x):
    a, b = x
    val = 1.0 + math.cos(a) + math.cos(b) + math.cos(a + b)
    grad = np.array([-math.sin(a) - math.sin(a + b), -math.sin(b) - math.sin(a + b)])
    return val, grad


def max_violation_search(resolution: int = 1000, line: Optional[str] = None) -> MaxViolation:
    """Minimize the LG left-hand side over the spacings (alpha, beta).

    A full grid scan over [0, 2pi)^2 is refined by BFGS.  The two global
    minima are exact ties; the one with the smaller spacings is returned.
    ``line`` restricts the search to ``"diagonal"`` (alpha = beta) or
    ``"anti-diagonal"`` (alpha = pi - beta).
    """
    if resolution < 1000:
        raise ValueError("resolution must be at least 1000 points per axis")
    grid = np.arange(resolution) * (2 * math.pi / resolution)
    if line == "anti-diagonal":
        values = lg_lhs_spacings(math.pi - grid, grid)
        k = int(np.argmin(values))
        return MaxViolation(float((math.pi - grid[k]) % (2 * math.pi)), float(grid[k]),
                            float(values[k]))
    if line == "diagonal":
        values = lg_lhs_spacings(grid, grid)
        k = int(np.argmin(values))
        res = minimize(lambda x: _lhs_and_grad((x[0], x[0]))[0], [grid[k]], method="BFGS",
                       jac=lambda x: np.array([_lhs_and_grad((x[0], x[0]))[1].sum()]),
                       options={"gtol": 1e-13})
        a = float(res.x[0] % (2 * math.pi))
        return MaxViolation(a, a, float(lg_lhs_spacings(a, a)))
    if line is not None:
        raise ValueError(f"unknown line restriction {line!r}")

    values = lg_lhs_spacings(grid[:, None], grid[None, :])
    # lexicographically first among numerical ties
    flat = np.flatnonzero(values.ravel() <= values.min() + 1e-12)[0]
    i, j = np.unravel_index(flat, values.shape)
    res = minimize(_lhs_and_grad, [grid[i], grid[j]], jac=True, method="BFGS",
                   options={"gtol": 1e-13})
    a, b = (float(v % (2 * math.pi)) for v in res.x)
    return MaxViolation(a, b, float(lg_lhs_spacings(a, b)))


@dataclass(frozen=True)
class PairwiseTables:
    """Two-outcome joint tables of the contexts {12}, {23} and {13}."""

    t12: ContextTable
    t23: ContextTable
    t13: ContextTable

    def __post_init__(self):
        for name in ("t12", "t23", "t13"):
            t = getattr(self, name)
            if len(t) != 2:
                raise InfeasibleTablesError(f"{name} is not a two-measurement table")

    @classmethod
    def from_state(cls, initial: EnsembleState, tau1: float, tau2: float,
                   tau3: float) -> "PairwiseTables":
        taus = (tau1, tau2, tau3)
        return cls(*(context_distribution(initial, context_schedule(taus, ctx))
                     for ctx in ((1, 2), (2, 3), (1, 3))))

    @classmethod
    def from_arrays(cls, p12, p23, p13) -> "PairwiseTables":
        """Build from 2x2 arrays indexed ``[first == -1, second == -1]``."""
        tables = []
        for label, arr in (((1, 2), p12), ((2, 3), p23), ((1, 3), p13)):
            arr = np.asarray(arr, dtype=float)
            if arr.shape != (2, 2) or np.any(arr < -FEASIBILITY_TOL) \
                    or abs(arr.sum() - 1) > FEASIBILITY_TOL:
                raise InfeasibleTablesError(f"table {label} is not a probability table")
            cells = {(a, b): float(arr[int(a < 0), int(b < 0)])
                     for a in (1, -1) for b in (1, -1)}
            # ContextTable demands exact normalization; rescale within tolerance
            total = sum(cells.values())
            tables.append(ContextTable(label, {k: max(v, 0.0) / total for k, v in cells.items()}))
        return cls(*tables)

    def marginal_expectations(self) -> dict:
        return {
            "12_1": self.t12.expectation(0), "12_2": self.t12.expectation(1),
            "23_2": self.t23.expectation(0), "23_3": self.t23.expectation(1),
            "13_1": self.t13.expectation(0), "13_3": self.t13.expectation(1),
        }

    def correlators(self) -> CorrelatorTriple:
        return CorrelatorTriple(self.t12.product_expectation(0, 1),
                                self.t23.product_expectation(0, 1),
                                self.t13.product_expectation(0, 1))


class OracleResult(NamedTuple):
    min_mismatch: float
    contextual: bool
    delta0_check: float


# atom bits: Q12_1, Q12_2, Q23_2, Q23_3, Q13_1, Q13_3
_ATOMS = np.array(list(itertools.product((1, -1), repeat=6)))
_PAIR_COLUMNS = {"t12": (0, 1), "t23": (2, 3), "t13": (4, 5)}
_MISMATCH = ((_ATOMS[:, 0] != _ATOMS[:, 4]).astype(float)
             + (_ATOMS[:, 1] != _ATOMS[:, 2])
             + (_ATOMS[:, 3] != _ATOMS[:, 5]))


def coupling_oracle(tables: PairwiseTables) -> OracleResult:
    """Minimal total mismatch of same-time variables over all 64-atom couplings.

    The system is contextual when that minimum exceeds the sum of the
    individually attainable minima, which depend on the marginals alone.
    """
    rows, rhs = [], []
    for name, (ca, cb) in _PAIR_COLUMNS.items():
        table = getattr(tables, name)
        for (qa, qb), p in table.outcomes.items():
            if p < -FEASIBILITY_TOL:
                raise InfeasibleTablesError(f"negative probability in {name}")
            rows.append(((_ATOMS[:, ca] == qa) & (_ATOMS[:, cb] == qb)).astype(float))
            rhs.append(p)
    res = linprog(_MISMATCH, A_eq=np.array(rows), b_eq=np.array(rhs), bounds=(0, None),
                  method="highs")
    if res.status != 0:
        raise InfeasibleTablesError(f"no coupling matches the tables: {res.message}")

    m = tables.marginal_expectations()
    d = 0.5 * (abs(m["12_1"] - m["13_1"]) + abs(m["12_2"] - m["23_2"])
               + abs(m["13_3"] - m["23_3"]))
    best = max(float(res.fun), 0.0)
    return OracleResult(best, best > d + FEASIBILITY_TOL, d)


def random_instance(rng: np.random.Generator):
    """Random preparation and phase triple for concordance checks.

    Branches are either oscillating states with a random reference phase or
    arbitrary complex superpositions; weights are Dirichlet distributed.
    """
    from .quantum import PureState

    k = int(rng.integers(1, 4))
    states = []
    for _ in range(k):
        if rng.random() < 0.5:
            states.append(PureState.oscillating(rng.uniform(0, 2 * math.pi)))
        else:
            z = rng.normal(size=2) + 1j * rng.normal(size=2)
            states.append(PureState.from_amplitudes(z[0], z[1]))
    initial = EnsembleState.mixture(rng.dirichlet(np.ones(k)), states)
    tau1 = rng.uniform(0, 2 * math.pi)
    s1, s2 = rng.uniform(0.05, 2 * math.pi, size=2)
    return initial, (tau1, tau1 + s1, tau1 + s1 + s2)


def concordance_row(label: str, initial: EnsembleState, taus) -> dict:
    tables = PairwiseTables.from_state(initial, *taus)
    oracle = coupling_oracle(tables)
    report = analyze(initial, *taus)
    return {
        "instance": label,
        "tau1": taus[0], "tau2": taus[1], "tau3": taus[2],
        "correlator_sum": report.correlator_sum,
        "delta0": report.delta0,
        "modified_margin": report.margins["modified"],
        "min_mismatch": oracle.min_mismatch,
        "delta0_check": oracle.delta0_check,
        "oracle_contextual": oracle.contextual,
        "modified_contextual": report.contextual,
        "agree": oracle.contextual == report.contextual,
    }


def oracle_concordance(n_instances: int = 500, seed: int = 0) -> list:
    """Oracle vs. modified-inequality verdicts on canonical and random instances."""
    from .quantum import PureState

    s = 2 * math.pi / 3
    rows = [
        concordance_row("pure-eta0", EnsembleState.pure(PureState.R()), (0.0, s, 2 * s)),
        concordance_row("mixed", EnsembleState.maximally_mixed(), (0.0, s, 2 * s)),
    ]
    rng = np.random.default_rng(seed)
    for i in range(n_instances):
        initial, taus = random_instance(rng)
        rows.append(concordance_row(f"random-{i}", initial, taus))
    return rows
