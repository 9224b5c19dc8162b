"""Leggett-Garg tests of a two-level system and a stochastic beable model of it."""

__version__ = "0.1.0"

from .quantum import (  # noqa: E402
    EnsembleState,
    ImpossibleOutcomeError,
    OrderingError,
    PhaseConvention,
    PureState,
    born_probabilities,
    collapse,
    evolve,
    expectation_Q,
    two_time_correlator,
)
from .sequential import (  # noqa: E402
    ContextTable,
    MeasurementSchedule,
    Scenario,
    context_distribution,
    delta0,
    delta0_closed_form,
    noninvasiveness_residual,
    signalling_marginals,
)
from .inequalities import (  # noqa: E402
    CorrelatorTriple,
    InequalityReport,
    PairwiseTables,
    analyze,
    coupling_oracle,
    lg_evaluate,
    max_violation_search,
    modified_evaluate,
    sz_evaluate,
)
from .beables import (  # noqa: E402
    BeableConfig,
    bell_rates,
    master_equation_residual,
    quantum_current,
    simulate_ensemble,
    simulate_trajectory,
)
from .montecarlo import EmpiricalEstimate, EnsembleSpec, estimate_lg_experiment  # noqa: E402
from .report import emit_report  # noqa: E402
