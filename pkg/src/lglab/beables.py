"""Bell-type jump dynamics for the two-valued beable Q.

The pilot wave evolves unitarily and collapses onto the eigenstate of the
recorded outcome at each measurement.  Between measurements the beable
jumps with Bell's rates, built from the quantum probability current so
that the Born distribution is transported into itself.

Jumps are sampled on a step grid: in a step of width ``h`` a beable whose
outgoing rate is ``r`` (evaluated at the step midpoint) jumps with
probability ``min(1 - exp(-r h), rate_cap)``.  Rather than drawing one
Bernoulli variate per step, the first jumping step is drawn by inverting
the cumulative survival product over the grid, which has the same law.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .quantum import EnsembleState, PureState, born_probabilities, evolve, evolve_amplitudes
from .sequential import MeasurementSchedule
from .streams import derive_key, uniforms

NODE_POLICIES = ("clamp", "adaptive")
CHUNK_SIZE = 16384
_MAX_STEP_PROB = 1.0 - 2.0 ** -53


@dataclass(frozen=True)
class BeableConfig:
    dt: float = 1e-3
    node_policy: str = "adaptive"
    rate_cap: float = 0.1
    seed: int = 0
    dt_min: float = 1e-9

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if not 0 < self.rate_cap <= 1:
            raise ValueError("rate_cap must lie in (0, 1]")
        if self.node_policy not in NODE_POLICIES:
            raise ValueError(f"node_policy must be one of {NODE_POLICIES}")
        if not 0 < self.dt_min <= self.dt:
            raise ValueError("dt_min must lie in (0, dt]")
        object.__setattr__(self, "seed", int(self.seed) & ((1 << 64) - 1))


class RatePair(NamedTuple):
    rate_L_from_R: float
    rate_R_from_L: float


def _current(amp_R, amp_L, omega=1.0):
    return omega * np.imag(np.conj(amp_L) * amp_R)


def _bell_rates(amp_R, amp_L, omega=1.0):
    p_R = np.abs(amp_R) ** 2
    p_L = np.abs(amp_L) ** 2
    j = _current(amp_R, amp_L, omega)
    up = np.divide(j, p_R, out=np.zeros_like(p_R), where=(j > 0) & (p_R > 0))
    down = np.divide(-j, p_L, out=np.zeros_like(p_L), where=(j < 0) & (p_L > 0))
    return up, down


def quantum_current(state: PureState, omega: float = 1.0) -> float:
    """Probability current into L from R: 2 Im <psi|P_L H P_R|psi>."""
    return float(2.0 * np.imag(np.conj(state.amp_L) * (omega / 2.0) * state.amp_R))


def bell_rates(state: PureState, omega: float = 1.0) -> RatePair:
    """Bell's minimal rates ``max(0, j / p_source)``.

    A vanishing source probability forces a vanishing current, so the rate
    out of an empty state is reported as 0; the divergence next to a node is
    handled by the step sampler's node policy.
    """
    up, down = _bell_rates(np.array([state.amp_R]), np.array([state.amp_L]), omega)
    return RatePair(float(up[0]), float(down[0]))


def master_equation_residual(tau: float, dt: float = 1e-3) -> float:
    """|dp_L/dtau - (t_LR p_R - t_RL p_L)| for the wave started in R."""
    tau = float(tau)
    offset = tau % math.pi
    if min(offset, math.pi - offset) <= 10 * dt:
        raise ValueError(f"tau={tau} lies within 10*dt of a node")
    state = evolve(PureState.R(), tau)
    p_R, p_L = born_probabilities(state)
    rates = bell_rates(state)
    return abs(0.5 * math.sin(tau) - (rates.rate_L_from_R * p_R - rates.rate_R_from_L * p_L))


def _initial_draw(initial: EnsembleState, u_branch, u_beable):
    cum = np.cumsum(initial.weights)
    branch = np.searchsorted(cum, np.asarray(u_branch) * cum[-1], side="right")
    branch = np.minimum(branch, len(initial) - 1)
    p_R = np.array([born_probabilities(s)[0] for _, s in initial])
    beable = np.where(np.asarray(u_beable) < p_R[branch], 1, -1).astype(np.int8)
    return branch, beable


def sample_initial_beable(state: EnsembleState, rng: np.random.Generator) -> Tuple[int, int]:
    """Pick a branch by weight, then the beable from its Born distribution."""
    branch, beable = _initial_draw(state, rng.random(1), rng.random(1))
    return int(branch[0]), int(beable[0])


def _refine(starts, widths, rate_at, cap, dt_min):
    while True:
        r = rate_at(starts + widths / 2)
        split = (r * widths > cap) & (widths / 2 >= dt_min)
        if not split.any():
            return starts, widths
        reps = 1 + split.astype(np.int64)
        w = np.repeat(widths / reps, reps)
        child = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)
        starts = np.repeat(starts, reps) + child * w
        widths = w


@functools.lru_cache(maxsize=512)
def _jump_grid(amp_R: complex, amp_L: complex, anchor_phase: float, a: float, b: float,
               dt: float, policy: str, cap: float, dt_min: float):
    """Step ends and cumulative hazards for the up (+1 -> -1) and down moves."""
    n = max(1, math.ceil((b - a) / dt - 1e-9))
    starts = a + (b - a) * np.arange(n) / n
    widths = np.diff(np.append(starts, b))

    def rates(phases):
        return _bell_rates(*evolve_amplitudes(amp_R, amp_L, phases - anchor_phase))

    def rate_at(phases):
        up, down = rates(phases)
        return np.maximum(up, down)

    if policy == "adaptive":
        starts, widths = _refine(starts, widths, rate_at, cap, dt_min)
    up, down = rates(starts + widths / 2)
    hazards = []
    for r in (up, down):
        q = np.minimum(-np.expm1(-r * widths), min(cap, _MAX_STEP_PROB))
        hazards.append(np.cumsum(-np.log1p(-q)))
    ends = starts + widths
    ends[-1] = b
    return ends, hazards[0], hazards[1]


@dataclass
class EnsembleRun:
    """Per-trajectory results of an ensemble simulation."""

    trajectory: np.ndarray
    branch: np.ndarray
    initial_beable: np.ndarray
    outcomes: np.ndarray
    slices: np.ndarray
    final_beable: np.ndarray
    events: Optional[Dict[str, np.ndarray]] = None

    def __len__(self) -> int:
        return len(self.trajectory)


class _Plan(NamedTuple):
    initial: EnsembleState
    anchors: Tuple[PureState, ...]
    stops: Tuple[Tuple[float, str, int], ...]
    horizon: float
    cfg: BeableConfig
    key: int
    n_meas: int
    n_probe: int
    record: bool


def _make_plan(initial, schedule, probes, horizon, cfg, stream, record) -> _Plan:
    phases = tuple(schedule.phases) if schedule is not None else ()
    probes = tuple(float(p) for p in probes)
    last = max(phases + probes + (0.0,))
    horizon = last if horizon is None else float(horizon)
    if horizon < last:
        raise ValueError(f"horizon {horizon} precedes the last scheduled phase {last}")
    if any(p < 0 for p in phases + probes):
        raise ValueError("phases must be non-negative; the simulation starts at 0")
    stops = sorted([(p, "probe", i) for i, p in enumerate(probes)]
                   + [(p, "measure", i) for i, p in enumerate(phases)],
                   key=lambda s: (s[0], s[1] == "measure", s[2]))
    anchors = tuple(s for _, s in initial) + (PureState.R(), PureState.L())
    return _Plan(initial, anchors, tuple(stops), horizon, cfg,
                 derive_key(cfg.seed, stream), len(phases), len(probes), record)


def _segment(plan, ids, beable, ctr, anchor, anchor_phase, a, b, events):
    cfg = plan.cfg
    for g in np.unique(anchor):
        members = np.flatnonzero(anchor == g)
        psi = plan.anchors[g]
        ends, c_up, c_dn = _jump_grid(psi.amp_R, psi.amp_L, anchor_phase[g], a, b,
                                      cfg.dt, cfg.node_policy, cfg.rate_cap, cfg.dt_min)
        n = len(ends)
        pos = np.zeros(len(members), dtype=np.int64)
        active = np.arange(len(members))
        while active.size:
            rows = members[active]
            u = uniforms(plan.key, ids[rows], ctr[rows])
            ctr[rows] += 1
            target = -np.log(u)
            p0 = pos[active]
            up = beable[rows] > 0
            base = np.where(up, np.where(p0 > 0, c_up[p0 - 1], 0.0),
                            np.where(p0 > 0, c_dn[p0 - 1], 0.0))
            k = np.where(up, np.searchsorted(c_up, base + target, side="right"),
                         np.searchsorted(c_dn, base + target, side="right"))
            jumped = k < n
            hit = rows[jumped]
            beable[hit] = -beable[hit]
            if events is not None and hit.size:
                events["jump"].append((ids[hit], ends[k[jumped]], beable[hit].copy(),
                                       np.full(hit.size, g), np.full(hit.size, anchor_phase[g])))
            pos[active[jumped]] = k[jumped] + 1
            active = active[jumped & (k + 1 < n)]


def _run_chunk(plan: _Plan, ids: np.ndarray) -> EnsembleRun:
    n = len(ids)
    nb = len(plan.initial)
    ctr = np.full(n, 2, dtype=np.uint64)
    branch, beable = _initial_draw(plan.initial,
                                   uniforms(plan.key, ids, np.zeros(n, np.uint64)),
                                   uniforms(plan.key, ids, np.ones(n, np.uint64)))
    initial_beable = beable.copy()
    anchor = branch.astype(np.int64)
    anchor_phase = np.zeros(nb + 2)
    outcomes = np.zeros((n, plan.n_meas), dtype=np.int8)
    slices = np.zeros((n, plan.n_probe), dtype=np.int8)
    events = {"jump": [], "measure": []} if plan.record else None

    now = 0.0
    for phase, kind, idx in plan.stops + ((plan.horizon, "end", -1),):
        if phase > now:
            _segment(plan, ids, beable, ctr, anchor, anchor_phase, now, phase, events)
            now = phase
        if kind == "probe":
            slices[:, idx] = beable
        elif kind == "measure":
            # faithful: the record is the beable; invasive: the wave collapses onto it
            outcomes[:, idx] = beable
            anchor = np.where(beable > 0, nb, nb + 1)
            anchor_phase[nb:] = phase
            if events is not None:
                events["measure"].append((ids.copy(), np.full(n, phase), beable.copy(),
                                          anchor.copy(), np.full(n, phase)))

    packed = None
    if events is not None:
        packed = {}
        for kind, chunks in events.items():
            cols = list(zip(*chunks)) if chunks else [[]] * 5
            packed[kind] = tuple(np.concatenate(c) if len(c) else np.array([]) for c in cols)
    return EnsembleRun(ids, branch, initial_beable, outcomes, slices, beable, packed)


def simulate_ensemble(initial: EnsembleState, schedule: Optional[MeasurementSchedule],
                      n_trajectories: int, cfg: BeableConfig, probes: Sequence[float] = (),
                      horizon: Optional[float] = None, stream: str = "trajectory",
                      threads: int = 1, first_index: int = 0) -> EnsembleRun:
    """Simulate trajectories ``first_index ... first_index + n - 1`` of a stream.

    ``probes`` are phases at which the beable is read off without any
    measurement (time slices of the undisturbed process).  Results are a
    pure function of the inputs, ``cfg.seed`` and ``stream``; ``threads``
    only changes wall time.
    """
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be positive")
    plan = _make_plan(initial, schedule, probes, horizon, cfg, stream, record=False)
    ids = np.arange(first_index, first_index + n_trajectories, dtype=np.uint64)
    chunks = [ids[i:i + CHUNK_SIZE] for i in range(0, len(ids), CHUNK_SIZE)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(functools.partial(_run_chunk, plan), chunks))
    else:
        parts = [_run_chunk(plan, c) for c in chunks]
    return EnsembleRun(*(np.concatenate([getattr(p, name) for p in parts])
                         for name in ("trajectory", "branch", "initial_beable",
                                      "outcomes", "slices", "final_beable")))


@dataclass(frozen=True)
class TrajectoryEvent:
    phase: float
    kind: str
    beable: int
    amp_R: complex
    amp_L: complex


@dataclass(frozen=True)
class BeableTrajectory:
    """One sample path: the starting beable plus time-ordered events."""

    initial_beable: int
    branch: int
    events: Tuple[TrajectoryEvent, ...] = field(default=())
    index: int = 0
    initial_amp_R: complex = 1.0
    initial_amp_L: complex = 0.0

    def beable_at(self, phase: float) -> int:
        """Beable value after every event at or before ``phase``."""
        value = self.initial_beable
        for e in self.events:
            if e.phase > phase:
                break
            value = e.beable
        return value

    @property
    def jumps(self) -> Tuple[TrajectoryEvent, ...]:
        return tuple(e for e in self.events if e.kind == "jump")

    @property
    def measurements(self) -> Tuple[TrajectoryEvent, ...]:
        return tuple(e for e in self.events if e.kind == "measurement")

    def is_faithful(self) -> bool:
        value = self.initial_beable
        for e in self.events:
            if e.kind == "measurement" and e.beable != value:
                return False
            value = e.beable
        return True


def simulate_trajectory(initial: EnsembleState, schedule: Optional[MeasurementSchedule],
                        horizon: float, cfg: BeableConfig, index: int = 0,
                        stream: str = "trajectory") -> BeableTrajectory:
    """Simulate trajectory ``index`` of a stream with full event history.

    The path is the same one that :func:`simulate_ensemble` produces for
    that index under the same seed and stream.
    """
    plan = _make_plan(initial, schedule, (), horizon, cfg, stream, record=True)
    run = _run_chunk(plan, np.array([index], dtype=np.uint64))
    raw = []
    for order, (kind, label) in enumerate((("jump", "jump"), ("measure", "measurement"))):
        _, phases, values, anchors, anchor_phases = run.events[kind]
        for phase, value, g, origin in zip(phases, values, anchors, anchor_phases):
            psi = plan.anchors[int(g)]
            if kind == "jump":
                psi = evolve(psi, float(phase) - float(origin))
            raw.append((float(phase), order, label, int(value), psi))
    # a jump at the last step end of a segment precedes the measurement there
    raw.sort(key=lambda r: (r[0], r[1]))
    events = tuple(TrajectoryEvent(p, kind, v, psi.amp_R, psi.amp_L)
                   for p, _, kind, v, psi in raw)
    branch = int(run.branch[0])
    start = initial.branches[branch][1]
    return BeableTrajectory(int(run.initial_beable[0]), branch, events, int(index),
                            start.amp_R, start.amp_L)


def trajectory_records(trajectories: Sequence[BeableTrajectory]) -> List[dict]:
    """Flat event rows for CSV dumps; each path opens with an ``initial`` row."""
    rows = []
    for t in trajectories:
        a_R, a_L = complex(t.initial_amp_R), complex(t.initial_amp_L)
        rows.append({"trajectory": t.index, "phase": 0.0, "kind": "initial",
                     "beable": t.initial_beable, "amp_R_re": a_R.real, "amp_R_im": a_R.imag,
                     "amp_L_re": a_L.real, "amp_L_im": a_L.imag})
        for e in t.events:
            rows.append({"trajectory": t.index, "phase": e.phase, "kind": e.kind,
                         "beable": e.beable,
                         "amp_R_re": e.amp_R.real, "amp_R_im": e.amp_R.imag,
                         "amp_L_re": e.amp_L.real, "amp_L_im": e.amp_L.imag})
    return rows
