"""Two-level dynamics in the localized flux basis {R, L}.

All times are dimensionless phases ``tau = omega * (t - t0)``.  The
Hamiltonian is ``(omega / 2) * X`` where ``X`` swaps R and L, so that a
system started in R oscillates as

    psi(tau) = cos(tau/2) |R> - i sin(tau/2) |L>.

The observable Q is +1 on R and -1 on L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

import numpy as np

NORM_TOL = 1e-12


class ImpossibleOutcomeError(ValueError):
    """Raised when collapsing onto an outcome with zero Born probability."""


class OrderingError(ValueError):
    """Raised when measurement phases are given out of order."""


def _check_finite(tau: float, name: str = "tau") -> float:
    tau = float(tau)
    if not math.isfinite(tau):
        raise ValueError(f"{name} must be finite, got {tau!r}")
    return tau


@dataclass(frozen=True)
class PureState:
    """Normalized amplitude pair ``(amp_R, amp_L)``."""

    amp_R: complex
    amp_L: complex

    def __post_init__(self):
        object.__setattr__(self, "amp_R", complex(self.amp_R))
        object.__setattr__(self, "amp_L", complex(self.amp_L))
        norm = abs(self.amp_R) ** 2 + abs(self.amp_L) ** 2
        if not abs(norm - 1.0) <= NORM_TOL:
            raise ValueError(f"state not normalized: |a_R|^2 + |a_L|^2 = {norm!r}")

    @classmethod
    def R(cls) -> "PureState":
        return cls(1.0, 0.0)

    @classmethod
    def L(cls) -> "PureState":
        return cls(0.0, 1.0)

    @classmethod
    def from_amplitudes(cls, amp_R: complex, amp_L: complex) -> "PureState":
        """Build a state from unnormalized amplitudes."""
        norm = math.sqrt(abs(amp_R) ** 2 + abs(amp_L) ** 2)
        if norm == 0.0 or not math.isfinite(norm):
            raise ValueError("amplitudes must be finite and not both zero")
        return cls(complex(amp_R) / norm, complex(amp_L) / norm)

    @classmethod
    def oscillating(cls, tau0: float) -> "PureState":
        """State at phase 0 of a system that was localized in R at phase ``tau0``."""
        return evolve(cls.R(), -_check_finite(tau0, "tau0"))

    @property
    def amplitudes(self) -> Tuple[complex, complex]:
        return self.amp_R, self.amp_L


@dataclass(frozen=True)
class EnsembleState:
    """Discrete mixture of pure states, ``branches = ((weight, state), ...)``."""

    branches: Tuple[Tuple[float, PureState], ...]

    def __post_init__(self):
        branches = tuple((float(w), s) for w, s in self.branches)
        if not branches:
            raise ValueError("ensemble needs at least one branch")
        for w, s in branches:
            if not (w >= 0.0 and math.isfinite(w)):
                raise ValueError(f"branch weight must be non-negative, got {w!r}")
            if not isinstance(s, PureState):
                raise TypeError("branches must hold PureState instances")
        total = sum(w for w, _ in branches)
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"branch weights sum to {total!r}, expected 1")
        object.__setattr__(self, "branches", branches)

    @classmethod
    def pure(cls, state: PureState) -> "EnsembleState":
        return cls(((1.0, state),))

    @classmethod
    def maximally_mixed(cls) -> "EnsembleState":
        """Equal-weight mixture of the two localized states."""
        return cls(((0.5, PureState.R()), (0.5, PureState.L())))

    @classmethod
    def mixture(cls, weights: Sequence[float], states: Sequence[PureState]) -> "EnsembleState":
        weights = np.asarray(weights, dtype=float)
        if len(weights) != len(states):
            raise ValueError("weights and states differ in length")
        if np.any(weights < 0) or weights.sum() <= 0:
            raise ValueError("weights must be non-negative with positive sum")
        weights = weights / weights.sum()
        return cls(tuple(zip(weights.tolist(), states)))

    def __iter__(self) -> Iterator[Tuple[float, PureState]]:
        return iter(self.branches)

    def __len__(self) -> int:
        return len(self.branches)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.branches])


@dataclass(frozen=True)
class PhaseConvention:
    """Converts laboratory times into dimensionless phases.

    ``omega`` is the tunnelling splitting over hbar; ``tau0`` is the phase
    offset of the reference time t0, so ``eta = phase(t1) - tau0``.
    """

    omega: float = 1.0
    tau0: float = 0.0

    def __post_init__(self):
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValueError("omega must be positive and finite")
        _check_finite(self.tau0, "tau0")

    def phase(self, t: float) -> float:
        return self.omega * float(t)

    def time(self, tau: float) -> float:
        return float(tau) / self.omega

    def eta(self, t1: float) -> float:
        return self.phase(t1) - self.tau0


def evolve_amplitudes(amp_R, amp_L, tau):
    """Vectorized form of :func:`evolve` acting on raw amplitudes."""
    c = np.cos(np.asarray(tau) / 2)
    s = np.sin(np.asarray(tau) / 2)
    return c * amp_R - 1j * s * amp_L, c * amp_L - 1j * s * amp_R


def evolve(state: PureState, tau: float) -> PureState:
    """Free evolution by phase ``tau`` (negative values run backwards)."""
    tau = _check_finite(tau)
    c, s = math.cos(tau / 2), math.sin(tau / 2)
    return PureState(
        c * state.amp_R - 1j * s * state.amp_L,
        c * state.amp_L - 1j * s * state.amp_R,
    )


def born_probabilities(state: PureState) -> Tuple[float, float]:
    p_R = abs(state.amp_R) ** 2
    p_L = abs(state.amp_L) ** 2
    # renormalize away the last-ulp drift so the pair sums to one
    total = p_R + p_L
    return p_R / total, p_L / total


def collapse(state: PureState, outcome: int) -> PureState:
    """Projective collapse onto the eigenstate for ``outcome`` in {+1, -1}."""
    if outcome not in (1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")
    p_R, p_L = born_probabilities(state)
    if (p_R if outcome == 1 else p_L) == 0.0:
        raise ImpossibleOutcomeError(f"outcome {outcome:+d} has zero probability")
    return PureState.R() if outcome == 1 else PureState.L()


def expectation_Q(tau_rel: float) -> float:
    """<Q> at phase ``tau_rel`` after the system was localized in R."""
    return math.cos(_check_finite(tau_rel, "tau_rel"))


def two_time_correlator(tau_i: float, tau_j: float) -> float:
    """<Q(tau_i) Q(tau_j)> for two successive projective measurements.

    The value does not depend on the initial state as long as it is a
    mixture of states of the oscillating form.
    """
    tau_i = _check_finite(tau_i, "tau_i")
    tau_j = _check_finite(tau_j, "tau_j")
    if tau_i > tau_j:
        raise OrderingError(f"tau_i={tau_i} must not exceed tau_j={tau_j}")
    return math.cos(tau_j - tau_i)
