import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from lglab.quantum import (
    EnsembleState,
    ImpossibleOutcomeError,
    OrderingError,
    PhaseConvention,
    PureState,
    born_probabilities,
    collapse,
    evolve,
    evolve_amplitudes,
    expectation_Q,
    two_time_correlator,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
PROJ = {1: np.diag([1.0, 0.0]), -1: np.diag([0.0, 1.0])}

phases = st.floats(-20, 20, allow_nan=False)
components = st.floats(-1, 1, allow_nan=False)


def random_state(rng):
    z = rng.normal(size=2) + 1j * rng.normal(size=2)
    return PureState.from_amplitudes(z[0], z[1])


@st.composite
def pure_states(draw):
    z = [complex(draw(components), draw(components)) for _ in range(2)]
    if abs(z[0]) ** 2 + abs(z[1]) ** 2 < 1e-3:
        z[0] = 1.0
    return PureState.from_amplitudes(*z)


def propagator(tau):
    # independent route: exponentiate the flip generator directly
    return expm(-0.5j * tau * SIGMA_X)


class TestStates:
    def test_named_states(self):
        assert PureState.R().amplitudes == (1, 0)
        assert PureState.L().amplitudes == (0, 1)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            PureState(1.0, 1.0)

    def test_from_amplitudes_normalizes(self):
        s = PureState.from_amplitudes(3, 4j)
        np.testing.assert_allclose(born_probabilities(s), (0.36, 0.64), atol=1e-15)

    def test_zero_vector(self):
        with pytest.raises(ValueError):
            PureState.from_amplitudes(0, 0)

    def test_oscillating_reaches_R_at_tau0(self):
        s = evolve(PureState.oscillating(1.3), 1.3)
        np.testing.assert_allclose(s.amplitudes, (1, 0), atol=1e-15)

    def test_mixture_validation(self):
        with pytest.raises(ValueError):
            EnsembleState(((0.5, PureState.R()), (0.6, PureState.L())))
        with pytest.raises(ValueError):
            EnsembleState.mixture([1.5, -0.5], [PureState.R(), PureState.L()])
        m = EnsembleState.mixture([1, 3], [PureState.R(), PureState.L()])
        np.testing.assert_allclose(m.weights, [0.25, 0.75])

    def test_maximally_mixed(self):
        m = EnsembleState.maximally_mixed()
        assert len(m) == 2
        np.testing.assert_allclose(m.weights, [0.5, 0.5])


class TestEvolve:
    def test_identity(self):
        assert evolve(PureState.R(), 0.0).amplitudes == (1, 0)

    def test_half_period(self):
        s = evolve(PureState.R(), math.pi)
        np.testing.assert_allclose(s.amplitudes, (0, -1j), atol=1e-15)
        np.testing.assert_allclose(born_probabilities(s), (0, 1), atol=1e-15)

    def test_quarter_period(self):
        s = evolve(PureState.R(), math.pi / 2)
        r = math.sqrt(2) / 2
        np.testing.assert_allclose(s.amplitudes, (r, -1j * r), atol=1e-15)
        np.testing.assert_allclose(born_probabilities(s), (0.5, 0.5), atol=1e-15)

    def test_born_at_two_pi_thirds(self):
        p = born_probabilities(evolve(PureState.R(), 2 * math.pi / 3))
        np.testing.assert_allclose(p, (0.25, 0.75), atol=1e-15)

    def test_matches_matrix_exponential(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            s, tau = random_state(rng), rng.uniform(-30, 30)
            want = propagator(tau) @ np.array(s.amplitudes)
            np.testing.assert_allclose(evolve(s, tau).amplitudes, want, atol=1e-12)

    def test_vectorized(self):
        taus = np.linspace(0, 7, 11)
        aR, aL = evolve_amplitudes(1.0, 0.0, taus)
        np.testing.assert_allclose(aR, np.cos(taus / 2))
        np.testing.assert_allclose(aL, -1j * np.sin(taus / 2))

    @pytest.mark.parametrize("tau", [math.nan, math.inf, -math.inf])
    def test_non_finite(self, tau):
        with pytest.raises(ValueError):
            evolve(PureState.R(), tau)

    def test_unitarity(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            s = evolve(random_state(rng), rng.uniform(-50, 50))
            assert abs(sum(born_probabilities(s)) - 1) < 1e-12
            assert abs(abs(s.amp_R) ** 2 + abs(s.amp_L) ** 2 - 1) < 1e-12

    @given(pure_states(), phases, phases)
    def test_group_law(self, s, t1, t2):
        a = evolve(evolve(s, t1), t2).amplitudes
        b = evolve(s, t1 + t2).amplitudes
        np.testing.assert_allclose(a, b, atol=1e-12)

    @given(pure_states(), phases)
    def test_probability_period(self, s, tau):
        p = born_probabilities(evolve(s, tau))
        q = born_probabilities(evolve(s, tau + 2 * math.pi))
        np.testing.assert_allclose(p, q, atol=1e-12)
        # amplitudes only repeat after 4pi
        np.testing.assert_allclose(evolve(s, tau + 4 * math.pi).amplitudes,
                                   evolve(s, tau).amplitudes, atol=1e-12)


class TestCollapse:
    def test_fixed_point(self):
        assert collapse(PureState.R(), 1) == PureState.R()

    def test_projection(self):
        s = collapse(evolve(PureState.R(), math.pi / 2), -1)
        np.testing.assert_allclose([abs(a) for a in s.amplitudes], (0, 1), atol=1e-15)

    def test_impossible(self):
        with pytest.raises(ImpossibleOutcomeError):
            collapse(PureState.R(), -1)

    def test_bad_outcome(self):
        with pytest.raises(ValueError):
            collapse(PureState.R(), 0)


class TestCorrelator:
    @pytest.mark.parametrize("tau,want", [(0, 1), (math.pi / 2, 0), (2 * math.pi / 3, -0.5)])
    def test_expectation(self, tau, want):
        assert expectation_Q(tau) == pytest.approx(want, abs=1e-15)

    def test_maximal_violation_value(self):
        assert two_time_correlator(0, 2 * math.pi / 3) == pytest.approx(-0.5, abs=1e-15)

    @given(phases)
    def test_repeated_measurement(self, tau):
        assert two_time_correlator(tau, tau) == 1.0

    def test_ordering(self):
        with pytest.raises(OrderingError):
            two_time_correlator(1.0, 0.5)

    def test_against_density_matrix_chain(self):
        # independent route: Lueders rule on density matrices, arbitrary ensembles
        rng = np.random.default_rng(7)
        for _ in range(100):
            k = rng.integers(1, 4)
            states = [random_state(rng) for _ in range(k)]
            w = rng.dirichlet(np.ones(k))
            rho = sum(wi * np.outer(s.amplitudes, np.conj(s.amplitudes))
                      for wi, s in zip(w, states))
            ti = rng.uniform(0, 10)
            tj = ti + rng.uniform(0, 10)
            ui, uij = propagator(ti), propagator(tj - ti)
            r = ui @ rho @ ui.conj().T
            total = 0.0
            for a in (1, -1):
                ra = uij @ PROJ[a] @ r @ PROJ[a] @ uij.conj().T
                for b in (1, -1):
                    total += a * b * np.trace(PROJ[b] @ ra).real
            assert abs(total - two_time_correlator(ti, tj)) < 1e-12

    def test_against_state_chain(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            s = random_state(rng)
            ti = rng.uniform(0, 10)
            tj = ti + rng.uniform(0, 10)
            si = evolve(s, ti)
            total = 0.0
            for a, pa in zip((1, -1), born_probabilities(si)):
                if pa < 1e-15:
                    continue
                pb = born_probabilities(evolve(collapse(si, a), tj - ti))
                total += pa * a * (pb[0] - pb[1])
            assert abs(total - two_time_correlator(ti, tj)) < 1e-12


class TestPhaseConvention:
    def test_round_trip(self):
        pc = PhaseConvention(omega=2.5, tau0=0.3)
        assert pc.time(pc.phase(1.7)) == pytest.approx(1.7)

    def test_eta(self):
        pc = PhaseConvention(omega=2.0, tau0=0.5)
        assert pc.eta(1.0) == pytest.approx(pc.phase(1.0) - 0.5)

    def test_bad_omega(self):
        with pytest.raises(ValueError):
            PhaseConvention(omega=0.0)
