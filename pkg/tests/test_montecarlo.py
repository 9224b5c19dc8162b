import math

import numpy as np
import pytest

from lglab.beables import BeableConfig
from lglab.montecarlo import (
    EmpiricalEstimate,
    EnsembleSpec,
    conditional_records,
    empirical_table,
    equivariance_records,
    estimate_context,
    estimate_lg_experiment,
    estimate_time_slices,
    invasiveness_records,
    lg_records,
    max_deviation,
    signalling_scan,
)
from lglab.quantum import EnsembleState, PureState
from lglab.sequential import MeasurementSchedule

S = 2 * math.pi / 3
TAUS = (0.0, S, 2 * S)
PURE_R = EnsembleState.pure(PureState.R())
MIXED = EnsembleState.maximally_mixed()


def spec(n, initial=PURE_R, seed=0, threads=1):
    return EnsembleSpec(n, initial, cfg=BeableConfig(seed=seed), threads=threads)


class TestEmpiricalEstimate:
    def test_from_samples(self):
        e = EmpiricalEstimate.from_samples([1, -1, 1, 1])
        assert e.value == 0.5
        assert e.std_error == pytest.approx(np.std([1, -1, 1, 1], ddof=1) / 2)
        assert e.n == 4

    def test_deviation(self):
        e = EmpiricalEstimate(0.5, 0.1, 100)
        assert e.deviation(0.2) == pytest.approx(3.0)
        assert e.within(0.2) and not e.within(0.19)

    def test_degenerate(self):
        e = EmpiricalEstimate.from_samples([1, 1, 1])
        assert e.std_error == 0
        assert e.deviation(1.0) == 0
        assert e.deviation(0.9) == math.inf

    def test_empty(self):
        with pytest.raises(ValueError):
            EmpiricalEstimate.from_samples([])


class TestEmpiricalTable:
    def test_counts(self):
        out = np.array([[1, 1], [1, -1], [1, -1], [-1, -1]], dtype=np.int8)
        t = empirical_table(out, (1, 3))
        assert t.cells[(1, -1)].value == 0.5
        assert t.cells[(-1, 1)].value == 0.0
        assert t.to_table().product_expectation(0, 1) == pytest.approx(0.0)
        assert [r["outcome"] for r in t.to_records()] == ["-1,-1", "-1,+1", "+1,-1", "+1,+1"]

    def test_eigenstate_context(self):
        t = estimate_context(spec(1000), MeasurementSchedule((0.0,)))
        assert t.cells[(1,)].value == 1.0

    def test_mixed_pair_cells(self):
        t = estimate_context(spec(100_000, MIXED), MeasurementSchedule((0.3, 0.3 + S)))
        want = {(1, 1): 1 / 8, (1, -1): 3 / 8, (-1, 1): 3 / 8, (-1, -1): 1 / 8}
        for k, v in want.items():
            assert t.cells[k].within(v)

    def test_born_quarter(self):
        t = estimate_context(spec(100_000), MeasurementSchedule((S,)))
        assert t.cells[(1,)].within(0.25)


class TestLGExperiment:
    def test_pairs(self):
        est = estimate_lg_experiment(spec(50_000), *TAUS)
        assert est.lg_lhs.within(-0.5)
        assert est.delta0.within(0.375)
        assert est.analytic.lg_lhs == pytest.approx(-0.5, abs=1e-12)

    def test_two_runs(self):
        est = estimate_lg_experiment(spec(50_000), 0.4, 0.4 + S, 0.4 + 2 * S, "two-runs")
        assert est.lg_lhs.within(-0.5)
        assert est.delta0.within(0.5 * abs(math.cos(0.4)))

    def test_mixed_reversal(self):
        est = estimate_lg_experiment(spec(50_000, MIXED), *TAUS)
        assert est.delta0.within(0.0)
        assert est.analytic.contextual

    def test_time_slices_oracle(self):
        # from R, only R->L jumps happen on (0, pi) and only L->R on (pi, 2pi);
        # at pi every path sits at L, so Q(4pi/3) is independent of Q(2pi/3):
        # c12 = c13 = -1/2, c23 = 1/4 and the slice LG sum is 1/4
        sl = estimate_time_slices(spec(100_000), TAUS)
        assert sl["c12"].within(-0.5)
        assert sl["c23"].within(0.25)
        assert sl["c13"].within(-0.5)
        assert sl["lg_lhs"].within(0.25)

    def test_records_deterministic(self):
        a = lg_records(spec(5000), TAUS)
        b = lg_records(spec(5000, threads=3), TAUS)
        assert a == b
        assert {r["quantity"] for r in a} >= {"c12", "c23", "c13", "lg_lhs", "delta0"}

    def test_error_bar_calibration(self):
        hits = 0
        for seed in range(100):
            t = estimate_context(spec(10_000, seed=seed), MeasurementSchedule((0.0, S)))
            prod = np.array([k[0] * k[1] for k in t.cells])
            probs = np.array([c.value for c in t.cells.values()])
            c = float(prod @ probs)
            se = math.sqrt(max(1 - c * c, 0) / 10_000)
            hits += abs(c + 0.5) <= 2 * se
        assert hits >= 90


class TestExperiments:
    def test_equivariance(self):
        rows = equivariance_records(spec(20_000), np.linspace(0, 2 * math.pi, 20))
        assert len(rows) == 20
        assert max_deviation(rows) < 3

    def test_invasiveness(self):
        rows = {r["quantity"]: r for r in invasiveness_records(spec(20_000), math.pi / 2, math.pi)}
        assert rows["tv_distance"]["analytic"] == pytest.approx(0.5, abs=1e-12)
        assert rows["tv_distance"]["deviation_se"] < 3

    def test_conditional(self):
        rows = {r["quantity"]: r for r in conditional_records(spec(40_000, MIXED), math.pi / 3,
                                                                math.pi)}
        # half-angle conditionals at (pi/3, pi)
        assert rows["p_plus_second|R"]["analytic"] == pytest.approx(0.375, abs=1e-12)
        assert rows["p_plus_second|L"]["analytic"] == pytest.approx(0.625, abs=1e-12)
        assert all(r["deviation_se"] < 3 for r in rows.values())

    def test_scan_analytic_only(self):
        rows = signalling_scan(spec(10), [0.0, math.pi / 3], empirical=False)
        assert rows[1]["delta0_analytic"] == pytest.approx(0.75, abs=1e-12)
        assert rows[0]["delta0_empirical"] is None

    def test_scan_pure(self):
        rows = signalling_scan(spec(100_000), np.arange(12) * (2 * math.pi / 12))
        assert max_deviation(rows) < 3
        assert rows[2]["delta0_analytic"] == pytest.approx(0.75, abs=1e-12)

    def test_scan_mixed(self):
        rows = signalling_scan(spec(50_000, MIXED), np.arange(6) * (2 * math.pi / 6))
        assert all(r["delta0_analytic"] < 1e-12 for r in rows)
        assert max_deviation(rows) < 3

    def test_scan_empty(self):
        with pytest.raises(ValueError):
            signalling_scan(spec(10), [])
