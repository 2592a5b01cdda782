import numpy as np
import pytest

from hasod import bench
from hasod.bench import (
    CSV_HEADER,
    InsufficientReplications,
    Metrics,
    UnknownScenario,
    aggregate_report,
    detection_accuracy,
    make_scenario,
    metrics_to_csv,
    prediction_error,
    report_markdown,
    run_benchmark,
    run_replication,
    scenario_from_dict,
    true_optimum,
)
from hasod.numkit import RandomStream


class TestScenarios:
    def test_sparse_few(self):
        t = make_scenario("sparse_few")
        assert t.critical_set == {0, 1}
        assert np.allclose(t.main_coeffs[:2], [8.0, 6.5])
        assert np.all(t.main_coeffs[2:] == 0.0)
        assert len(t.interactions) == 1
        assert len(t.quadratics) == 2
        assert t.noise_sigma == 2.0

    def test_dense_linear_spacing(self):
        t = make_scenario("dense")
        assert np.allclose(t.main_coeffs, [6.0, 5.5, 5.0, 4.5, 4.0, 3.5])
        assert t.critical_set == set(range(6))

    def test_interaction_heavy(self):
        t = make_scenario("interaction_heavy")
        assert len(t.interactions) == 5
        assert all(c == 3.0 for _, _, c in t.interactions)

    def test_quadratic_coefficients(self):
        t = make_scenario("quadratic_heavy")
        assert len(t.quadratics) == 3
        assert all(c == -2.0 for _, c in t.quadratics)

    def test_unknown_scenario(self):
        with pytest.raises(UnknownScenario):
            make_scenario("imaginary")

    def test_evaluate_composition(self):
        t = make_scenario("sparse_few")
        x = np.array([[1.0, -1.0, 0.0, 0.0, 0.0, 0.0]])
        (i, j, c) = t.interactions[0]
        expected = (
            t.main_coeffs @ x[0]
            + c * x[0, i] * x[0, j]
            + sum(q * x[0, m] ** 2 for m, q in t.quadratics)
        )
        assert abs(t.noiseless(x)[0] - expected) < 1e-12

    def test_noise_is_additive_and_recorded_stream(self):
        t = make_scenario("moderate")
        X = RandomStream(1).uniforms(30).reshape(5, 6) * 2 - 1
        noisy = t.evaluate(X, RandomStream(2))
        expected = t.noiseless(X) + 2.0 * RandomStream(2).normals(5)
        assert np.allclose(noisy, expected)

    def test_scenario_from_dict(self):
        t = scenario_from_dict(
            {
                "name": "custom",
                "main_coeffs": [5.0, 0.0, 4.0],
                "interactions": [[0, 2, 1.5]],
                "quadratics": [[0, -1.0]],
                "noise_sigma": 0.5,
            }
        )
        assert t.critical_set == {0, 2}
        assert t.noise_sigma == 0.5
        assert t.interactions == [(0, 2, 1.5)]


class TestTrueOptimum:
    def test_pure_linear_boundary(self):
        t = scenario_from_dict(
            {"name": "lin", "main_coeffs": [3.0, -2.0, 1.0], "noise_sigma": 0.0}
        )
        x, val = true_optimum(t)
        assert np.allclose(x[:3], [1.0, -1.0, 1.0], atol=1e-6)
        assert abs(val - 6.0) < 1e-6

    def test_random_search_oracle(self):
        t = make_scenario("sparse_few")
        x, val = true_optimum(t)
        draws = RandomStream(777).uniforms(600_000 * 6).reshape(600_000, 6) * 2 - 1
        best = float(np.max(t.noiseless(draws)))
        assert val >= best - 1e-4

    def test_cache_stability(self):
        t = make_scenario("moderate")
        x1, v1 = true_optimum(t)
        x2, v2 = true_optimum(t)
        assert np.array_equal(x1, x2) and v1 == v2


class TestMetricsFunctions:
    def test_da_exact(self):
        t = make_scenario("sparse_many")
        assert detection_accuracy({0, 1, 2}, t) == 1.0
        assert abs(detection_accuracy({0, 1, 5}, t) - 2 / 3) < 1e-12
        assert detection_accuracy(set(), t) == 0.0

    def test_pe(self):
        assert prediction_error(5.0, 5.0) == 0.0
        assert abs(prediction_error(1.0, 4.61) - 3.61) < 1e-12
        assert prediction_error(2.0, 7.0) == prediction_error(7.0, 2.0)


class TestReplications:
    def test_lhs_da_zero(self):
        t = make_scenario("sparse_few")
        m = run_replication("LHS", t, RandomStream(9), 0)
        assert m.da == 0.0
        assert m.total_runs == 17

    def test_sobol_runs(self):
        t = make_scenario("moderate")
        m = run_replication("Sobol", t, RandomStream(10), 0)
        assert m.total_runs == 17
        assert m.da == 0.0

    def test_std_dsd_runs(self):
        t = make_scenario("sparse_few")
        m = run_replication("StdDSD", t, RandomStream(11), 0)
        assert m.total_runs == 13
        assert 0.0 <= m.da <= 1.0

    def test_traditional_runs(self):
        t = make_scenario("sparse_few")
        m = run_replication("Traditional", t, RandomStream(12), 0)
        # 16-run screen plus a CCD on the survivors
        assert m.total_runs >= 16 + 2 * 1 + 1 + 2
        assert m.da > 0.0

    def test_unknown_method(self):
        t = make_scenario("sparse_few")
        with pytest.raises(Exception):
            run_replication("BoxBehnken", t, RandomStream(0), 0)

    def test_replication_determinism(self):
        t = make_scenario("quadratic_heavy")
        a = run_replication("StdDSD", t, RandomStream(13), 0)
        b = run_replication("StdDSD", t, RandomStream(13), 0)
        assert (a.da, a.pe, a.total_runs) == (b.da, b.pe, b.total_runs)


class TestAggregation:
    def _metrics(self):
        out = []
        for method in ("HASOD", "Traditional"):
            for scenario in ("s1", "s2"):
                for seed in range(3):
                    out.append(
                        Metrics(
                            method=method,
                            scenario=scenario,
                            seed=seed,
                            da=1.0 if method == "HASOD" else 0.5 + 0.01 * seed,
                            pe=1.0 + seed,
                            total_runs=40,
                        )
                    )
        return out

    def test_csv_header_and_rows(self):
        csv = metrics_to_csv(self._metrics())
        lines = csv.strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 13

    def test_csv_order_independent(self):
        ms = self._metrics()
        assert metrics_to_csv(ms) == metrics_to_csv(list(reversed(ms)))

    def test_report_means_and_ttest(self):
        rep = aggregate_report(self._metrics())
        assert rep["summary"]["HASOD"]["mean_da"] == 1.0
        assert rep["summary"]["HASOD"]["n"] == 6
        assert "Traditional" in rep["da_t_tests"]
        assert rep["da_t_tests"]["Traditional"]["p"] < 0.05

    def test_report_order_independent(self):
        ms = self._metrics()
        assert aggregate_report(ms) == aggregate_report(list(reversed(ms)))

    def test_hasod_only_no_ttests(self):
        ms = [m for m in self._metrics() if m.method == "HASOD"]
        rep = aggregate_report(ms)
        assert rep["da_t_tests"] == {}

    def test_insufficient_replications(self):
        ms = [Metrics("HASOD", "s1", 0, 1.0, 1.0, 40)]
        with pytest.raises(InsufficientReplications):
            aggregate_report(ms)

    def test_markdown_renders(self):
        text = report_markdown(aggregate_report(self._metrics()))
        assert text.startswith("# Benchmark comparison")
        assert "| HASOD |" in text
        assert "Welch t-tests" in text


class TestSmallBenchmark:
    def test_deterministic_csv(self):
        scenarios = [make_scenario("sparse_few")]
        a = run_benchmark(["StdDSD", "LHS"], scenarios, 2, 77)
        b = run_benchmark(["StdDSD", "LHS"], scenarios, 2, 77)
        assert metrics_to_csv(a) == metrics_to_csv(b)
        assert len(a) == 4

    def test_progress_callback(self):
        seen = []
        run_benchmark(
            ["LHS"], [make_scenario("sparse_few")], 2, 5, progress=seen.append
        )
        assert len(seen) == 2
        assert all(isinstance(m, Metrics) for m in seen)
