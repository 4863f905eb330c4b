import numpy as np
import pytest
from scipy import stats

import swlb.sim_harness as sim_harness
from swlb import (
    ConfigError,
    Sim1Config,
    Sim2Config,
    TooManyFailures,
    draw_informative_sample,
    generate_population_sim1,
    generate_population_sim2,
    inclusion_probabilities,
    run_monte_carlo,
    substream,
)
from swlb.report_io import dumps_canonical, replication_report_to_dict
from swlb.sim_harness import FinitePopulation, coverage_fraction


def sim1(**overrides) -> Sim1Config:
    base = dict(
        population_size=100_000,
        sample_size=1000,
        replications=10,
        rho=0.8,
        b1=0.1,
    )
    base.update(overrides)
    return Sim1Config(**base)


def sim2(**overrides) -> Sim2Config:
    base = dict(
        population_size=100_000,
        sample_size=1000,
        replications=10,
        rho=0.8,
        b1=0.1,
    )
    base.update(overrides)
    return Sim2Config(**base)


class TestInclusionProbabilities:
    def test_table_value(self):
        assert inclusion_probabilities(0.0, -1.8, 0.1)[()] == pytest.approx(
            0.0359303, abs=1e-6
        )

    def test_constant_under_zero_slope(self):
        pi = inclusion_probabilities(np.array([-5.0, 0.0, 7.0]), -1.8, 0.0)
        np.testing.assert_array_equal(pi, pi[0])

    def test_limits(self):
        pi = inclusion_probabilities(np.array([-1e6, 1e6]), -1.8, 0.1)
        assert pi[0] > 0.0
        assert pi[1] == 1.0


class TestGeneratePopulationSim1:
    def test_moments_and_correlation(self):
        config = sim1()
        pop = generate_population_sim1(config, substream(51))
        x, z = pop.variables[:, 0], pop.variables[:, 1]
        assert x.mean() == pytest.approx(10.0, abs=0.05)
        assert x.std() == pytest.approx(4.0, abs=0.05)
        assert z.std() == pytest.approx(3.0, abs=0.04)
        assert np.corrcoef(x, z)[0, 1] == pytest.approx(0.8, abs=0.01)
        np.testing.assert_array_equal(
            pop.inclusion_probs, inclusion_probabilities(z, config.b0, config.b1)
        )

    def test_zero_correlation(self):
        pop = generate_population_sim1(sim1(rho=0.0), substream(52))
        r = np.corrcoef(pop.variables[:, 0], pop.variables[:, 1])[0, 1]
        assert abs(r) < 0.01


class TestGeneratePopulationSim2:
    def test_response_rate_matches_integrated_probit(self):
        config = sim2()
        pop = generate_population_sim2(config, substream(53))
        y = pop.variables[:, 1]
        expected = stats.norm.cdf(
            config.beta * config.mu_x
            / np.sqrt(config.sigma_v2 + config.beta**2 * config.sigma_x2)
        )
        assert expected == pytest.approx(0.5398, abs=1e-3)
        assert y.mean() == pytest.approx(expected, abs=0.005)

    def test_symmetric_when_beta_zero(self):
        pop = generate_population_sim2(sim2(beta=0.0), substream(54))
        assert pop.variables[:, 1].mean() == pytest.approx(0.5, abs=0.005)

    def test_response_selection_coupling(self):
        # cov(Y, Z) = rho * sigma_z * E[phi(beta X / sigma_v)] for the
        # latent pair, a closed form under X ~ N(mu_x, sigma_x2).
        config = sim2()
        pop = generate_population_sim2(config, substream(55))
        y, z = pop.variables[:, 1], pop.variables[:, 2]
        s = np.sqrt(config.sigma_v2)
        m = config.beta * config.mu_x / s
        w2 = config.beta**2 * config.sigma_x2 / config.sigma_v2
        expected_cov = (
            config.rho
            * np.sqrt(config.sigma_z2)
            * stats.norm.pdf(m / np.sqrt(1 + w2))
            / np.sqrt(1 + w2)
        )
        observed = np.mean((y - y.mean()) * (z - z.mean()))
        assert observed == pytest.approx(expected_cov, abs=0.01)

    def test_covariate_is_nearly_constant(self):
        config = sim2()
        pop = generate_population_sim2(config, substream(56))
        x = pop.variables[:, 0]
        assert x.mean() == pytest.approx(1.0, abs=0.005)
        assert x.std() == pytest.approx(0.1, abs=0.005)


class TestDrawInformativeSample:
    def test_equal_probabilities_reduce_to_srs(self):
        n_pop, n, reps = 50, 10, 2000
        pop = FinitePopulation(
            variables=np.arange(n_pop, dtype=float).reshape(-1, 1),
            inclusion_probs=np.full(n_pop, 0.2),
            response_column=0,
        )
        counts = np.zeros(n_pop)
        rng = substream(61)
        for _ in range(reps):
            sample = draw_informative_sample(pop, n, rng)
            counts[sample.response.astype(int)] += 1
        freq = counts / reps
        np.testing.assert_allclose(freq, n / n_pop, atol=0.05)

    def test_two_unit_proportional_selection(self):
        pop = FinitePopulation(
            variables=np.array([[0.0], [1.0]]),
            inclusion_probs=np.array([0.2, 0.4]),
            response_column=0,
        )
        rng = substream(62)
        picked_second = 0
        reps = 10_000
        for _ in range(reps):
            idx = np.argmin(rng.standard_exponential(2) / pop.inclusion_probs)
            picked_second += int(idx == 1)
        assert picked_second / reps == pytest.approx(2.0 / 3.0, abs=0.02)

    def test_weights_are_inverse_inclusion_probabilities(self):
        pop = generate_population_sim1(sim1(), substream(63))
        sample = draw_informative_sample(pop, 500, substream(64))
        assert sample.n == 500
        assert np.all(sample.raw_weights >= 1.0)

    def test_hajek_mean_corrects_selection_bias(self):
        pop = generate_population_sim1(sim1(), substream(65))
        sample = draw_informative_sample(pop, 1000, substream(66))
        naive = sample.response.mean()
        hajek = np.average(sample.response, weights=sample.raw_weights)
        assert abs(naive - 10.0) > 1.0  # selection bias clearly visible
        assert hajek == pytest.approx(10.0, abs=0.2)

    def test_hajek_mean_unbiased_over_replications(self):
        # 200 fresh population/sample pairs; the mean of Hajek means
        # stays within 3 Monte Carlo standard errors of the truth.  The
        # population is kept large relative to n so that successive
        # sampling stays in its proportional regime.
        config = sim1(population_size=50_000, sample_size=1000)
        hajek = np.empty(200)
        for r in range(200):
            pop = sim_harness.generate_population(config, substream(67, r, 0))
            sample = draw_informative_sample(pop, config.sample_size, substream(67, r, 1))
            hajek[r] = np.average(sample.response, weights=sample.raw_weights)
        se = hajek.std(ddof=1) / np.sqrt(hajek.size)
        assert abs(hajek.mean() - 10.0) <= 3 * se

    def test_sample_size_validated(self):
        pop = generate_population_sim1(
            sim1(population_size=100, sample_size=50), substream(68)
        )
        with pytest.raises(ConfigError):
            draw_informative_sample(pop, 101, substream(69))


class TestCoverageFraction:
    def test_infinite_intervals_cover_exactly(self):
        assert coverage_fraction([-np.inf] * 5, [np.inf] * 5, 10.0) == 1.0

    def test_empty_intervals_never_cover(self):
        assert coverage_fraction([1.0] * 5, [-1.0] * 5, 0.0) == 0.0


class TestConfigs:
    def test_sample_larger_than_population_rejected(self):
        with pytest.raises(ConfigError):
            sim1(population_size=10, sample_size=11)

    def test_rho_range(self):
        with pytest.raises(ConfigError):
            sim1(rho=1.0)

    def test_positive_variances(self):
        with pytest.raises(ConfigError):
            sim2(sigma_v2=0.0)

    def test_zero_replications_rejected(self):
        with pytest.raises(ConfigError):
            sim1(replications=0)


class TestRunMonteCarlo:
    def small_sim1(self):
        return sim1(population_size=2000, sample_size=200, replications=6)

    def test_bit_identical_across_runs_and_workers(self):
        config = self.small_sim1()
        kwargs = dict(methods=list(sim_harness.METHOD_ORDER), level=0.95, master_seed=71, b=150)
        first = run_monte_carlo(config, **kwargs, workers=1)
        second = run_monte_carlo(config, **kwargs, workers=1)
        third = run_monte_carlo(config, **kwargs, workers=3)
        a = dumps_canonical(replication_report_to_dict(first, "x"))
        b = dumps_canonical(replication_report_to_dict(second, "x"))
        c = dumps_canonical(replication_report_to_dict(third, "x"))
        assert a == b == c

    def test_method_streams_do_not_depend_on_method_list(self):
        config = self.small_sim1()
        alone = run_monte_carlo(config, ["swlb"], 0.95, 72, b=150)
        together = run_monte_carlo(config, ["pmle", "swlb", "unweighted"], 0.95, 72, b=150)
        assert alone.methods["swlb"] == together.methods["swlb"]

    def test_probit_scenario_end_to_end(self):
        config = sim2(population_size=2000, sample_size=300, replications=4)
        report = run_monte_carlo(config, ["pmle", "swlb"], 0.95, 73, b=150)
        assert report.estimand == "beta"
        assert report.truth == 0.1
        for summary in report.methods.values():
            assert np.isfinite(summary.mse)
            assert 0.0 <= summary.coverage <= 1.0
            assert summary.mean_interval_width > 0.0

    def test_unknown_method_rejected(self):
        with pytest.raises(ConfigError):
            run_monte_carlo(self.small_sim1(), ["bayes"], 0.95, 74)

    def test_single_replication_rejected(self):
        with pytest.raises(ConfigError):
            run_monte_carlo(sim1(replications=1), ["pmle"], 0.95, 75)

    def test_failure_ceiling_enforced(self, monkeypatch):
        original = sim_harness._run_one_replication

        def sometimes_failing(scenario, methods, level, master_seed, b, r):
            records = original(scenario, methods, level, master_seed, b, r)
            if r % 2 == 0:
                records["pmle"] = (np.nan, np.nan, np.nan, "Separation")
            return records

        monkeypatch.setattr(sim_harness, "_run_one_replication", sometimes_failing)
        with pytest.raises(TooManyFailures):
            run_monte_carlo(self.small_sim1(), ["pmle"], 0.95, 76, b=150)
