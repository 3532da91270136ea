#include "test_util.hpp"

#include "varclust/cmvar.hpp"
#include "varclust/datagen.hpp"
#include "varclust/metrics.hpp"

#include <doctest.h>

#include <cmath>

using namespace varclust;

namespace {

VarComponent scalar_comp(double c, double a, double var) {
	VarComponent v;
	v.intercept = Vector::Constant(1, c);
	v.lags = {Matrix::Constant(1, 1, a)};
	v.covariance = Matrix::Constant(1, 1, var);
	return v;
}

TimeSeriesSet random_set(int n, int T, int m, Rng &rng) {
	std::vector<TimeSeries> s;
	for (int i = 0; i < n; ++i) {
		s.emplace_back("s" + std::to_string(i), vt::random_matrix(T, m, rng));
	}
	return TimeSeriesSet(std::move(s));
}

// Two clusters whose lag matrices have opposite signs.
Dataset separated_pair(std::uint64_t seed, int T = 200, int nc = 10) {
	VarComponent a;
	a.intercept = Vector::Zero(2);
	a.lags = {0.8 * Matrix::Identity(2, 2)};
	a.covariance = Matrix::Identity(2, 2);
	VarComponent b = a;
	b.lags = {-0.8 * Matrix::Identity(2, 2)};
	Rng rng(seed);
	std::vector<TimeSeries> s;
	LabelVector truth;
	for (int i = 0; i < 2 * nc; ++i) {
		const int k = i % 2;
		s.push_back(simulate_var(k == 0 ? a : b, T, 100, rng, "s" + std::to_string(i)));
		truth.push_back(k + 1);
	}
	return Dataset{TimeSeriesSet(std::move(s)), truth, {a, b}, {}};
}

// Independent per-t mixture log-likelihood.
double oracle_pointwise(const TimeSeriesSet &data, const MixtureParams &params, int p_max) {
	double total = 0.0;
	const int m = data.dim();
	for (const auto &s : data) {
		std::vector<Matrix> res;
		for (const auto &c : params.components) {
			res.push_back(residual_matrix(s, c, p_max));
		}
		for (int t = 0; t < res[0].rows(); ++t) {
			double sum = 0.0;
			for (int k = 0; k < params.size(); ++k) {
				const Matrix e = res[static_cast<std::size_t>(k)].row(t);
				sum += (*params.weights)(k) *
				       std::exp(vt::gaussian_logpdf_sum(e, params.components[static_cast<std::size_t>(k)].covariance));
			}
			total += std::log(sum);
		}
	}
	(void)m;
	return total;
}

} // namespace

TEST_CASE("E-step with identical components is uniform") {
	Rng rng(1);
	const TimeSeriesSet data = random_set(5, 30, 1, rng);
	const std::vector<int> orders{1};
	const QrCache cache = QrCache::build(data, orders, 1);
	const VarComponent c = scalar_comp(0.1, 0.2, 1.0);
	MixtureParams p{{c, c}, Vector::Constant(2, 0.5)};
	const Assignment tau = e_step(cache, p);
	CHECK((tau.tau.array() - 0.5).abs().maxCoeff() < 1e-15);
}

TEST_CASE("E-step logistic value for a psi gap of 2") {
	const VarComponent c1 = scalar_comp(1.0, 0.5, 1.0);
	const VarComponent c2 = scalar_comp(2.0, 0.5, 1.0);
	Matrix start(1, 1);
	start << 4.0;
	const TimeSeriesSet data({vt::recursion_series(c1, start, 3)});
	const std::vector<int> orders{1};
	const QrCache cache = QrCache::build(data, orders, 1);
	const MixtureParams p{{c1, c2}, Vector::Constant(2, 0.5)};
	const Matrix psi = psi_matrix(cache, p.components);
	CHECK(std::abs(psi(0, 0)) < 1e-20);
	CHECK(psi(0, 1) == doctest::Approx(2.0).epsilon(1e-14));
	const Assignment tau = e_step(cache, p);
	const double e1 = std::exp(-1.0);
	CHECK(tau.tau(0, 0) == doctest::Approx(1.0 / (1.0 + e1)).epsilon(1e-14));
	CHECK(tau.tau(0, 1) == doctest::Approx(e1 / (1.0 + e1)).epsilon(1e-14));
}

TEST_CASE("E-step with one component gives a column of ones") {
	Rng rng(2);
	const TimeSeriesSet data = random_set(4, 20, 2, rng);
	const std::vector<int> orders{1};
	const QrCache cache = QrCache::build(data, orders, 1);
	const OlsFit f = fit_var_ols(cache, 0, 1);
	const Assignment tau = e_step(cache, MixtureParams{{f.component}, Vector::Ones(1)});
	CHECK(tau.tau == Matrix::Ones(4, 1));
}

TEST_CASE("log-weight normalization counts underflow") {
	Matrix g(3, 2);
	g << 0.0, -1.0, -800.0, 0.0, -2000.0, -1000.0;
	const Responsibilities r = normalize_log_weights(g);
	CHECK(r.tau.is_row_stochastic());
	CHECK(r.underflow_events == 2);
	CHECK(r.naive_zero_rows == 1);
	CHECK(r.tau.tau(2, 1) == 1.0);
	CHECK(r.row_log_norm(2) == doctest::Approx(-1000.0));
}

TEST_CASE("M-step weights and pooled reduction") {
	Rng rng(3);
	const TimeSeriesSet data = random_set(4, 40, 2, rng);
	const std::vector<int> orders{1, 1};
	const QrCache cache = QrCache::build(data, orders, 1);

	const Assignment split = Assignment::hard(std::vector<int>{0, 0, 1, 0}, 2);
	const MStep ms = m_step(cache, split, orders);
	CHECK((*ms.params.weights)(0) == doctest::Approx(0.75));
	CHECK((*ms.params.weights)(1) == doctest::Approx(0.25));
	const OlsFit solo = fit_var_ols(cache, 2, 1);
	CHECK(vt::rel_err(ms.params.components[1].stacked(), solo.component.stacked()) < 1e-12);
	CHECK(vt::rel_err(ms.params.components[1].covariance, solo.component.covariance) < 1e-12);

	const Assignment all_one = Assignment::hard(std::vector<int>{0, 0, 0, 0}, 2);
	const MStep frozen = m_step(cache, all_one, orders, &ms.params);
	CHECK((*frozen.params.weights)(0) == 1.0);
	CHECK((*frozen.params.weights)(1) == 0.0);
	CHECK(frozen.frozen[1]);
	CHECK_FALSE(frozen.frozen[0]);
	CHECK(frozen.params.components[1].stacked() == ms.params.components[1].stacked());
	const PooledFit pooled = fit_pooled(cache, 1, std::vector<double>{1, 1, 1, 1});
	CHECK(vt::rel_err(frozen.params.components[0].stacked(), pooled.component.stacked()) < 1e-12);
	CHECK_THROWS_AS(m_step(cache, all_one, orders), FitFailure);
}

TEST_CASE("M-step on a single series equals OLS") {
	Rng rng(4);
	const TimeSeriesSet data = random_set(1, 50, 3, rng);
	const std::vector<int> orders{2};
	const QrCache cache = QrCache::build(data, orders, 2);
	const MStep ms = m_step(cache, Assignment::uniform(1, 1), orders);
	const OlsFit f = fit_var_ols(data[0], 2);
	CHECK(vt::rel_err(ms.params.components[0].stacked(), f.component.stacked()) < 1e-10);
	CHECK(vt::rel_err(ms.params.components[0].covariance, f.component.covariance) < 1e-10);
}

TEST_CASE("pointwise log-likelihood special cases") {
	// zero residuals, unit variance, 10 rows
	const VarComponent c = scalar_comp(1.0, 0.5, 1.0);
	Matrix start(1, 1);
	start << 4.0;
	const TimeSeriesSet one({vt::recursion_series(c, start, 11)});
	const MixtureParams single{{c}, Vector::Ones(1)};
	CHECK(log_likelihood(one, single, 1) == doctest::Approx(-5.0 * std::log(2.0 * M_PI)).epsilon(1e-13));

	Rng rng(5);
	const TimeSeriesSet data = random_set(3, 30, 2, rng);
	const OlsFit f = fit_var_ols(data[0], 2);
	const OlsFit g = fit_var_ols(data[1], 2);
	const MixtureParams k1{{f.component}, Vector::Ones(1)};
	double expect = 0.0;
	for (const auto &s : data) {
		expect += vt::gaussian_logpdf_sum(residual_matrix(s, f.component, 2), f.component.covariance);
	}
	CHECK(vt::rel_err(log_likelihood(data, k1, 2), expect) < 1e-12);
	Vector w(2);
	w << 1.0, 0.0;
	const MixtureParams k2{{f.component, g.component}, w};
	CHECK(vt::rel_err(log_likelihood(data, k2, 2), expect) < 1e-12);
	w << 0.3, 0.7;
	const MixtureParams mix{{f.component, g.component}, w};
	CHECK(vt::rel_err(log_likelihood(data, mix, 2), oracle_pointwise(data, mix, 2)) < 1e-10);
}

TEST_CASE("series-level likelihood matches a direct sum") {
	Rng rng(6);
	const TimeSeriesSet data = random_set(4, 25, 2, rng);
	const std::vector<int> orders{1, 1};
	const QrCache cache = QrCache::build(data, orders, 1);
	const OlsFit f = fit_var_ols(cache, 0, 1);
	const OlsFit g = fit_var_ols(cache, 1, 1);
	Vector w(2);
	w << 0.4, 0.6;
	const MixtureParams mix{{f.component, g.component}, w};
	double expect = 0.0;
	for (const auto &s : data) {
		const double a = std::log(0.4) + vt::gaussian_logpdf_sum(residual_matrix(s, f.component, 1), f.component.covariance);
		const double b = std::log(0.6) + vt::gaussian_logpdf_sum(residual_matrix(s, g.component, 1), g.component.covariance);
		const double mx = std::max(a, b);
		expect += mx + std::log(std::exp(a - mx) + std::exp(b - mx));
	}
	CHECK(vt::rel_err(series_log_likelihood(cache, mix), expect) < 1e-10);
}

TEST_CASE("K = 1 converges to the pooled fit") {
	Rng rng(7);
	const TimeSeriesSet data = random_set(5, 40, 2, rng);
	const std::vector<int> orders{1};
	CmvarConfig cfg;
	const CmvarResult r = fit_cmvar(data, 1, orders, cfg);
	CHECK(r.converged);
	CHECK(r.iterations <= 2);
	const QrCache cache = QrCache::build(data, orders, 1);
	const PooledFit pooled = fit_pooled(cache, 1, std::vector<double>(5, 1.0));
	CHECK(vt::rel_err(r.params.components[0].stacked(), pooled.component.stacked()) < 1e-10);
	CHECK(vt::rel_err(r.pointwise_log_likelihood, log_likelihood(data, r.params, 1)) < 1e-12);
	CHECK(vt::rel_err(r.log_likelihood, r.pointwise_log_likelihood) < 1e-10);
}

TEST_CASE("well-separated clusters are recovered exactly") {
	for (std::uint64_t seed = 1; seed <= 3; ++seed) {
		const Dataset ds = separated_pair(seed);
		const std::vector<int> orders{1, 1};
		CmvarConfig cfg;
		cfg.seed = seed;
		const CmvarResult r = fit_cmvar(ds.data, 2, orders, cfg);
		CHECK(nmi(r.labels, ds.truth) == doctest::Approx(1.0));
		CHECK(r.tau.is_row_stochastic());
		CHECK((*r.params.weights)(0) >= (*r.params.weights)(1));
	}
}

TEST_CASE("identical initial components are a symmetric fixed point") {
	Rng rng(8);
	const TimeSeriesSet data = random_set(6, 30, 1, rng);
	const OlsFit f = fit_var_ols(data[0], 1);
	CmvarConfig cfg;
	cfg.init = CmvarInit::FromComponents;
	cfg.initial = MixtureParams{{f.component, f.component}, Vector::Constant(2, 0.5)};
	const std::vector<int> orders{1, 1};
	const CmvarResult r = fit_cmvar(data, 2, orders, cfg);
	CHECK(r.degenerate_init);
	CHECK((r.tau.tau.array() - 0.5).abs().maxCoeff() < 1e-12);
	CHECK(vt::rel_err(r.params.components[0].stacked(), r.params.components[1].stacked()) < 1e-12);
}

TEST_CASE("EM trace is non-decreasing and responsibilities stay row-stochastic") {
	for (std::uint64_t seed = 0; seed < 8; ++seed) {
		DatasetSpec spec;
		spec.m = 2;
		spec.p = 1;
		spec.T = 60;
		spec.K = 3;
		spec.n_per_cluster = 6;
		spec.seed = seed;
		const Dataset ds = generate_dataset(spec);
		CmvarConfig cfg;
		cfg.seed = seed;
		const std::vector<int> orders{1, 1, 1};
		const CmvarResult r = fit_cmvar(ds.data, 3, orders, cfg);
		for (std::size_t i = 1; i < r.log_likelihood_trace.size(); ++i) {
			REQUIRE(r.log_likelihood_trace[i] >= r.log_likelihood_trace[i - 1] - 1e-9);
		}
		CHECK(r.tau.is_row_stochastic());
	}
}

TEST_CASE("permuting the initial components permutes the result") {
	const Dataset ds = separated_pair(4, 80, 6);
	const std::vector<int> orders{1, 1};
	const QrCache cache = QrCache::build(ds.data, orders, 1);
	const OlsFit a = fit_var_ols(cache, 0, 1);
	const OlsFit b = fit_var_ols(cache, 1, 1);
	Vector w(2);
	w << 0.5, 0.5;
	CmvarConfig c1;
	c1.init = CmvarInit::FromComponents;
	c1.initial = MixtureParams{{a.component, b.component}, w};
	CmvarConfig c2 = c1;
	c2.initial = MixtureParams{{b.component, a.component}, w};
	const CmvarResult r1 = fit_cmvar(cache, ds.data, 2, orders, c1);
	const CmvarResult r2 = fit_cmvar(cache, ds.data, 2, orders, c2);
	CHECK(r1.log_likelihood == doctest::Approx(r2.log_likelihood).epsilon(1e-10));
	CHECK(rand_index(r1.labels, r2.labels) == 1.0);
}

TEST_CASE("large problems underflow in the linear domain but stay finite in the log domain") {
	DatasetSpec spec;
	spec.m = 6;
	spec.p = 2;
	spec.T = 400;
	spec.K = 3;
	spec.n_per_cluster = 5;
	spec.seed = 11;
	const Dataset ds = generate_dataset(spec);
	CmvarConfig cfg;
	cfg.seed = 11;
	const std::vector<int> orders{2, 2, 2};
	const CmvarResult r = fit_cmvar(ds.data, 3, orders, cfg);
	CHECK(r.underflow_events > 0);
	CHECK(r.tau.tau.allFinite());
	CHECK(r.tau.is_row_stochastic());
	CHECK(std::isfinite(r.log_likelihood));
}

TEST_CASE("config validation") {
	CmvarConfig cfg;
	cfg.tol = 0.0;
	CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
	cfg = CmvarConfig{};
	cfg.max_iters = 0;
	CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
