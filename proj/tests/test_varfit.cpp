#include "test_util.hpp"

#include "varclust/varfit.hpp"

#include <doctest.h>

#include <cmath>

using namespace varclust;

namespace {

TimeSeries scalar_series(std::vector<double> v) {
	Matrix m(static_cast<Eigen::Index>(v.size()), 1);
	for (std::size_t i = 0; i < v.size(); ++i) {
		m(static_cast<Eigen::Index>(i), 0) = v[i];
	}
	return TimeSeries("s", m);
}

TimeSeriesSet random_set(int n, int T, int m, Rng &rng) {
	std::vector<TimeSeries> s;
	for (int i = 0; i < n; ++i) {
		s.emplace_back("s" + std::to_string(i), vt::random_matrix(T, m, rng));
	}
	return TimeSeriesSet(std::move(s));
}

} // namespace

TEST_CASE("QR products reproduce the normal equations") {
	const TimeSeriesSet data({scalar_series({1, 2, 3, 4})});
	const std::vector<int> orders{1};
	const QrCache cache = QrCache::build(data, orders, 1);
	const QrEntry &e = cache.entry(0, 1);
	Matrix expect(2, 2);
	expect << 3, 6, 6, 14;
	CHECK(vt::rel_err(e.r.transpose() * e.r, expect) < 1e-12);
	CHECK(cache.rows_used() == 3);
	CHECK_FALSE(e.degenerate);

	Rng rng(1);
	const TimeSeries s("r", vt::random_matrix(40, 3, rng));
	const Design d = build_design(s, 2, 3);
	const QrEntry q = qr_entry(d);
	CHECK(vt::rel_err(q.r.transpose() * q.r, d.x.transpose() * d.x) < 1e-10);
	CHECK(vt::rel_err(q.r.transpose() * q.yq, d.x.transpose() * d.y) < 1e-10);
	// the OLS residual factor carries E^T E
	const Matrix coef_t = vt::gauss_solve(d.x.transpose() * d.x, d.x.transpose() * d.y);
	const Matrix resid = d.y - d.x * coef_t;
	CHECK(vt::rel_err(q.ols_factor.transpose() * q.ols_factor, resid.transpose() * resid) < 1e-10);
}

TEST_CASE("constant series gives a degenerate design") {
	const TimeSeriesSet data({scalar_series({2, 2, 2, 2})});
	const std::vector<int> orders{1};
	const QrCache cache = QrCache::build(data, orders, 1);
	CHECK(cache.entry(0, 1).degenerate);
	CHECK(cache.any_degenerate());
}

TEST_CASE("cache holds one entry per series and distinct order") {
	Rng rng(2);
	const TimeSeriesSet data = random_set(5, 30, 2, rng);
	const std::vector<int> same{2, 2, 2};
	CHECK(QrCache::build(data, same, 2).entry_count() == 5);
	const std::vector<int> mixed{1, 3, 1};
	const QrCache c = QrCache::build(data, mixed, 3);
	CHECK(c.entry_count() == 10);
	CHECK(c.has_order(1));
	CHECK(c.has_order(3));
	CHECK_FALSE(c.has_order(2));
	CHECK_THROWS_AS(QrCache::build(data, mixed, 2), InvalidArgument);
}

TEST_CASE("OLS recovers an exact scalar recursion") {
	const OlsFit fit = fit_var_ols(scalar_series({4, 3, 2.5, 2.25, 2.125}), 1);
	CHECK(fit.component.intercept(0) == doctest::Approx(1.0).epsilon(1e-12));
	CHECK(fit.component.lags[0](0, 0) == doctest::Approx(0.5).epsilon(1e-12));
	CHECK(std::abs(fit.component.covariance(0, 0)) < 1e-20);
	CHECK(fit.singular_covariance);
}

TEST_CASE("OLS on white noise gives small lag coefficients") {
	for (std::uint64_t seed = 0; seed < 5; ++seed) {
		Rng rng(seed);
		const TimeSeries s("w", vt::random_matrix(500, 2, rng));
		const OlsFit fit = fit_var_ols(s, 1);
		CHECK(fit.component.lags[0].cwiseAbs().maxCoeff() < 0.2);
		CHECK_FALSE(fit.singular_covariance);
	}
}

TEST_CASE("QR path matches explicit normal equations") {
	Rng rng(3);
	for (int trial = 0; trial < 100; ++trial) {
		const int m = 1 + static_cast<int>(rng.below(4));
		const int p = 1 + static_cast<int>(rng.below(3));
		const TimeSeries s("r", vt::random_matrix(60, m, rng));
		const OlsFit fit = fit_var_ols(s, p);
		const Design d = build_design(s, p, p);
		const Matrix coef_t = vt::gauss_solve(d.x.transpose() * d.x, d.x.transpose() * d.y);
		REQUIRE(vt::rel_err(fit.component.stacked(), coef_t.transpose()) < 1e-8);
		const Matrix resid = d.y - d.x * coef_t;
		const Matrix cov = resid.transpose() * resid / static_cast<double>(d.x.rows());
		REQUIRE(vt::rel_err(fit.component.covariance, cov) < 1e-8);
	}
}

TEST_CASE("psi examples") {
	Matrix e(2, 2);
	e << 1, 0, 0, 2;
	CHECK(psi(e, Matrix::Identity(2, 2)) == doctest::Approx(5.0).epsilon(1e-15));
	Matrix row(1, 2);
	row << 2, 1;
	Matrix omega = Matrix::Zero(2, 2);
	omega(0, 0) = 4;
	omega(1, 1) = 1;
	CHECK(psi(row, omega) == doctest::Approx(2.0).epsilon(1e-15));
	CHECK(psi(Matrix::Zero(5, 2), omega) == 0.0);
	CHECK_THROWS_AS(psi(row, Matrix(-Matrix::Identity(2, 2))), InvalidCovariance);
}

TEST_CASE("Cholesky psi matches the direct quadratic form") {
	Rng rng(4);
	for (int trial = 0; trial < 100; ++trial) {
		const int m = 1 + static_cast<int>(rng.below(6));
		const Matrix e = vt::random_matrix(30, m, rng);
		const Matrix omega = vt::random_spd(m, rng);
		const double fast = psi(e, omega);
		REQUIRE(fast >= 0.0);
		REQUIRE(vt::rel_err(fast, vt::direct_psi(e, omega)) < 1e-10);
	}
}

TEST_CASE("log_det_pd examples and eigenvalue oracle") {
	CHECK(log_det_pd(Matrix::Identity(4, 4)) == 0.0);
	Matrix d = Matrix::Zero(2, 2);
	d(0, 0) = 4;
	d(1, 1) = 1;
	CHECK(log_det_pd(d) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
	Rng rng(5);
	for (int trial = 0; trial < 50; ++trial) {
		const int m = 1 + static_cast<int>(rng.below(8));
		const Matrix a = vt::random_spd(m, rng);
		Eigen::SelfAdjointEigenSolver<Matrix> es(a);
		CHECK(std::abs(log_det_pd(a) - es.eigenvalues().array().log().sum()) < 1e-9);
	}
	CHECK_THROWS_AS(log_det_pd(Matrix::Zero(2, 2)), InvalidCovariance);
}

TEST_CASE("residual factor reproduces E^T E for arbitrary coefficients") {
	Rng rng(6);
	const TimeSeriesSet data = random_set(3, 40, 2, rng);
	const std::vector<int> orders{1, 2};
	const QrCache cache = QrCache::build(data, orders, 2);
	for (int p = 1; p <= 2; ++p) {
		const Matrix coef = vt::random_matrix(2, 1 + 2 * p, rng);
		const Design d = build_design(data[1], p, 2);
		const Matrix e = d.y - d.x * coef.transpose();
		const Matrix f = cache.residual_factor(1, coef);
		CHECK(vt::rel_err(f.transpose() * f, e.transpose() * e) < 1e-10);
		const Matrix omega = vt::random_spd(2, rng);
		CHECK(vt::rel_err(psi(f, omega), vt::direct_psi(e, omega)) < 1e-10);
	}
}

TEST_CASE("pooled fit reduces to OLS and ignores duplication") {
	Rng rng(7);
	const TimeSeriesSet data = random_set(4, 50, 2, rng);
	const std::vector<int> orders{2};
	const QrCache cache = QrCache::build(data, orders, 2);
	const std::vector<double> one{0, 1, 0, 0};
	const PooledFit pooled = fit_pooled(cache, 2, one);
	const OlsFit ols = fit_var_ols(cache, 1, 2);
	CHECK(vt::rel_err(pooled.component.stacked(), ols.component.stacked()) < 1e-12);
	CHECK(vt::rel_err(pooled.component.covariance, ols.component.covariance) < 1e-12);

	const TimeSeriesSet twice({data[1], TimeSeries("copy", data[1].values())});
	const QrCache c2 = QrCache::build(twice, orders, 2);
	const std::vector<double> both{1, 1};
	const PooledFit dup = fit_pooled(c2, 2, both);
	CHECK(vt::rel_err(dup.component.stacked(), ols.component.stacked()) < 1e-12);
	CHECK(vt::rel_err(dup.component.covariance, ols.component.covariance) < 1e-12);

	// weighted normal equations oracle
	const std::vector<double> w{0.2, 1.0, 0.5, 0.0};
	Matrix xtx = Matrix::Zero(5, 5);
	Matrix xty = Matrix::Zero(5, 2);
	for (std::size_t n = 0; n < 4; ++n) {
		const Design d = build_design(data[n], 2, 2);
		xtx += w[n] * d.x.transpose() * d.x;
		xty += w[n] * d.x.transpose() * d.y;
	}
	const Matrix coef_t = vt::gauss_solve(xtx, xty);
	const PooledFit wf = fit_pooled(cache, 2, w);
	CHECK(vt::rel_err(wf.component.stacked(), coef_t.transpose()) < 1e-10);
	CHECK(wf.mass == doctest::Approx(1.7));
	Matrix ete = Matrix::Zero(2, 2);
	for (std::size_t n = 0; n < 4; ++n) {
		const Design d = build_design(data[n], 2, 2);
		const Matrix e = d.y - d.x * coef_t;
		ete += w[n] * e.transpose() * e;
	}
	CHECK(vt::rel_err(wf.component.covariance, ete / (1.7 * 48.0)) < 1e-10);

	CHECK_THROWS_AS(fit_pooled(cache, 2, std::vector<double>{0, 0, 0, 0}), FitFailure);
}

TEST_CASE("degenerate designs fall back to a ridge solve") {
	const TimeSeriesSet data({scalar_series({2, 2, 2, 2, 2})});
	const std::vector<int> orders{1};
	const QrCache cache = QrCache::build(data, orders, 1);
	const PooledFit f = fit_pooled(cache, 1, std::vector<double>{1.0});
	CHECK(f.ridge);
	CHECK(std::isfinite(f.component.stacked().sum()));
}

TEST_CASE("regularize_covariance leaves PD input alone and repairs singular input") {
	Rng rng(8);
	const Matrix a = vt::random_spd(3, rng);
	bool flagged = true;
	CHECK(vt::rel_err(regularize_covariance(a, &flagged), a) < 1e-15);
	CHECK_FALSE(flagged);
	Matrix s = Matrix::Zero(3, 3);
	s(0, 0) = 1.0;
	const Matrix r = regularize_covariance(s, &flagged);
	CHECK(flagged);
	CHECK_NOTHROW(cholesky_pd(r));
	CHECK((r - s).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("cache build is independent of the thread count") {
	Rng rng(9);
	const TimeSeriesSet data = random_set(16, 40, 3, rng);
	const std::vector<int> orders{1, 2};
	const QrCache a = QrCache::build(data, orders, 2);
	const QrCache b = QrCache::build(data, orders, 2);
	for (std::size_t n = 0; n < data.size(); ++n) {
		CHECK(a.entry(n, 2).r == b.entry(n, 2).r);
		CHECK(a.entry(n, 1).yq == b.entry(n, 1).yq);
	}
}
