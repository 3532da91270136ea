#include "test_util.hpp"

#include "varclust/core.hpp"

#include <doctest.h>

using namespace varclust;

namespace {

TimeSeries scalar_series(std::vector<double> v) {
	Matrix m(static_cast<Eigen::Index>(v.size()), 1);
	for (std::size_t i = 0; i < v.size(); ++i) {
		m(static_cast<Eigen::Index>(i), 0) = v[i];
	}
	return TimeSeries("s", m);
}

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
	Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
	Eigen::Index r = 0;
	for (const auto &row : rows) {
		Eigen::Index c = 0;
		for (const double v : row) {
			m(r, c++) = v;
		}
		++r;
	}
	return m;
}

} // namespace

TEST_CASE("build_design lag rows for a scalar series, order 1") {
	const Design d = build_design(scalar_series({1, 2, 3, 4}), 1, 1);
	CHECK(d.x == mat({{1, 1}, {1, 2}, {1, 3}}));
	CHECK(d.y == mat({{2}, {3}, {4}}));
}

TEST_CASE("build_design lag rows for a scalar series, order 2") {
	const Design d = build_design(scalar_series({1, 2, 3, 4}), 2, 2);
	CHECK(d.x == mat({{1, 2, 1}, {1, 3, 2}}));
	CHECK(d.y == mat({{3}, {4}}));
}

TEST_CASE("build_design for a bivariate series") {
	const TimeSeries s("b", mat({{1, 2}, {3, 4}, {5, 6}}));
	const Design d = build_design(s, 1, 1);
	CHECK(d.x == mat({{1, 1, 2}, {1, 3, 4}}));
	CHECK(d.y == mat({{3, 4}, {5, 6}}));
}

TEST_CASE("regression rows are T - p_max for every order") {
	Rng rng(3);
	const TimeSeries s("r", vt::random_matrix(20, 2, rng));
	for (int p = 1; p <= 4; ++p) {
		const Design d = build_design(s, p, 4);
		CHECK(d.x.rows() == 16);
		CHECK(d.x.cols() == 1 + 2 * p);
		CHECK(d.y.rows() == 16);
		CHECK(d.y.row(0) == s.values().row(4));
	}
}

TEST_CASE("build_design argument errors") {
	const TimeSeries s = scalar_series({1, 2, 3, 4});
	CHECK_THROWS_AS(build_design(s, 3, 2), InvalidArgument);
	CHECK_THROWS_AS(build_design(s, 1, 4), InsufficientData);
	CHECK_THROWS_AS(build_design(s, -1, 1), InvalidArgument);
	CHECK(build_design(s, 0, 1).x.cols() == 1);
}

TEST_CASE("residual_matrix with zero coefficients returns the tail") {
	VarComponent c;
	c.intercept = Vector::Zero(1);
	c.lags = {Matrix::Zero(1, 1)};
	c.covariance = Matrix::Identity(1, 1);
	const Matrix e = residual_matrix(scalar_series({1, 2, 3, 4}), c, 1);
	CHECK(e == mat({{2}, {3}, {4}}));
}

TEST_CASE("residual_matrix of an exact recursion is zero") {
	VarComponent c;
	c.intercept = Vector::Constant(1, 1.0);
	c.lags = {Matrix::Constant(1, 1, 0.5)};
	c.covariance = Matrix::Identity(1, 1);
	const Matrix e = residual_matrix(scalar_series({4, 3, 2.5, 2.25}), c, 1);
	CHECK(e == Matrix::Zero(3, 1));
}

TEST_CASE("residual_matrix for a random walk coefficient") {
	VarComponent c;
	c.intercept = Vector::Zero(1);
	c.lags = {Matrix::Constant(1, 1, 1.0)};
	c.covariance = Matrix::Identity(1, 1);
	const Matrix e = residual_matrix(scalar_series({1, 2, 4}), c, 1);
	CHECK(e == mat({{1}, {2}}));
}

TEST_CASE("residual_matrix matches Y - X coef^T") {
	Rng rng(11);
	for (int trial = 0; trial < 20; ++trial) {
		const int m = 1 + static_cast<int>(rng.below(3));
		const int p = 1 + static_cast<int>(rng.below(3));
		const int p_max = p + static_cast<int>(rng.below(2));
		const TimeSeries s("r", vt::random_matrix(30, m, rng));
		VarComponent c;
		c.intercept = vt::random_matrix(m, 1, rng);
		for (int i = 0; i < p; ++i) {
			c.lags.push_back(vt::random_matrix(m, m, rng));
		}
		c.covariance = Matrix::Identity(m, m);
		const Design d = build_design(s, p, p_max);
		const Matrix direct = d.y - d.x * c.stacked().transpose();
		CHECK(vt::rel_err(residual_matrix(s, c, p_max), direct) < 1e-14);
	}
}

TEST_CASE("residual_matrix rejects mismatched dimensions") {
	VarComponent c;
	c.intercept = Vector::Zero(2);
	c.lags = {Matrix::Zero(2, 2)};
	c.covariance = Matrix::Identity(2, 2);
	CHECK_THROWS_AS(residual_matrix(scalar_series({1, 2, 3}), c, 1), InvalidArgument);
}

TEST_CASE("TimeSeries and TimeSeriesSet validation") {
	CHECK_THROWS_AS(TimeSeries("x", Matrix(0, 1)), InvalidArgument);
	Matrix bad = Matrix::Zero(3, 1);
	bad(1, 0) = std::nan("");
	CHECK_THROWS_AS(TimeSeries("x", bad), InvalidArgument);
	bad(1, 0) = INFINITY;
	CHECK_THROWS_AS(TimeSeries("x", bad), InvalidArgument);

	CHECK_THROWS_AS(TimeSeriesSet(std::vector<TimeSeries>{}), InvalidArgument);
	CHECK_THROWS_AS(TimeSeriesSet({TimeSeries("a", Matrix::Zero(4, 1)), TimeSeries("b", Matrix::Zero(5, 1))}),
	                InvalidArgument);
	CHECK_THROWS_AS(TimeSeriesSet({TimeSeries("a", Matrix::Zero(4, 1)), TimeSeries("b", Matrix::Zero(4, 2))}),
	                InvalidArgument);
	const TimeSeriesSet ok({TimeSeries("a", Matrix::Zero(4, 2)), TimeSeries("b", Matrix::Ones(4, 2))});
	CHECK(ok.size() == 2);
	CHECK(ok.length() == 4);
	CHECK(ok.dim() == 2);
}

TEST_CASE("VarComponent stacked form round-trips and validates") {
	Rng rng(5);
	VarComponent c;
	c.intercept = vt::random_matrix(3, 1, rng);
	c.lags = {vt::random_matrix(3, 3, rng), vt::random_matrix(3, 3, rng)};
	c.covariance = vt::random_spd(3, rng);
	const Matrix s = c.stacked();
	CHECK(s.rows() == 3);
	CHECK(s.cols() == 7);
	const VarComponent back = VarComponent::from_stacked(s, c.covariance);
	CHECK(back.intercept == c.intercept);
	CHECK(back.lags[1] == c.lags[1]);
	CHECK_NOTHROW(c.validate());

	VarComponent asym = c;
	asym.covariance(0, 1) += 1e-6;
	CHECK_THROWS_AS(asym.validate(), InvalidCovariance);
	VarComponent indefinite = c;
	indefinite.covariance = -Matrix::Identity(3, 3);
	CHECK_THROWS_AS(indefinite.validate(), InvalidCovariance);
}

TEST_CASE("MixtureParams weight invariants") {
	VarComponent c;
	c.intercept = Vector::Zero(1);
	c.lags = {Matrix::Zero(1, 1)};
	c.covariance = Matrix::Identity(1, 1);
	MixtureParams p{{c, c}, std::nullopt};
	CHECK_NOTHROW(p.validate());
	p.weights = Vector::Constant(2, 0.5);
	CHECK_NOTHROW(p.validate());
	p.weights = Vector::Constant(2, 0.6);
	CHECK_THROWS_AS(p.validate(), InvalidArgument);
	Vector neg(2);
	neg << 1.5, -0.5;
	p.weights = neg;
	CHECK_THROWS_AS(p.validate(), InvalidArgument);
	CHECK_THROWS_AS(MixtureParams{}.validate(), InvalidArgument);
}

TEST_CASE("Assignment helpers") {
	const std::vector<int> labels{0, 2, 1, 2};
	const Assignment a = Assignment::hard(labels, 3);
	CHECK(a.is_hard());
	CHECK(a.is_row_stochastic());
	CHECK(a.labels() == labels);

	const Assignment u = Assignment::uniform(4, 2);
	CHECK(u.is_row_stochastic());
	CHECK_FALSE(u.is_hard());
	// exact ties go to the lowest index
	CHECK(u.labels() == std::vector<int>{0, 0, 0, 0});
	CHECK_THROWS_AS(Assignment::hard(std::vector<int>{0, 3}, 3), InvalidArgument);
}
