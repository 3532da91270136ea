#pragma once

#include "varclust/errors.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace varclust {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One vector time series. Rows are time points, columns are variables.
class TimeSeries {
public:
	TimeSeries() = default;
	TimeSeries(std::string id, Matrix values);

	const std::string &id() const { return id_; }
	const Matrix &values() const { return values_; }
	int length() const { return static_cast<int>(values_.rows()); }
	int dim() const { return static_cast<int>(values_.cols()); }

private:
	std::string id_;
	Matrix values_;
};

/// A set of equal-length, equal-dimension series.
class TimeSeriesSet {
public:
	TimeSeriesSet() = default;
	explicit TimeSeriesSet(std::vector<TimeSeries> series);

	std::size_t size() const { return series_.size(); }
	int length() const { return length_; }
	int dim() const { return dim_; }
	const TimeSeries &operator[](std::size_t n) const { return series_[n]; }
	const std::vector<TimeSeries> &series() const { return series_; }

	auto begin() const { return series_.begin(); }
	auto end() const { return series_.end(); }

private:
	std::vector<TimeSeries> series_;
	int length_ = 0;
	int dim_ = 0;
};

/// One VAR(p) component: Y_t = c + sum_i A_i Y_{t-i} + e_t, e_t ~ N(0, covariance).
struct VarComponent {
	Vector intercept;
	std::vector<Matrix> lags;
	Matrix covariance;

	int order() const { return static_cast<int>(lags.size()); }
	int dim() const { return static_cast<int>(intercept.size()); }

	// m x (1 + m p) block [c, A_1, ..., A_p].
	Matrix stacked() const;
	static VarComponent from_stacked(const Matrix &coef, Matrix covariance);

	// Throws InvalidArgument on shape errors, InvalidCovariance if covariance
	// is not symmetric within 1e-12 (relative) or fails Cholesky.
	void validate() const;
};

struct MixtureParams {
	std::vector<VarComponent> components;
	std::optional<Vector> weights;

	int size() const { return static_cast<int>(components.size()); }
	int max_order() const;
	void validate() const;
};

/// N x K responsibility matrix. Rows are stochastic; hard assignments are one-hot.
struct Assignment {
	Matrix tau;

	static Assignment hard(std::span<const int> labels, int n_clusters);
	static Assignment uniform(int n_series, int n_clusters);

	int n_series() const { return static_cast<int>(tau.rows()); }
	int n_clusters() const { return static_cast<int>(tau.cols()); }

	// Row argmax, ties go to the lowest index.
	std::vector<int> labels() const;
	bool is_row_stochastic(double tol = 1e-12) const;
	bool is_hard() const;
};

/// Lagged regressors for times t = p_max+1..T (1-based).
struct Design {
	Matrix x; // (T - p_max) x (1 + m p)
	Matrix y; // (T - p_max) x m
};

Design build_design(const TimeSeries &series, int order, int max_order);

// Rows are (Y_t - c - sum_i A_i Y_{t-i})^T for t = p_max+1..T.
Matrix residual_matrix(const TimeSeries &series, const VarComponent &comp, int max_order);

} // namespace varclust
