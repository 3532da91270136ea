#include "varclust/core.hpp"

#include <cmath>

namespace varclust {

TimeSeries::TimeSeries(std::string id, Matrix values) : id_(std::move(id)), values_(std::move(values)) {
	if (values_.rows() == 0 || values_.cols() == 0) {
		throw InvalidArgument("time series '" + id_ + "' is empty");
	}
	if (!values_.allFinite()) {
		throw InvalidArgument("time series '" + id_ + "' has non-finite entries");
	}
}

TimeSeriesSet::TimeSeriesSet(std::vector<TimeSeries> series) : series_(std::move(series)) {
	if (series_.empty()) {
		throw InvalidArgument("time series set is empty");
	}
	length_ = series_.front().length();
	dim_ = series_.front().dim();
	for (const auto &s : series_) {
		if (s.length() != length_) {
			throw InvalidArgument("series '" + s.id() + "' has length " + std::to_string(s.length()) +
			                      ", expected " + std::to_string(length_));
		}
		if (s.dim() != dim_) {
			throw InvalidArgument("series '" + s.id() + "' has dimension " + std::to_string(s.dim()) +
			                      ", expected " + std::to_string(dim_));
		}
	}
}

Matrix VarComponent::stacked() const {
	const int m = dim();
	Matrix coef(m, 1 + m * order());
	coef.col(0) = intercept;
	for (int i = 0; i < order(); ++i) {
		coef.block(0, 1 + i * m, m, m) = lags[i];
	}
	return coef;
}

VarComponent VarComponent::from_stacked(const Matrix &coef, Matrix covariance) {
	const auto m = coef.rows();
	if (m == 0 || (coef.cols() - 1) % m != 0) {
		throw InvalidArgument("stacked coefficient block has shape " + std::to_string(coef.rows()) + "x" +
		                      std::to_string(coef.cols()));
	}
	VarComponent comp;
	comp.intercept = coef.col(0);
	const auto p = (coef.cols() - 1) / m;
	comp.lags.reserve(p);
	for (Eigen::Index i = 0; i < p; ++i) {
		comp.lags.emplace_back(coef.block(0, 1 + i * m, m, m));
	}
	comp.covariance = std::move(covariance);
	return comp;
}

void VarComponent::validate() const {
	const int m = dim();
	if (m == 0) {
		throw InvalidArgument("component has empty intercept");
	}
	for (const auto &a : lags) {
		if (a.rows() != m || a.cols() != m) {
			throw InvalidArgument("lag matrix shape does not match intercept dimension");
		}
	}
	if (covariance.rows() != m || covariance.cols() != m) {
		throw InvalidArgument("covariance shape does not match intercept dimension");
	}
	const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
	if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
		throw InvalidCovariance("covariance is not symmetric");
	}
	Eigen::LLT<Matrix> llt(covariance);
	if (llt.info() != Eigen::Success) {
		throw InvalidCovariance("covariance is not positive definite");
	}
}

int MixtureParams::max_order() const {
	int p = 0;
	for (const auto &c : components) {
		p = std::max(p, c.order());
	}
	return p;
}

void MixtureParams::validate() const {
	if (components.empty()) {
		throw InvalidArgument("mixture has no components");
	}
	for (const auto &c : components) {
		c.validate();
		if (c.dim() != components.front().dim()) {
			throw InvalidArgument("mixture components differ in dimension");
		}
	}
	if (weights) {
		if (weights->size() != size()) {
			throw InvalidArgument("mixture weight count does not match component count");
		}
		if ((weights->array() < 0.0).any() || std::abs(weights->sum() - 1.0) > 1e-12) {
			throw InvalidArgument("mixture weights must be nonnegative and sum to one");
		}
	}
}

Assignment Assignment::hard(std::span<const int> labels, int n_clusters) {
	Assignment a{Matrix::Zero(static_cast<Eigen::Index>(labels.size()), n_clusters)};
	for (std::size_t n = 0; n < labels.size(); ++n) {
		if (labels[n] < 0 || labels[n] >= n_clusters) {
			throw InvalidArgument("label " + std::to_string(labels[n]) + " out of range");
		}
		a.tau(static_cast<Eigen::Index>(n), labels[n]) = 1.0;
	}
	return a;
}

Assignment Assignment::uniform(int n_series, int n_clusters) {
	return Assignment{Matrix::Constant(n_series, n_clusters, 1.0 / n_clusters)};
}

std::vector<int> Assignment::labels() const {
	std::vector<int> out(static_cast<std::size_t>(tau.rows()));
	for (Eigen::Index n = 0; n < tau.rows(); ++n) {
		Eigen::Index best = 0;
		for (Eigen::Index k = 1; k < tau.cols(); ++k) {
			if (tau(n, k) > tau(n, best)) {
				best = k;
			}
		}
		out[static_cast<std::size_t>(n)] = static_cast<int>(best);
	}
	return out;
}

bool Assignment::is_row_stochastic(double tol) const {
	for (Eigen::Index n = 0; n < tau.rows(); ++n) {
		if (std::abs(tau.row(n).sum() - 1.0) > tol) {
			return false;
		}
		if ((tau.row(n).array() < 0.0).any() || (tau.row(n).array() > 1.0 + tol).any()) {
			return false;
		}
	}
	return true;
}

bool Assignment::is_hard() const {
	for (Eigen::Index n = 0; n < tau.rows(); ++n) {
		int ones = 0;
		for (Eigen::Index k = 0; k < tau.cols(); ++k) {
			if (tau(n, k) == 1.0) {
				++ones;
			} else if (tau(n, k) != 0.0) {
				return false;
			}
		}
		if (ones != 1) {
			return false;
		}
	}
	return true;
}

Design build_design(const TimeSeries &series, int order, int max_order) {
	if (order < 0 || order > max_order) {
		throw InvalidArgument("order " + std::to_string(order) + " exceeds p_max " + std::to_string(max_order));
	}
	const int T = series.length();
	const int m = series.dim();
	if (T <= max_order) {
		throw InsufficientData("series '" + series.id() + "' has T=" + std::to_string(T) +
		                       " <= p_max=" + std::to_string(max_order));
	}
	const int rows = T - max_order;
	const Matrix &v = series.values();
	Design d{Matrix(rows, 1 + m * order), Matrix(rows, m)};
	for (int r = 0; r < rows; ++r) {
		const int t = max_order + r; // 0-based time index
		d.x(r, 0) = 1.0;
		for (int i = 1; i <= order; ++i) {
			d.x.block(r, 1 + (i - 1) * m, 1, m) = v.row(t - i);
		}
		d.y.row(r) = v.row(t);
	}
	return d;
}

Matrix residual_matrix(const TimeSeries &series, const VarComponent &comp, int max_order) {
	if (comp.dim() != series.dim()) {
		throw InvalidArgument("component dimension " + std::to_string(comp.dim()) +
		                      " does not match series dimension " + std::to_string(series.dim()));
	}
	const Design d = build_design(series, comp.order(), max_order);
	return d.y - d.x * comp.stacked().transpose();
}

} // namespace varclust
