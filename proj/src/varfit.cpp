#include "varclust/varfit.hpp"
#include "varclust/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace varclust {

namespace {

// |R_ii| below this fraction of max |R_jj| marks the design as rank deficient.
constexpr double kRankTol = 1e-10;
constexpr double kRidgeScale = 1e-8;
// Residual variance this small relative to the data's mean square is an exact fit.
constexpr double kSingularCovRatio = 1e-14;

Matrix upper_factor(const Matrix &rows, int m) {
	Matrix v = Matrix::Zero(m, m);
	if (rows.rows() == 0) {
		return v;
	}
	Eigen::HouseholderQR<Matrix> qr(rows);
	const auto k = std::min<Eigen::Index>(rows.rows(), m);
	v.topRows(k) = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
	return v;
}

Matrix solve_normal(const Matrix &gram, const Matrix &rhs, bool force_ridge, bool *ridged) {
	if (!force_ridge) {
		Eigen::LLT<Matrix> llt(gram);
		if (llt.info() == Eigen::Success) {
			if (ridged) {
				*ridged = false;
			}
			return llt.solve(rhs);
		}
	}
	const double jitter = kRidgeScale * std::max(gram.trace(), 1e-300) / static_cast<double>(gram.rows());
	Matrix reg = gram;
	reg.diagonal().array() += jitter;
	if (ridged) {
		*ridged = true;
	}
	return reg.ldlt().solve(rhs);
}

bool covariance_is_singular(const Matrix &cov, double data_mean_square) {
	Eigen::LLT<Matrix> llt(0.5 * (cov + cov.transpose()));
	if (llt.info() != Eigen::Success) {
		return true;
	}
	const double floor = kSingularCovRatio * std::max(data_mean_square, 1e-300);
	const Matrix l = llt.matrixL();
	return (l.diagonal().array().square() <= floor).any();
}

double mean_square(const QrEntry &e, int rows) {
	const double m = static_cast<double>(e.yq.cols());
	return (e.yq.squaredNorm() + e.ols_factor.squaredNorm()) / (static_cast<double>(rows) * m);
}

} // namespace

CholeskyFactor cholesky_pd(const Matrix &spd) {
	if (spd.rows() != spd.cols() || spd.rows() == 0) {
		throw InvalidCovariance("covariance must be a non-empty square matrix");
	}
	Eigen::LLT<Matrix> llt(0.5 * (spd + spd.transpose()));
	if (llt.info() != Eigen::Success) {
		throw InvalidCovariance("covariance is not positive definite");
	}
	CholeskyFactor f{llt.matrixL(), 0.0};
	for (Eigen::Index i = 0; i < f.lower.rows(); ++i) {
		const double d = f.lower(i, i);
		if (!(d > 0.0) || !std::isfinite(d)) {
			throw InvalidCovariance("covariance is not positive definite");
		}
		f.log_det += 2.0 * std::log(d);
	}
	return f;
}

double log_det_pd(const Matrix &spd) { return cholesky_pd(spd).log_det; }

double psi(const Matrix &residuals, const CholeskyFactor &chol) {
	if (residuals.cols() != chol.lower.rows()) {
		throw InvalidArgument("residual dimension does not match covariance");
	}
	if (residuals.rows() == 0) {
		return 0.0;
	}
	const Matrix w = chol.lower.triangularView<Eigen::Lower>().solve(residuals.transpose());
	return w.squaredNorm();
}

double psi(const Matrix &residuals, const Matrix &covariance) { return psi(residuals, cholesky_pd(covariance)); }

QrEntry qr_entry(const Design &design) {
	const auto rows = design.x.rows();
	const auto cols = design.x.cols();
	const auto m = static_cast<int>(design.y.cols());
	if (rows < cols) {
		throw InsufficientData("regression has " + std::to_string(rows) + " rows for " + std::to_string(cols) +
		                       " regressors");
	}
	Eigen::HouseholderQR<Matrix> qr(design.x);
	Matrix qty = design.y;
	qty.applyOnTheLeft(qr.householderQ().adjoint());

	QrEntry e;
	e.r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
	e.yq = qty.topRows(cols);
	// the trailing rows of Q^T Y are the OLS residuals in a rotated basis
	e.ols_factor = upper_factor(qty.bottomRows(rows - cols), m);

	const double max_diag = e.r.diagonal().cwiseAbs().maxCoeff();
	e.degenerate = max_diag == 0.0 || (e.r.diagonal().cwiseAbs().array() < kRankTol * max_diag).any();
	return e;
}

QrCache QrCache::build(const TimeSeriesSet &data, std::span<const int> orders, int max_order) {
	if (orders.empty()) {
		throw InvalidArgument("no model orders requested");
	}
	QrCache cache;
	cache.orders_.assign(orders.begin(), orders.end());
	std::sort(cache.orders_.begin(), cache.orders_.end());
	cache.orders_.erase(std::unique(cache.orders_.begin(), cache.orders_.end()), cache.orders_.end());
	for (const int p : cache.orders_) {
		if (p < 0 || p > max_order) {
			throw InvalidArgument("order " + std::to_string(p) + " outside [0, p_max=" + std::to_string(max_order) +
			                      "]");
		}
	}
	cache.max_order_ = max_order;
	cache.rows_used_ = data.length() - max_order;
	cache.dim_ = data.dim();
	cache.n_series_ = data.size();
	if (cache.rows_used_ <= 0) {
		throw InsufficientData("series length " + std::to_string(data.length()) + " <= p_max " +
		                       std::to_string(max_order));
	}

	cache.entries_.assign(cache.orders_.size(), std::vector<QrEntry>(data.size()));
	const auto n_series = static_cast<long>(data.size());
	for (std::size_t slot = 0; slot < cache.orders_.size(); ++slot) {
		const int p = cache.orders_[slot];
		auto &slot_entries = cache.entries_[slot];
#pragma omp parallel for schedule(dynamic)
		for (long n = 0; n < n_series; ++n) {
			slot_entries[static_cast<std::size_t>(n)] = qr_entry(build_design(data[n], p, max_order));
		}
	}
	return cache;
}

bool QrCache::has_order(int order) const { return std::binary_search(orders_.begin(), orders_.end(), order); }

const QrEntry &QrCache::entry(std::size_t series, int order) const {
	const auto it = std::lower_bound(orders_.begin(), orders_.end(), order);
	if (it == orders_.end() || *it != order) {
		throw InvalidArgument("QR cache holds no entry for order " + std::to_string(order));
	}
	if (series >= n_series_) {
		throw InvalidArgument("series index " + std::to_string(series) + " out of range");
	}
	return entries_[static_cast<std::size_t>(it - orders_.begin())][series];
}

std::size_t QrCache::entry_count() const {
	std::size_t count = 0;
	for (const auto &slot : entries_) {
		count += slot.size();
	}
	return count;
}

bool QrCache::any_degenerate() const {
	for (const auto &slot : entries_) {
		for (const auto &e : slot) {
			if (e.degenerate) {
				return true;
			}
		}
	}
	return false;
}

Matrix QrCache::residual_factor(std::size_t series, const Matrix &coef) const {
	const int m = dim_;
	if (coef.rows() != m || (coef.cols() - 1) % m != 0) {
		throw InvalidArgument("coefficient block does not match cache dimension");
	}
	const auto order = static_cast<int>((coef.cols() - 1) / m);
	const QrEntry &e = entry(series, order);
	Matrix f(m + e.r.rows(), m);
	f.topRows(m) = e.ols_factor;
	f.bottomRows(e.r.rows()) = e.yq - e.r.triangularView<Eigen::Upper>() * coef.transpose();
	return f;
}

namespace {

OlsFit ols_from_entry(const QrEntry &e, int rows) {
	const auto m = static_cast<int>(e.yq.cols());
	OlsFit fit;
	Matrix coef_t;
	if (e.degenerate) {
		bool ridged = false;
		coef_t = solve_normal(e.r.transpose() * e.r, e.r.transpose() * e.yq, true, &ridged);
		fit.degenerate_design = true;
	} else {
		coef_t = e.r.triangularView<Eigen::Upper>().solve(e.yq);
	}
	Matrix f(m + e.r.rows(), m);
	f.topRows(m) = e.ols_factor;
	f.bottomRows(e.r.rows()) = e.yq - e.r.triangularView<Eigen::Upper>() * coef_t;
	Matrix cov = f.transpose() * f / static_cast<double>(rows);
	cov = (0.5 * (cov + cov.transpose())).eval();
	fit.singular_covariance = covariance_is_singular(cov, mean_square(e, rows));
	fit.component = VarComponent::from_stacked(coef_t.transpose(), std::move(cov));
	return fit;
}

} // namespace

OlsFit fit_var_ols(const TimeSeries &series, int order) {
	const Design d = build_design(series, order, order);
	return ols_from_entry(qr_entry(d), static_cast<int>(d.x.rows()));
}

OlsFit fit_var_ols(const QrCache &cache, std::size_t series, int order) {
	return ols_from_entry(cache.entry(series, order), cache.rows_used());
}

PooledFit fit_pooled(const QrCache &cache, int order, std::span<const double> weights) {
	if (weights.size() != cache.n_series()) {
		throw InvalidArgument("weight count does not match series count");
	}
	const int m = cache.dim();
	const int cols = 1 + m * order;
	Matrix gram = Matrix::Zero(cols, cols);
	Matrix rhs = Matrix::Zero(cols, m);
	double mass = 0.0;
	bool any_degenerate = false;
	for (std::size_t n = 0; n < weights.size(); ++n) {
		const double w = weights[n];
		if (w <= 0.0) {
			continue;
		}
		const QrEntry &e = cache.entry(n, order);
		const auto r = e.r.triangularView<Eigen::Upper>();
		gram.noalias() += w * Matrix(r.transpose() * e.r);
		rhs.noalias() += w * Matrix(r.transpose() * e.yq);
		mass += w;
		any_degenerate = any_degenerate || e.degenerate;
	}
	if (!(mass > 0.0)) {
		throw FitFailure("pooled fit over an empty weight set");
	}
	gram = (0.5 * (gram + gram.transpose())).eval();

	PooledFit out;
	out.mass = mass;
	const Matrix coef_t = solve_normal(gram, rhs, any_degenerate, &out.ridge);
	const Matrix coef = coef_t.transpose();

	Matrix scatter = Matrix::Zero(m, m);
	for (std::size_t n = 0; n < weights.size(); ++n) {
		const double w = weights[n];
		if (w <= 0.0) {
			continue;
		}
		const Matrix f = cache.residual_factor(n, coef);
		scatter.noalias() += w * (f.transpose() * f);
	}
	Matrix cov = scatter / (static_cast<double>(cache.rows_used()) * mass);
	cov = (0.5 * (cov + cov.transpose())).eval();
	out.component = VarComponent::from_stacked(coef, std::move(cov));
	return out;
}

Matrix regularize_covariance(const Matrix &covariance, bool *flagged) {
	Matrix cov = 0.5 * (covariance + covariance.transpose());
	if (flagged) {
		*flagged = false;
	}
	const auto m = static_cast<double>(cov.rows());
	double jitter = 1e-8 * (std::max(cov.trace(), 0.0) / m + 1e-12);
	for (int attempt = 0; attempt < 40; ++attempt) {
		Eigen::LLT<Matrix> llt(cov);
		if (llt.info() == Eigen::Success) {
			const Matrix l = llt.matrixL();
			if ((l.diagonal().array() > 0.0).all() && std::isfinite(l.diagonal().array().log().sum())) {
				const double ld = 2.0 * l.diagonal().array().log().sum();
				// a factorable but numerically zero determinant is still unusable
				if (ld > -700.0 * m || attempt > 0) {
					return cov;
				}
			}
		}
		cov.diagonal().array() += jitter;
		if (flagged) {
			*flagged = true;
		}
		jitter *= 10.0;
	}
	throw InvalidCovariance("covariance could not be regularized");
}

} // namespace varclust
