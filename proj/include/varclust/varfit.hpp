#pragma once

#include "varclust/core.hpp"

#include <span>
#include <vector>

namespace varclust {

/// Lower Cholesky factor of a symmetrized SPD matrix.
struct CholeskyFactor {
	Matrix lower;
	double log_det = 0.0;
};

// Symmetrizes (A + A^T)/2 first; throws InvalidCovariance when not PD.
CholeskyFactor cholesky_pd(const Matrix &spd);

double log_det_pd(const Matrix &spd);

/// Sum over rows e_t of e_t^T Omega^{-1} e_t, evaluated as ||L^{-1} E^T||_F^2.
/// Any F with F^T F = E^T E gives the same value, which is how the cached
/// residual factors are consumed.
double psi(const Matrix &residuals, const CholeskyFactor &chol);
double psi(const Matrix &residuals, const Matrix &covariance);

/// Thin-QR products for one (series, order) regression.
struct QrEntry {
	Matrix r;           // (1+mp) x (1+mp), upper triangular
	Matrix yq;          // (1+mp) x m, Q^T Y
	Matrix ols_factor;  // m x m upper factor V of the OLS residuals, V^T V = E^T E
	bool degenerate = false;
};

/// Per-(series, order) QR products shared by every algorithm.
///
/// All regressions use the rows t = p_max+1..T so that fits at different
/// orders stay comparable. Q itself is never stored.
class QrCache {
public:
	static QrCache build(const TimeSeriesSet &data, std::span<const int> orders, int max_order);

	const QrEntry &entry(std::size_t series, int order) const;
	bool has_order(int order) const;

	const std::vector<int> &orders() const { return orders_; }
	int max_order() const { return max_order_; }
	int rows_used() const { return rows_used_; }
	int dim() const { return dim_; }
	std::size_t n_series() const { return n_series_; }
	std::size_t entry_count() const;
	bool any_degenerate() const;

	// Factor F = [V; yq - R coef^T] of the residuals under coef (m x (1+mp)).
	Matrix residual_factor(std::size_t series, const Matrix &coef) const;

private:
	std::vector<int> orders_;
	std::vector<std::vector<QrEntry>> entries_; // [order slot][series]
	int max_order_ = 0;
	int rows_used_ = 0;
	int dim_ = 0;
	std::size_t n_series_ = 0;
};

QrEntry qr_entry(const Design &design);

struct OlsFit {
	VarComponent component;
	bool degenerate_design = false;
	bool singular_covariance = false;
};

// Least squares fit on rows t = p+1..T, covariance E^T E / (T - p).
OlsFit fit_var_ols(const TimeSeries &series, int order);

// Same fit from a cache entry; covariance divides by the cache's rows_used.
OlsFit fit_var_ols(const QrCache &cache, std::size_t series, int order);

struct PooledFit {
	VarComponent component;
	double mass = 0.0;  // sum of weights
	bool ridge = false; // jitter was needed for the coefficient solve
};

/// Weighted pooled least squares over the cached regressions:
/// coef^T = (sum w R^T R)^{-1} (sum w R^T yq) and
/// covariance = sum w E^T E / (rows * sum w). Zero weights are skipped.
/// The covariance is returned as computed and may be singular.
PooledFit fit_pooled(const QrCache &cache, int order, std::span<const double> weights);

/// Returns the covariance unchanged when it factors; otherwise adds
/// 1e-8 * (trace/m + 1e-12) to the diagonal until it does and sets *flagged.
Matrix regularize_covariance(const Matrix &covariance, bool *flagged = nullptr);

} // namespace varclust
