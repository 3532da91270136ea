#pragma once

#include "varclust/core.hpp"
#include "varclust/varfit.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace varclust {

enum class CmvarInit {
	RandomResponsibilities, // Dirichlet(1,...,1) rows, then an M-step
	FromComponents,         // given (or naive 2-step) components, then an E-step
};

struct CmvarConfig {
	int max_iters = 500;
	double tol = 1e-8;
	std::uint64_t seed = 0;
	CmvarInit init = CmvarInit::RandomResponsibilities;
	// Used by FromComponents; when absent the naive 2-step initializer supplies them.
	std::optional<MixtureParams> initial;

	void validate() const;
};

/// Row-wise softmax of log weights g_{n,k}. A row whose spread
/// max_k g - min_k g exceeds 700 counts as an underflow event: its
/// responsibilities are numerically one-hot.
struct Responsibilities {
	Assignment tau;
	Vector row_log_norm;     // logsumexp_k g_{n,k}
	int underflow_events = 0;
	int naive_zero_rows = 0; // rows where sum_k exp(g_{n,k}) is exactly 0 in double
};

Responsibilities normalize_log_weights(const Matrix &log_weights);

/// N x K matrix of psi_{n,k} against each component's own covariance.
Matrix psi_matrix(const QrCache &cache, const std::vector<VarComponent> &components);

struct EStep {
	Responsibilities resp;
	// sum_n log sum_k alpha_k prod_t f_k(e_nkt): the quantity EM ascends.
	double series_log_likelihood = 0.0;
};

// g_{n,k} = log alpha_k - (T-p)/2 log|Omega_k| - psi_{n,k}/2 in the log domain.
// Throws NumericFailure if any g is NaN.
EStep e_step_detail(const QrCache &cache, const MixtureParams &params);
Assignment e_step(const QrCache &cache, const MixtureParams &params);

struct MStep {
	MixtureParams params;
	std::vector<bool> frozen; // column mass too small; previous component kept
	bool ridge = false;
	bool covariance_regularized = false;
};

// alpha_k = column mean of tau; tau-weighted pooled regression per component.
// A column with sum_n tau_{n,k} (T-p) <= m keeps previous->components[k], or
// throws FitFailure when there is no previous value.
MStep m_step(const QrCache &cache, const Assignment &tau, std::span<const int> orders,
             const MixtureParams *previous = nullptr);

/// Pointwise mixture log-likelihood
/// sum_n sum_t log sum_k alpha_k f_k(e_nkt, Omega_k) over t = p_max+1..T.
double log_likelihood(const TimeSeriesSet &data, const MixtureParams &params, int max_order);

// sum_n log sum_k alpha_k prod_t f_k(e_nkt, Omega_k).
double series_log_likelihood(const QrCache &cache, const MixtureParams &params);

struct CmvarResult {
	MixtureParams params;          // weights sorted descending
	Assignment tau;                // soft
	std::vector<int> labels;       // row argmax, 0-based
	double log_likelihood = 0.0;   // series-level, last entry of the trace
	std::vector<double> log_likelihood_trace;
	double pointwise_log_likelihood = 0.0;
	int iterations = 0;
	bool converged = false;
	int underflow_events = 0;      // summed over all E-steps
	int naive_zero_rows = 0;       // summed over all E-steps
	bool numeric_failure = false;  // the direct (linear-domain) formula would divide 0 by 0
	bool degenerate_init = false;  // all initial components identical
	std::vector<bool> frozen;
	bool ridge = false;
	bool covariance_regularized = false;
};

CmvarResult fit_cmvar(const QrCache &cache, const TimeSeriesSet &data, int n_clusters, std::span<const int> orders,
                      const CmvarConfig &config);
CmvarResult fit_cmvar(const TimeSeriesSet &data, int n_clusters, std::span<const int> orders,
                      const CmvarConfig &config);

} // namespace varclust
