#pragma once

#include "varclust/core.hpp"
#include "varclust/varfit.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace varclust {

enum class KlmvarInit {
	RandomLabels,    // random one-hot labels, then one parameter update
	Naive2Step,      // per-series OLS, k-means++ on the coefficients, one representative per group
	GivenComponents, // KlmvarConfig::initial_components
};

enum class EmptyClusterPolicy {
	Reseed, // move the worst-fitting series (largest psi) of a multi-member cluster into it
	Freeze, // keep the previous component and flag it
};

struct KlmvarConfig {
	int max_iters = 500;
	double tol = 1e-8;
	std::uint64_t seed = 0;
	KlmvarInit init = KlmvarInit::RandomLabels;
	EmptyClusterPolicy empty_policy = EmptyClusterPolicy::Reseed;
	// Label update uses det-normalized covariances; false uses raw Omega_k.
	bool normalize_covariance = true;
	// Independent initializations (split seed streams); the lowest objective wins.
	int restarts = 1;
	std::optional<std::vector<VarComponent>> initial_components;

	void validate() const;
};

/// Omega / det(Omega)^{1/m}, so that the result has unit determinant.
Matrix normalize_covariance(const Matrix &covariance);

/// Label-update view of a parameter set: the covariance used in psi
/// (normalized or raw) and its Cholesky factor.
struct ClusterModels {
	std::vector<Matrix> coefs;       // m x (1 + m p_k)
	std::vector<Matrix> raw;         // Omega_k
	std::vector<Matrix> used;        // Omega~_k or Omega_k
	std::vector<CholeskyFactor> chol; // of `used`
	bool regularized = false;

	static ClusterModels from(const MixtureParams &params, bool normalize);
	int size() const { return static_cast<int>(coefs.size()); }
};

// psi_{n,k} against the label-update covariances.
Matrix psi_matrix(const QrCache &cache, const ClusterModels &models);

/// argmin_k psi_{n,k}, ties to the lowest k.
Assignment assign_labels(const QrCache &cache, const MixtureParams &params, bool normalize = true);
std::vector<int> argmin_rows(const Matrix &psi);

struct ParameterUpdate {
	MixtureParams params; // raw pooled Omega_k, no weights
	std::vector<bool> frozen;
	bool ridge = false;
};

/// Pooled OLS over the members of each cluster. An empty cluster keeps
/// previous->components[k] when given, otherwise throws FitFailure.
ParameterUpdate update_parameters(const QrCache &cache, std::span<const int> labels, std::span<const int> orders,
                                  const MixtureParams *previous = nullptr);

/// D_{n,k} = (T-p) log|S_k| + sum_t e^T S_k^{-1} e for arbitrary covariances S_k.
Matrix dissimilarity_matrix(const QrCache &cache, const std::vector<Matrix> &coefs,
                            const std::vector<Matrix> &covariances);

/// f = sum_n D_{n,label(n)} evaluated with the label-update covariances.
double objective(const QrCache &cache, std::span<const int> labels, const ClusterModels &models);
double objective(const QrCache &cache, std::span<const int> labels, const MixtureParams &params,
                 bool normalize = true);

/// Per-series OLS stacked coefficients as k-means features (N x m(1+mp)).
Matrix coefficient_features(const QrCache &cache, int order);

// Naive 2-step baseline: per-series OLS, then k-means++ on the coefficients.
std::vector<int> naive_two_step(const QrCache &cache, int n_clusters, int order, std::uint64_t seed,
                                std::uint64_t stream = 0);

/// Initial components. Throws InitFailure when K pairwise distinct components
/// (max-norm coefficient gap > 1e-10) cannot be found within 20 reseeds.
MixtureParams initialize(const QrCache &cache, int n_clusters, std::span<const int> orders, KlmvarInit strategy,
                         std::uint64_t seed, std::uint64_t stream = 0);

struct KlmvarResult {
	MixtureParams params;                   // raw Omega_k, no weights
	std::vector<Matrix> normalized_covariances;
	Assignment assignment;                  // one-hot
	std::vector<int> labels;                // 0-based
	double objective = 0.0;
	std::vector<double> objective_trace;    // f at init, then after every parameter update
	int iterations = 0;
	bool converged = false;
	std::vector<int> cluster_sizes;
	bool label_cycle = false;               // a label configuration was revisited
	std::size_t distinct_label_states = 0;
	int empty_cluster_events = 0;
	std::vector<bool> frozen;
	bool ridge = false;
	bool covariance_regularized = false;
	int restart = 0;                        // which restart produced this result
};

KlmvarResult fit_klmvar(const QrCache &cache, int n_clusters, std::span<const int> orders,
                        const KlmvarConfig &config);
KlmvarResult fit_klmvar(const TimeSeriesSet &data, int n_clusters, std::span<const int> orders,
                        const KlmvarConfig &config);

/// cMVAR responsibilities with Omega_k replaced by gamma * Omega~_k, one
/// Assignment per gamma. Uniform weights when params carry none.
std::vector<Assignment> soft_limit_probe(const QrCache &cache, const MixtureParams &params,
                                         std::span<const double> gammas);

} // namespace varclust
