#pragma once

#include "varclust/cmvar.hpp"
#include "varclust/klmvar.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace varclust {

enum class Algorithm { Cmvar, Klmvar, Naive2Step };

/// Number of K-multisets drawn from n_p orders, C(n_p + K - 1, K).
/// Throws RangeError when the value does not fit in a signed 64-bit integer.
std::int64_t model_space_cardinality(int n_p, int n_clusters);

/// Hard-label surrogate log-likelihood
/// sum_n [ (m/2)(p_max - T) log 2 pi - D_{n,k(n)}(coef_k, Omega_k) / 2 ],
/// with D evaluated against the raw pooled covariances.
double surrogate_log_likelihood(const KlmvarResult &result, const QrCache &cache);

/// Free parameter count m^2 sum p_k + K(m^2/2 + 3m/2) + eta_mix, with
/// eta_mix = K - 1 for cMVAR and N for k-LMVAR.
double bic_parameter_count(Algorithm algo, int m, std::span<const int> orders, std::size_t n_series);

/// -2 log L + params * log[N (T - p_max)] + 2 gamma log card(S_j).
double extended_bic(double log_likelihood, Algorithm algo, int m, std::span<const int> orders, std::size_t n_series,
                    int rows_used, double gamma, int n_p);
double extended_bic(const KlmvarResult &result, const QrCache &cache, std::span<const int> orders, double gamma,
                    int n_p);
double extended_bic(const CmvarResult &result, const QrCache &cache, std::span<const int> orders, double gamma,
                    int n_p);

struct SelectionConfig {
	Algorithm algo = Algorithm::Klmvar;
	double gamma = 0.5;
	int restarts = 3;
	int max_iters = 500;
	double tol = 1e-8;
	std::uint64_t seed = 0;
};

struct BicCell {
	int K = 0;
	int p = 0;
	double score = 0.0; // +inf when the fit failed
	bool converged = false;
	bool failed = false;
	std::string error;
};

struct BicGrid {
	std::vector<int> k_candidates;
	std::vector<int> p_candidates;
	Matrix scores; // N_K x N_p
	std::vector<BicCell> cells; // row-major over (K, p)
	double gamma = 0.0;
	std::uint64_t seed = 0;
	int best_k = 0;
	int best_p = 0;
};

/// One cell of the BIC surface: K clusters, every order equal to p,
/// regressions starting at the cache's p_max + 1.
BicCell bic_cell(const QrCache &cache, const TimeSeriesSet &data, int n_clusters, int order, int n_p,
                 const SelectionConfig &config);

/// Fits every (K, p) pair with a shared p_max = max(p_candidates). The best
/// cell is the minimal finite score; ties go to smaller K, then smaller p.
BicGrid bic_surface(const TimeSeriesSet &data, std::span<const int> k_candidates, std::span<const int> p_candidates,
                    const SelectionConfig &config);

/// -2 log L_VAR + [m^2 p + m(m+3)/2] log(T - p_max) for one series, all
/// candidates fit on the common window t = p_max+1..T.
std::vector<double> order_bic_scores(const TimeSeries &series, std::span<const int> p_candidates);
int select_order_bic(const TimeSeries &series, std::span<const int> p_candidates);

// Mode of the per-series choices; ties go to the smaller order.
int vote_order(const TimeSeriesSet &data, std::span<const int> p_candidates);

struct AdhocSelection {
	int K = 0;
	int p = 0;
	int cycles = 0;
};

/// Cyclic descent: p by per-series voting, then K by BIC at that p, then
/// alternating full-BIC sweeps over p (K fixed) and K (p fixed) until the
/// pair is stable, at most 5 cycles. Uses gamma = 0.
AdhocSelection adhoc_select(const TimeSeriesSet &data, std::span<const int> k_candidates,
                            std::span<const int> p_candidates, const SelectionConfig &config);

} // namespace varclust
