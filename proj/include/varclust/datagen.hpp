#pragma once

#include "varclust/core.hpp"
#include "varclust/metrics.hpp"
#include "varclust/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace varclust {

struct DatasetSpec {
	int m = 3;
	int p = 5;
	int T = 100;
	int K = 8;
	int n_per_cluster = 40;
	std::uint64_t seed = 0;
	int burn_in = 200;
	double root_min_abs = 1.1;
	double root_max_abs = 5.0;

	void validate() const;
};

struct StableVarOptions {
	double root_min_abs = 1.1;
	double root_max_abs = 5.0;
};

// Coefficients lambda_1..lambda_p of g(z) = prod_r (1 - z / root_r) = 1 - sum_i lambda_i z^i.
std::vector<double> lag_coefficients_from_roots(std::span<const double> roots);

/// Lag matrices U^T diag(lambda_i) U sharing one random orthogonal basis U,
/// each channel's reverse characteristic polynomial having the given roots.
std::vector<Matrix> lags_from_roots(const Matrix &roots, const Matrix &basis);

// mp x mp companion matrix [A_1 ... A_p; I 0].
Matrix companion_matrix(const std::vector<Matrix> &lags);
double spectral_radius(const Matrix &a);

// Random orthogonal matrix from the QR of a standard normal draw.
Matrix random_orthogonal(int m, Rng &rng);

/// L^T L with L standard normal, redrawn while cond(L^T L) > 1e6.
Matrix generate_spd(int m, Rng &rng);

/// Stable VAR(p) with real roots of magnitude in [root_min_abs, root_max_abs].
/// Throws SimulationFailure if the companion spectral radius exceeds
/// 1/root_min_abs + 1e-8.
VarComponent generate_stable_var(int m, int p, Rng &rng, const StableVarOptions &opts = {});

/// Y_t = c + sum A_i Y_{t-i} + e_t from zero initial values; the first
/// burn_in points are discarded.
TimeSeries simulate_var(const VarComponent &comp, int T, int burn_in, Rng &rng, std::string id = "sim");

struct Dataset {
	TimeSeriesSet data;
	LabelVector truth; // 1-based
	std::vector<VarComponent> models;
	DatasetSpec spec;
};

/// K models, n_per_cluster series each, shuffled. Model k draws from stream
/// (seed, k), series j of cluster k from its own split stream.
Dataset generate_dataset(const DatasetSpec &spec);

} // namespace varclust
