#include "varclust/klmvar.hpp"
#include "varclust/cmvar.hpp"
#include "varclust/kmeans.hpp"
#include "varclust/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace varclust {

namespace {

constexpr int kInitAttempts = 20;
constexpr double kDistinctTol = 1e-10;

void check_orders(const QrCache &cache, int n_clusters, std::span<const int> orders) {
	if (n_clusters < 1) {
		throw InvalidArgument("number of clusters must be positive");
	}
	if (static_cast<int>(orders.size()) != n_clusters) {
		throw InvalidArgument("expected " + std::to_string(n_clusters) + " orders, got " +
		                      std::to_string(orders.size()));
	}
	for (const int p : orders) {
		if (!cache.has_order(p)) {
			throw InvalidArgument("QR cache was not built for order " + std::to_string(p));
		}
	}
	if (static_cast<std::size_t>(n_clusters) > cache.n_series()) {
		throw InvalidArgument("K=" + std::to_string(n_clusters) + " exceeds the number of series " +
		                      std::to_string(cache.n_series()));
	}
}

// Max-norm gap between two stacked coefficient blocks, zero padded to equal width.
double coefficient_gap(const Matrix &a, const Matrix &b) {
	const auto cols = std::max(a.cols(), b.cols());
	Matrix pa = Matrix::Zero(a.rows(), cols);
	Matrix pb = Matrix::Zero(b.rows(), cols);
	pa.leftCols(a.cols()) = a;
	pb.leftCols(b.cols()) = b;
	return (pa - pb).cwiseAbs().maxCoeff();
}

bool pairwise_distinct(const MixtureParams &params) {
	for (int i = 0; i < params.size(); ++i) {
		const Matrix ci = params.components[i].stacked();
		for (int j = i + 1; j < params.size(); ++j) {
			if (coefficient_gap(ci, params.components[j].stacked()) <= kDistinctTol) {
				return false;
			}
		}
	}
	return true;
}

std::uint64_t hash_labels(const std::vector<int> &labels) {
	std::uint64_t h = 1469598103934665603ull; // FNV-1a
	for (const int v : labels) {
		auto x = static_cast<std::uint32_t>(v);
		for (int b = 0; b < 4; ++b) {
			h ^= (x >> (8 * b)) & 0xffu;
			h *= 1099511628211ull;
		}
	}
	return h;
}

std::vector<int> cluster_sizes(const std::vector<int> &labels, int k) {
	std::vector<int> sizes(static_cast<std::size_t>(k), 0);
	for (const int l : labels) {
		++sizes[static_cast<std::size_t>(l)];
	}
	return sizes;
}

// Moves the worst-fitting series of a multi-member cluster into each empty one.
int reseed_empty(std::vector<int> &labels, const Matrix &psi, int k) {
	auto sizes = cluster_sizes(labels, k);
	int events = 0;
	std::vector<bool> moved(labels.size(), false);
	for (int c = 0; c < k; ++c) {
		if (sizes[static_cast<std::size_t>(c)] > 0) {
			continue;
		}
		long worst = -1;
		double worst_psi = -std::numeric_limits<double>::infinity();
		for (std::size_t n = 0; n < labels.size(); ++n) {
			const int l = labels[n];
			if (moved[n] || sizes[static_cast<std::size_t>(l)] < 2) {
				continue;
			}
			const double v = psi(static_cast<Eigen::Index>(n), l);
			if (v > worst_psi) {
				worst_psi = v;
				worst = static_cast<long>(n);
			}
		}
		if (worst < 0) {
			break;
		}
		--sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(worst)])];
		labels[static_cast<std::size_t>(worst)] = c;
		++sizes[static_cast<std::size_t>(c)];
		moved[static_cast<std::size_t>(worst)] = true;
		++events;
	}
	return events;
}

KlmvarResult run_once(const QrCache &cache, int k, std::span<const int> orders, const KlmvarConfig &config,
                      std::uint64_t stream) {
	MixtureParams init;
	if (config.init == KlmvarInit::GivenComponents) {
		if (!config.initial_components || static_cast<int>(config.initial_components->size()) != k) {
			throw InitFailure("given-components initialization needs exactly K components");
		}
		init.components = *config.initial_components;
		for (int c = 0; c < k; ++c) {
			if (init.components[c].order() != orders[c]) {
				throw InvalidArgument("initial component order does not match requested order");
			}
		}
	} else {
		init = initialize(cache, k, orders, config.init, config.seed, stream);
	}

	KlmvarResult res;
	ClusterModels models = ClusterModels::from(init, config.normalize_covariance);
	res.covariance_regularized = models.regularized;
	Matrix psi = psi_matrix(cache, models);
	std::vector<int> labels = argmin_rows(psi);
	res.objective_trace.push_back(objective(cache, labels, models));

	std::unordered_set<std::uint64_t> seen;
	MixtureParams current = init;
	ParameterUpdate update;
	for (int it = 1; it <= config.max_iters; ++it) {
		if (config.empty_policy == EmptyClusterPolicy::Reseed) {
			res.empty_cluster_events += reseed_empty(labels, psi, k);
		}
		seen.insert(hash_labels(labels));

		update = update_parameters(cache, labels, orders, &current);
		current = update.params;
		res.ridge = res.ridge || update.ridge;
		models = ClusterModels::from(current, config.normalize_covariance);
		res.covariance_regularized = res.covariance_regularized || models.regularized;
		const double f = objective(cache, labels, models);
		const double f_prev = res.objective_trace.back();
		res.objective_trace.push_back(f);
		res.iterations = it;

		if (it > 1 && std::abs(f_prev - f) < config.tol * (1.0 + std::abs(f))) {
			res.converged = true;
			break;
		}
		psi = psi_matrix(cache, models);
		std::vector<int> next = argmin_rows(psi);
		if (next == labels) {
			res.converged = true;
			break;
		}
		if (seen.contains(hash_labels(next))) {
			res.label_cycle = true;
			labels = std::move(next);
			break;
		}
		labels = std::move(next);
	}

	res.params = current;
	res.frozen = update.frozen;
	res.normalized_covariances.clear();
	for (const auto &comp : current.components) {
		res.normalized_covariances.push_back(normalize_covariance(regularize_covariance(comp.covariance)));
	}
	res.labels = labels;
	res.assignment = Assignment::hard(labels, k);
	res.objective = objective(cache, labels, models);
	res.cluster_sizes = cluster_sizes(labels, k);
	res.distinct_label_states = seen.size();
	return res;
}

} // namespace

void KlmvarConfig::validate() const {
	if (!(tol > 0.0)) {
		throw InvalidArgument("tolerance must be positive");
	}
	if (max_iters < 1) {
		throw InvalidArgument("max_iters must be at least 1");
	}
	if (restarts < 1) {
		throw InvalidArgument("restarts must be at least 1");
	}
}

Matrix normalize_covariance(const Matrix &covariance) {
	const double ld = log_det_pd(covariance);
	const Matrix sym = 0.5 * (covariance + covariance.transpose());
	return sym * std::exp(-ld / static_cast<double>(covariance.rows()));
}

ClusterModels ClusterModels::from(const MixtureParams &params, bool normalize) {
	ClusterModels out;
	for (const auto &comp : params.components) {
		bool flagged = false;
		Matrix raw = regularize_covariance(comp.covariance, &flagged);
		out.regularized = out.regularized || flagged;
		Matrix used = normalize ? normalize_covariance(raw) : raw;
		out.chol.push_back(cholesky_pd(used));
		out.coefs.push_back(comp.stacked());
		out.raw.push_back(std::move(raw));
		out.used.push_back(std::move(used));
	}
	return out;
}

Matrix psi_matrix(const QrCache &cache, const ClusterModels &models) {
	const auto n_series = static_cast<long>(cache.n_series());
	const int k = models.size();
	Matrix out(n_series, k);
#pragma omp parallel for schedule(static)
	for (long n = 0; n < n_series; ++n) {
		for (int c = 0; c < k; ++c) {
			out(n, c) = psi(cache.residual_factor(static_cast<std::size_t>(n), models.coefs[c]), models.chol[c]);
		}
	}
	return out;
}

std::vector<int> argmin_rows(const Matrix &psi) {
	std::vector<int> labels(static_cast<std::size_t>(psi.rows()));
	for (Eigen::Index n = 0; n < psi.rows(); ++n) {
		Eigen::Index best = 0;
		for (Eigen::Index c = 1; c < psi.cols(); ++c) {
			if (psi(n, c) < psi(n, best)) {
				best = c;
			}
		}
		labels[static_cast<std::size_t>(n)] = static_cast<int>(best);
	}
	return labels;
}

Assignment assign_labels(const QrCache &cache, const MixtureParams &params, bool normalize) {
	const ClusterModels models = ClusterModels::from(params, normalize);
	return Assignment::hard(argmin_rows(psi_matrix(cache, models)), models.size());
}

ParameterUpdate update_parameters(const QrCache &cache, std::span<const int> labels, std::span<const int> orders,
                                  const MixtureParams *previous) {
	if (labels.size() != cache.n_series()) {
		throw InvalidArgument("label count does not match series count");
	}
	const int k = static_cast<int>(orders.size());
	ParameterUpdate out;
	out.params.components.resize(static_cast<std::size_t>(k));
	out.frozen.assign(static_cast<std::size_t>(k), false);
	std::vector<bool> ridge(static_cast<std::size_t>(k), false);

	std::vector<std::vector<double>> weights(static_cast<std::size_t>(k), std::vector<double>(labels.size(), 0.0));
	for (std::size_t n = 0; n < labels.size(); ++n) {
		if (labels[n] < 0 || labels[n] >= k) {
			throw InvalidArgument("label out of range");
		}
		weights[static_cast<std::size_t>(labels[n])][n] = 1.0;
	}
	for (int c = 0; c < k; ++c) {
		const auto &w = weights[static_cast<std::size_t>(c)];
		if (std::none_of(w.begin(), w.end(), [](double v) { return v > 0.0; })) {
			if (previous == nullptr) {
				throw FitFailure("cluster " + std::to_string(c) + " is empty");
			}
			out.params.components[static_cast<std::size_t>(c)] = previous->components[static_cast<std::size_t>(c)];
			out.frozen[static_cast<std::size_t>(c)] = true;
			continue;
		}
		PooledFit fit = fit_pooled(cache, orders[c], w);
		out.params.components[static_cast<std::size_t>(c)] = std::move(fit.component);
		ridge[static_cast<std::size_t>(c)] = fit.ridge;
	}
	out.ridge = std::find(ridge.begin(), ridge.end(), true) != ridge.end();
	return out;
}

Matrix dissimilarity_matrix(const QrCache &cache, const std::vector<Matrix> &coefs,
                            const std::vector<Matrix> &covariances) {
	if (coefs.size() != covariances.size()) {
		throw InvalidArgument("coefficient and covariance counts differ");
	}
	const double rows = static_cast<double>(cache.rows_used());
	ClusterModels models;
	models.coefs = coefs;
	for (const auto &cov : covariances) {
		models.chol.push_back(cholesky_pd(cov));
	}
	Matrix d = psi_matrix(cache, models);
	for (std::size_t c = 0; c < covariances.size(); ++c) {
		d.col(static_cast<Eigen::Index>(c)).array() += rows * models.chol[c].log_det;
	}
	return d;
}

double objective(const QrCache &cache, std::span<const int> labels, const ClusterModels &models) {
	if (labels.size() != cache.n_series()) {
		throw InvalidArgument("label count does not match series count");
	}
	const double rows = static_cast<double>(cache.rows_used());
	double f = 0.0;
	for (std::size_t n = 0; n < labels.size(); ++n) {
		const int c = labels[n];
		f += rows * models.chol[static_cast<std::size_t>(c)].log_det +
		     psi(cache.residual_factor(n, models.coefs[static_cast<std::size_t>(c)]),
		         models.chol[static_cast<std::size_t>(c)]);
	}
	return f;
}

double objective(const QrCache &cache, std::span<const int> labels, const MixtureParams &params, bool normalize) {
	return objective(cache, labels, ClusterModels::from(params, normalize));
}

Matrix coefficient_features(const QrCache &cache, int order) {
	const auto n_series = static_cast<long>(cache.n_series());
	const int m = cache.dim();
	Matrix features(n_series, m * (1 + m * order));
#pragma omp parallel for schedule(static)
	for (long n = 0; n < n_series; ++n) {
		const Matrix coef = fit_var_ols(cache, static_cast<std::size_t>(n), order).component.stacked();
		features.row(n) = coef.reshaped().transpose();
	}
	return features;
}

std::vector<int> naive_two_step(const QrCache &cache, int n_clusters, int order, std::uint64_t seed,
                                std::uint64_t stream) {
	Rng rng(seed, stream);
	return kmeans(coefficient_features(cache, order), n_clusters, rng).labels;
}

MixtureParams initialize(const QrCache &cache, int n_clusters, std::span<const int> orders, KlmvarInit strategy,
                         std::uint64_t seed, std::uint64_t stream) {
	check_orders(cache, n_clusters, orders);
	const int k = n_clusters;
	const auto n_series = cache.n_series();
	const Rng base(seed, stream);

	if (strategy == KlmvarInit::RandomLabels) {
		for (int attempt = 0; attempt < kInitAttempts; ++attempt) {
			Rng rng = base.split(static_cast<std::uint64_t>(attempt));
			std::vector<int> perm(n_series);
			std::iota(perm.begin(), perm.end(), 0);
			rng.shuffle(std::span<int>(perm));
			std::vector<int> labels(n_series);
			// the first K shuffled series guarantee every cluster a member
			for (std::size_t i = 0; i < n_series; ++i) {
				labels[static_cast<std::size_t>(perm[i])] =
				    i < static_cast<std::size_t>(k) ? static_cast<int>(i)
				                                    : static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
			}
			MixtureParams params = update_parameters(cache, labels, orders).params;
			if (pairwise_distinct(params)) {
				return params;
			}
		}
		throw InitFailure("could not find " + std::to_string(k) + " distinct initial components");
	}
	if (strategy != KlmvarInit::Naive2Step) {
		throw InvalidArgument("initialize() handles random-labels and naive-2step only");
	}

	const int feature_order = *std::max_element(orders.begin(), orders.end());
	const Matrix features = coefficient_features(cache, feature_order);
	for (int attempt = 0; attempt < kInitAttempts; ++attempt) {
		Rng rng = base.split(static_cast<std::uint64_t>(attempt));
		const KMeansResult km = kmeans(features, k, rng);
		MixtureParams params;
		for (int c = 0; c < k; ++c) {
			// representative: the member closest to the group centroid
			long rep = -1;
			double best = std::numeric_limits<double>::infinity();
			for (std::size_t n = 0; n < n_series; ++n) {
				if (km.labels[n] != c) {
					continue;
				}
				const double d = (features.row(static_cast<Eigen::Index>(n)) - km.centroids.row(c)).squaredNorm();
				if (d < best) {
					best = d;
					rep = static_cast<long>(n);
				}
			}
			if (rep < 0) {
				break;
			}
			OlsFit fit = fit_var_ols(cache, static_cast<std::size_t>(rep), orders[c]);
			fit.component.covariance = regularize_covariance(fit.component.covariance);
			params.components.push_back(std::move(fit.component));
		}
		if (params.size() == k && pairwise_distinct(params)) {
			return params;
		}
	}
	throw InitFailure("could not find " + std::to_string(k) + " distinct initial components");
}

KlmvarResult fit_klmvar(const QrCache &cache, int n_clusters, std::span<const int> orders,
                        const KlmvarConfig &config) {
	config.validate();
	check_orders(cache, n_clusters, orders);
	const int restarts = config.init == KlmvarInit::GivenComponents ? 1 : config.restarts;
	KlmvarResult best;
	bool have = false;
	for (int r = 0; r < restarts; ++r) {
		KlmvarResult res = run_once(cache, n_clusters, orders, config, static_cast<std::uint64_t>(r));
		res.restart = r;
		if (!have || res.objective < best.objective) {
			best = std::move(res);
			have = true;
		}
	}
	return best;
}

KlmvarResult fit_klmvar(const TimeSeriesSet &data, int n_clusters, std::span<const int> orders,
                        const KlmvarConfig &config) {
	if (orders.empty()) {
		throw InvalidArgument("no orders given");
	}
	const int p_max = *std::max_element(orders.begin(), orders.end());
	const QrCache cache = QrCache::build(data, orders, p_max);
	return fit_klmvar(cache, n_clusters, orders, config);
}

std::vector<Assignment> soft_limit_probe(const QrCache &cache, const MixtureParams &params,
                                         std::span<const double> gammas) {
	for (std::size_t i = 0; i < gammas.size(); ++i) {
		if (!(gammas[i] > 0.0) || (i > 0 && !(gammas[i] < gammas[i - 1]))) {
			throw InvalidArgument("gamma list must be positive and strictly decreasing");
		}
	}
	const ClusterModels models = ClusterModels::from(params, true);
	const Matrix psi_tilde = psi_matrix(cache, models);
	const int k = models.size();
	const int m = cache.dim();
	const double rows = static_cast<double>(cache.rows_used());
	Vector log_alpha(k);
	for (int c = 0; c < k; ++c) {
		log_alpha(c) = params.weights ? std::log((*params.weights)(c)) : -std::log(static_cast<double>(k));
	}

	std::vector<Assignment> out;
	out.reserve(gammas.size());
	for (const double gamma : gammas) {
		Matrix g(psi_tilde.rows(), k);
		for (int c = 0; c < k; ++c) {
			const double log_det = m * std::log(gamma) + models.chol[static_cast<std::size_t>(c)].log_det;
			g.col(c) = (log_alpha(c) - 0.5 * rows * log_det) - psi_tilde.col(c).array() / (2.0 * gamma);
		}
		out.push_back(normalize_log_weights(g).tau);
	}
	return out;
}

} // namespace varclust
