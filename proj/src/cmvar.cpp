#include "varclust/cmvar.hpp"
#include "varclust/klmvar.hpp"
#include "varclust/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace varclust {

namespace {

constexpr double kUnderflowSpread = 700.0;

double log_2pi() { return std::log(2.0 * std::numbers::pi); }

struct Prepared {
	std::vector<CholeskyFactor> chol;
	bool regularized = false;
};

Prepared prepare(const MixtureParams &params) {
	Prepared out;
	for (const auto &comp : params.components) {
		bool flagged = false;
		out.chol.push_back(cholesky_pd(regularize_covariance(comp.covariance, &flagged)));
		out.regularized = out.regularized || flagged;
	}
	return out;
}

Vector log_weights_of(const MixtureParams &params) {
	const int k = params.size();
	Vector out(k);
	for (int c = 0; c < k; ++c) {
		out(c) = params.weights ? std::log((*params.weights)(c)) : -std::log(static_cast<double>(k));
	}
	return out;
}

bool all_identical(const MixtureParams &params) {
	for (int c = 1; c < params.size(); ++c) {
		const auto &a = params.components[0];
		const auto &b = params.components[static_cast<std::size_t>(c)];
		if (a.order() != b.order()) {
			return false;
		}
		if ((a.stacked() - b.stacked()).cwiseAbs().maxCoeff() > 1e-10 ||
		    (a.covariance - b.covariance).cwiseAbs().maxCoeff() > 1e-10) {
			return false;
		}
	}
	return params.size() > 1;
}

Assignment dirichlet_rows(std::size_t n, int k, Rng &rng) {
	Assignment a{Matrix(static_cast<Eigen::Index>(n), k)};
	for (Eigen::Index i = 0; i < a.tau.rows(); ++i) {
		for (int c = 0; c < k; ++c) {
			a.tau(i, c) = rng.exponential();
		}
		a.tau.row(i) /= a.tau.row(i).sum();
	}
	return a;
}

} // namespace

void CmvarConfig::validate() const {
	if (!(tol > 0.0)) {
		throw InvalidArgument("tolerance must be positive");
	}
	if (max_iters < 1) {
		throw InvalidArgument("max_iters must be at least 1");
	}
}

Responsibilities normalize_log_weights(const Matrix &log_weights) {
	Responsibilities out;
	const auto n = log_weights.rows();
	const auto k = log_weights.cols();
	out.tau.tau.resize(n, k);
	out.row_log_norm.resize(n);
	for (Eigen::Index i = 0; i < n; ++i) {
		const double hi = log_weights.row(i).maxCoeff();
		const double lo = log_weights.row(i).minCoeff();
		if (!std::isfinite(hi)) {
			throw NumericFailure("responsibility row has no finite log weight", static_cast<int>(i), 0);
		}
		if (hi - lo > kUnderflowSpread) {
			++out.underflow_events;
		}
		double naive = 0.0;
		for (Eigen::Index c = 0; c < k; ++c) {
			naive += std::exp(log_weights(i, c));
		}
		if (naive == 0.0 || !std::isfinite(naive)) {
			++out.naive_zero_rows;
		}
		const Eigen::ArrayXd shifted = (log_weights.row(i).array() - hi).exp();
		const double sum = shifted.sum();
		out.row_log_norm(i) = hi + std::log(sum);
		out.tau.tau.row(i) = (shifted / sum).matrix().transpose();
	}
	return out;
}

Matrix psi_matrix(const QrCache &cache, const std::vector<VarComponent> &components) {
	MixtureParams params{components, std::nullopt};
	const Prepared prep = prepare(params);
	const auto n_series = static_cast<long>(cache.n_series());
	const int k = static_cast<int>(components.size());
	std::vector<Matrix> coefs;
	for (const auto &c : components) {
		coefs.push_back(c.stacked());
	}
	Matrix out(n_series, k);
#pragma omp parallel for schedule(static)
	for (long n = 0; n < n_series; ++n) {
		for (int c = 0; c < k; ++c) {
			out(n, c) = psi(cache.residual_factor(static_cast<std::size_t>(n), coefs[static_cast<std::size_t>(c)]),
			                prep.chol[static_cast<std::size_t>(c)]);
		}
	}
	return out;
}

EStep e_step_detail(const QrCache &cache, const MixtureParams &params) {
	const Prepared prep = prepare(params);
	const Matrix psi = psi_matrix(cache, params.components);
	const Vector log_alpha = log_weights_of(params);
	const double rows = static_cast<double>(cache.rows_used());
	const int k = params.size();

	Matrix g(psi.rows(), k);
	for (int c = 0; c < k; ++c) {
		g.col(c) = (log_alpha(c) - 0.5 * rows * prep.chol[static_cast<std::size_t>(c)].log_det) - 0.5 * psi.col(c).array();
	}
	for (Eigen::Index n = 0; n < g.rows(); ++n) {
		for (int c = 0; c < k; ++c) {
			if (std::isnan(g(n, c))) {
				throw NumericFailure("NaN log responsibility", static_cast<int>(n), c);
			}
		}
	}
	EStep out;
	out.resp = normalize_log_weights(g);
	const double m = static_cast<double>(cache.dim());
	out.series_log_likelihood =
	    out.resp.row_log_norm.sum() - 0.5 * static_cast<double>(g.rows()) * rows * m * log_2pi();
	return out;
}

Assignment e_step(const QrCache &cache, const MixtureParams &params) { return e_step_detail(cache, params).resp.tau; }

MStep m_step(const QrCache &cache, const Assignment &tau, std::span<const int> orders, const MixtureParams *previous) {
	const int k = static_cast<int>(orders.size());
	if (tau.n_clusters() != k || static_cast<std::size_t>(tau.n_series()) != cache.n_series()) {
		throw InvalidArgument("responsibility matrix shape does not match data and orders");
	}
	const double rows = static_cast<double>(cache.rows_used());
	const double m = static_cast<double>(cache.dim());
	const double n = static_cast<double>(tau.n_series());

	MStep out;
	out.params.components.resize(static_cast<std::size_t>(k));
	out.frozen.assign(static_cast<std::size_t>(k), false);
	Vector alpha(k);
	std::vector<char> ridge(static_cast<std::size_t>(k), 0);
	std::vector<char> regularized(static_cast<std::size_t>(k), 0);
	std::vector<char> failed(static_cast<std::size_t>(k), 0);

#pragma omp parallel for schedule(dynamic)
	for (int c = 0; c < k; ++c) {
		const auto col = tau.tau.col(c);
		const double mass = col.sum();
		alpha(c) = mass / n;
		if (!(mass * rows > m)) {
			if (previous == nullptr) {
				failed[static_cast<std::size_t>(c)] = 1;
				continue;
			}
			out.params.components[static_cast<std::size_t>(c)] = previous->components[static_cast<std::size_t>(c)];
			out.frozen[static_cast<std::size_t>(c)] = true;
			continue;
		}
		std::vector<double> w(col.data(), col.data() + col.size());
		PooledFit fit = fit_pooled(cache, orders[static_cast<std::size_t>(c)], w);
		bool flagged = false;
		fit.component.covariance = regularize_covariance(fit.component.covariance, &flagged);
		ridge[static_cast<std::size_t>(c)] = fit.ridge;
		regularized[static_cast<std::size_t>(c)] = flagged;
		out.params.components[static_cast<std::size_t>(c)] = std::move(fit.component);
	}
	for (int c = 0; c < k; ++c) {
		if (failed[static_cast<std::size_t>(c)]) {
			throw FitFailure("component " + std::to_string(c) + " has too little responsibility mass");
		}
	}
	out.ridge = std::find(ridge.begin(), ridge.end(), 1) != ridge.end();
	out.covariance_regularized = std::find(regularized.begin(), regularized.end(), 1) != regularized.end();
	alpha /= alpha.sum();
	out.params.weights = alpha;
	return out;
}

double log_likelihood(const TimeSeriesSet &data, const MixtureParams &params, int max_order) {
	const Prepared prep = prepare(params);
	const Vector log_alpha = log_weights_of(params);
	const int k = params.size();
	const double m = static_cast<double>(data.dim());
	Vector log_const(k);
	for (int c = 0; c < k; ++c) {
		log_const(c) = log_alpha(c) - 0.5 * m * log_2pi() - 0.5 * prep.chol[static_cast<std::size_t>(c)].log_det;
	}
	double total = 0.0;
	for (const auto &series : data) {
		Matrix terms;
		for (int c = 0; c < k; ++c) {
			const Matrix e = residual_matrix(series, params.components[static_cast<std::size_t>(c)], max_order);
			const Matrix w = prep.chol[static_cast<std::size_t>(c)].lower.triangularView<Eigen::Lower>().solve(
			    e.transpose());
			if (terms.size() == 0) {
				terms.resize(e.rows(), k);
			}
			terms.col(c) = (log_const(c) - 0.5 * w.colwise().squaredNorm().array()).transpose();
		}
		for (Eigen::Index t = 0; t < terms.rows(); ++t) {
			const double hi = terms.row(t).maxCoeff();
			if (hi == -std::numeric_limits<double>::infinity()) {
				return hi;
			}
			total += hi + std::log((terms.row(t).array() - hi).exp().sum());
		}
	}
	return total;
}

double series_log_likelihood(const QrCache &cache, const MixtureParams &params) {
	return e_step_detail(cache, params).series_log_likelihood;
}

CmvarResult fit_cmvar(const QrCache &cache, const TimeSeriesSet &data, int n_clusters, std::span<const int> orders,
                      const CmvarConfig &config) {
	config.validate();
	if (n_clusters < 1 || static_cast<int>(orders.size()) != n_clusters) {
		throw InvalidArgument("cMVAR needs K >= 1 and one order per component");
	}
	for (const int p : orders) {
		if (!cache.has_order(p)) {
			throw InvalidArgument("QR cache was not built for order " + std::to_string(p));
		}
	}

	CmvarResult res;
	MixtureParams params;
	if (config.init == CmvarInit::RandomResponsibilities) {
		Rng rng(config.seed, 0);
		const Assignment tau0 = dirichlet_rows(cache.n_series(), n_clusters, rng);
		MStep ms = m_step(cache, tau0, orders);
		params = std::move(ms.params);
	} else if (config.initial) {
		params = *config.initial;
		if (params.size() != n_clusters) {
			throw InitFailure("initial mixture has the wrong number of components");
		}
		if (!params.weights) {
			params.weights = Vector::Constant(n_clusters, 1.0 / n_clusters);
		}
	} else {
		params = initialize(cache, n_clusters, orders, KlmvarInit::Naive2Step, config.seed);
		params.weights = Vector::Constant(n_clusters, 1.0 / n_clusters);
	}
	res.degenerate_init = all_identical(params);

	EStep es = e_step_detail(cache, params);
	res.log_likelihood_trace.push_back(es.series_log_likelihood);
	res.underflow_events += es.resp.underflow_events;
	res.naive_zero_rows += es.resp.naive_zero_rows;
	MStep ms;
	for (int it = 1; it <= config.max_iters; ++it) {
		ms = m_step(cache, es.resp.tau, orders, &params);
		if (std::all_of(ms.frozen.begin(), ms.frozen.end(), [](bool f) { return f; })) {
			throw FitFailure("every cMVAR component is degenerate");
		}
		params = ms.params;
		res.ridge = res.ridge || ms.ridge;
		res.covariance_regularized = res.covariance_regularized || ms.covariance_regularized;
		es = e_step_detail(cache, params);
		res.underflow_events += es.resp.underflow_events;
		res.naive_zero_rows += es.resp.naive_zero_rows;
		const double prev = res.log_likelihood_trace.back();
		const double cur = es.series_log_likelihood;
		res.log_likelihood_trace.push_back(cur);
		res.iterations = it;
		if (std::abs(cur - prev) < config.tol * (1.0 + std::abs(cur))) {
			res.converged = true;
			break;
		}
	}
	res.frozen = ms.frozen;
	res.numeric_failure = res.naive_zero_rows > 0;

	// identifiability: weights in descending order, components permuted to match
	std::vector<int> perm(static_cast<std::size_t>(n_clusters));
	std::iota(perm.begin(), perm.end(), 0);
	const Vector &alpha = *params.weights;
	std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return alpha(a) > alpha(b); });
	MixtureParams sorted;
	Vector sorted_alpha(n_clusters);
	Assignment tau{Matrix(es.resp.tau.tau.rows(), n_clusters)};
	std::vector<bool> frozen(static_cast<std::size_t>(n_clusters));
	for (int c = 0; c < n_clusters; ++c) {
		const auto src = static_cast<std::size_t>(perm[static_cast<std::size_t>(c)]);
		sorted.components.push_back(params.components[src]);
		sorted_alpha(c) = alpha(static_cast<Eigen::Index>(src));
		tau.tau.col(c) = es.resp.tau.tau.col(static_cast<Eigen::Index>(src));
		frozen[static_cast<std::size_t>(c)] = res.frozen.empty() ? false : res.frozen[src];
	}
	sorted.weights = sorted_alpha;
	res.frozen = std::move(frozen);
	res.params = std::move(sorted);
	res.tau = std::move(tau);
	res.labels = res.tau.labels();
	res.log_likelihood = res.log_likelihood_trace.back();
	res.pointwise_log_likelihood = log_likelihood(data, res.params, cache.max_order());
	return res;
}

CmvarResult fit_cmvar(const TimeSeriesSet &data, int n_clusters, std::span<const int> orders,
                      const CmvarConfig &config) {
	if (orders.empty()) {
		throw InvalidArgument("no orders given");
	}
	const int p_max = *std::max_element(orders.begin(), orders.end());
	const QrCache cache = QrCache::build(data, orders, p_max);
	return fit_cmvar(cache, data, n_clusters, orders, config);
}

} // namespace varclust
