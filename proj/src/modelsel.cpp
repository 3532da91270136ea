#include "varclust/modelsel.hpp"
#include "varclust/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace varclust {

namespace {

double log_2pi() { return std::log(2.0 * std::numbers::pi); }

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

std::int64_t model_space_cardinality(int n_p, int n_clusters) {
	if (n_p < 1 || n_clusters < 1) {
		throw InvalidArgument("cardinality needs n_p >= 1 and K >= 1");
	}
	// C(n_p + K - 1, K) = C(n_p + K - 1, n_p - 1); use the smaller index
	const std::int64_t n = static_cast<std::int64_t>(n_p) + n_clusters - 1;
	const std::int64_t r = std::min<std::int64_t>(n_clusters, n_p - 1);
	unsigned __int128 acc = 1;
	for (std::int64_t i = 1; i <= r; ++i) {
		// acc * (n - r + i) / i stays integral at every step
		acc = acc * static_cast<unsigned __int128>(n - r + i) / static_cast<unsigned __int128>(i);
		if (acc > static_cast<unsigned __int128>(std::numeric_limits<std::int64_t>::max())) {
			throw RangeError("model space cardinality overflows 64 bits");
		}
	}
	return static_cast<std::int64_t>(acc);
}

double surrogate_log_likelihood(const KlmvarResult &result, const QrCache &cache) {
	std::vector<Matrix> coefs;
	std::vector<Matrix> covs;
	for (const auto &comp : result.params.components) {
		coefs.push_back(comp.stacked());
		covs.push_back(regularize_covariance(comp.covariance));
	}
	const Matrix d = dissimilarity_matrix(cache, coefs, covs);
	const double m = static_cast<double>(cache.dim());
	const double rows = static_cast<double>(cache.rows_used());
	double total = 0.0;
	for (std::size_t n = 0; n < result.labels.size(); ++n) {
		total += -0.5 * m * rows * log_2pi() - 0.5 * d(static_cast<Eigen::Index>(n), result.labels[n]);
	}
	return total;
}

double bic_parameter_count(Algorithm algo, int m, std::span<const int> orders, std::size_t n_series) {
	const double mm = static_cast<double>(m);
	const double k = static_cast<double>(orders.size());
	double sum_p = 0.0;
	for (const int p : orders) {
		sum_p += p;
	}
	const double eta = algo == Algorithm::Cmvar ? k - 1.0 : static_cast<double>(n_series);
	return mm * mm * sum_p + k * (mm * mm / 2.0 + 3.0 * mm / 2.0) + eta;
}

double extended_bic(double log_likelihood, Algorithm algo, int m, std::span<const int> orders, std::size_t n_series,
                    int rows_used, double gamma, int n_p) {
	if (!(gamma >= 0.0 && gamma <= 1.0)) {
		throw InvalidArgument("EBIC gamma must lie in [0, 1]");
	}
	const double params = bic_parameter_count(algo, m, orders, n_series);
	const double log_n = std::log(static_cast<double>(n_series) * static_cast<double>(rows_used));
	double score = -2.0 * log_likelihood + params * log_n;
	if (gamma > 0.0) {
		const auto card = model_space_cardinality(n_p, static_cast<int>(orders.size()));
		score += 2.0 * gamma * std::log(static_cast<double>(card));
	}
	return score;
}

double extended_bic(const KlmvarResult &result, const QrCache &cache, std::span<const int> orders, double gamma,
                    int n_p) {
	return extended_bic(surrogate_log_likelihood(result, cache), Algorithm::Klmvar, cache.dim(), orders,
	                    cache.n_series(), cache.rows_used(), gamma, n_p);
}

double extended_bic(const CmvarResult &result, const QrCache &cache, std::span<const int> orders, double gamma,
                    int n_p) {
	return extended_bic(result.pointwise_log_likelihood, Algorithm::Cmvar, cache.dim(), orders, cache.n_series(),
	                    cache.rows_used(), gamma, n_p);
}

BicCell bic_cell(const QrCache &cache, const TimeSeriesSet &data, int n_clusters, int order, int n_p,
                 const SelectionConfig &config) {
	BicCell cell{n_clusters, order, kInf, false, false, {}};
	const std::vector<int> orders(static_cast<std::size_t>(n_clusters), order);
	try {
		switch (config.algo) {
		case Algorithm::Klmvar: {
			KlmvarConfig kc;
			kc.max_iters = config.max_iters;
			kc.tol = config.tol;
			kc.seed = config.seed;
			kc.restarts = config.restarts;
			const KlmvarResult res = fit_klmvar(cache, n_clusters, orders, kc);
			cell.score = extended_bic(res, cache, orders, config.gamma, n_p);
			cell.converged = res.converged;
			break;
		}
		case Algorithm::Naive2Step: {
			KlmvarResult res;
			res.labels = naive_two_step(cache, n_clusters, order, config.seed);
			res.params = update_parameters(cache, res.labels, orders).params;
			cell.score = extended_bic(res, cache, orders, config.gamma, n_p);
			cell.converged = true;
			break;
		}
		case Algorithm::Cmvar: {
			double best_ll = -kInf;
			const Rng base(config.seed, 0);
			for (int r = 0; r < std::max(1, config.restarts); ++r) {
				CmvarConfig cc;
				cc.max_iters = config.max_iters;
				cc.tol = config.tol;
				cc.seed = r == 0 ? config.seed : base.split(static_cast<std::uint64_t>(r)).seed();
				const CmvarResult res = fit_cmvar(cache, data, n_clusters, orders, cc);
				if (res.log_likelihood > best_ll) {
					best_ll = res.log_likelihood;
					cell.score = extended_bic(res, cache, orders, config.gamma, n_p);
					cell.converged = res.converged;
				}
			}
			break;
		}
		}
		if (!std::isfinite(cell.score)) {
			cell.failed = true;
			cell.score = kInf;
		}
	} catch (const Error &e) {
		cell.failed = true;
		cell.score = kInf;
		cell.error = e.what();
	}
	return cell;
}

BicGrid bic_surface(const TimeSeriesSet &data, std::span<const int> k_candidates, std::span<const int> p_candidates,
                    const SelectionConfig &config) {
	if (k_candidates.empty() || p_candidates.empty()) {
		throw InvalidArgument("BIC surface needs nonempty K and p candidate lists");
	}
	BicGrid grid;
	grid.k_candidates.assign(k_candidates.begin(), k_candidates.end());
	grid.p_candidates.assign(p_candidates.begin(), p_candidates.end());
	grid.gamma = config.gamma;
	grid.seed = config.seed;
	const int p_max = *std::max_element(p_candidates.begin(), p_candidates.end());
	const QrCache cache = QrCache::build(data, p_candidates, p_max);
	const int n_p = static_cast<int>(p_candidates.size());

	const auto nk = static_cast<Eigen::Index>(k_candidates.size());
	const auto np = static_cast<Eigen::Index>(p_candidates.size());
	grid.scores.resize(nk, np);
	grid.cells.resize(static_cast<std::size_t>(nk * np));
	for (Eigen::Index i = 0; i < nk; ++i) {
		for (Eigen::Index j = 0; j < np; ++j) {
			BicCell cell = bic_cell(cache, data, k_candidates[static_cast<std::size_t>(i)],
			                        p_candidates[static_cast<std::size_t>(j)], n_p, config);
			grid.scores(i, j) = cell.score;
			grid.cells[static_cast<std::size_t>(i * np + j)] = std::move(cell);
		}
	}

	double best = kInf;
	for (Eigen::Index i = 0; i < nk; ++i) {
		for (Eigen::Index j = 0; j < np; ++j) {
			const int k = k_candidates[static_cast<std::size_t>(i)];
			const int p = p_candidates[static_cast<std::size_t>(j)];
			const double s = grid.scores(i, j);
			if (!std::isfinite(s)) {
				continue;
			}
			const bool better = s < best || (s == best && (k < grid.best_k || (k == grid.best_k && p < grid.best_p)));
			if (better) {
				best = s;
				grid.best_k = k;
				grid.best_p = p;
			}
		}
	}
	return grid;
}

std::vector<double> order_bic_scores(const TimeSeries &series, std::span<const int> p_candidates) {
	if (p_candidates.empty()) {
		throw InvalidArgument("no order candidates");
	}
	const int p_max = *std::max_element(p_candidates.begin(), p_candidates.end());
	const double m = static_cast<double>(series.dim());
	std::vector<double> scores;
	for (const int p : p_candidates) {
		const Design d = build_design(series, p, p_max);
		const QrEntry e = qr_entry(d);
		const double rows = static_cast<double>(d.x.rows());
		Matrix coef_t = e.degenerate ? Matrix((e.r.transpose() * e.r +
		                                       1e-8 * (e.r.transpose() * e.r).trace() / static_cast<double>(e.r.rows()) *
		                                           Matrix::Identity(e.r.rows(), e.r.rows()))
		                                          .ldlt()
		                                          .solve(e.r.transpose() * e.yq))
		                             : Matrix(e.r.triangularView<Eigen::Upper>().solve(e.yq));
		const Matrix resid = d.y - d.x * coef_t;
		const Matrix cov = regularize_covariance(resid.transpose() * resid / rows);
		const CholeskyFactor chol = cholesky_pd(cov);
		const double dissim = rows * chol.log_det + psi(resid, chol);
		const double log_l = -0.5 * m * rows * log_2pi() - 0.5 * dissim;
		const double n_params = m * m * p + m * (m + 3.0) / 2.0;
		scores.push_back(-2.0 * log_l + n_params * std::log(rows));
	}
	return scores;
}

int select_order_bic(const TimeSeries &series, std::span<const int> p_candidates) {
	if (p_candidates.size() == 1) {
		return p_candidates.front();
	}
	const auto scores = order_bic_scores(series, p_candidates);
	std::size_t best = 0;
	for (std::size_t i = 1; i < scores.size(); ++i) {
		if (scores[i] < scores[best] || (scores[i] == scores[best] && p_candidates[i] < p_candidates[best])) {
			best = i;
		}
	}
	return p_candidates[best];
}

int vote_order(const TimeSeriesSet &data, std::span<const int> p_candidates) {
	std::map<int, int> votes;
	for (const auto &series : data) {
		++votes[select_order_bic(series, p_candidates)];
	}
	int best_p = 0;
	int best_votes = -1;
	for (const auto &[p, count] : votes) { // ascending p, so ties keep the smaller order
		if (count > best_votes) {
			best_votes = count;
			best_p = p;
		}
	}
	return best_p;
}

AdhocSelection adhoc_select(const TimeSeriesSet &data, std::span<const int> k_candidates,
                            std::span<const int> p_candidates, const SelectionConfig &config) {
	if (k_candidates.empty() || p_candidates.empty()) {
		throw InvalidArgument("ad hoc selection needs nonempty candidate lists");
	}
	SelectionConfig cfg = config;
	cfg.gamma = 0.0;
	const int p_max = *std::max_element(p_candidates.begin(), p_candidates.end());
	const QrCache cache = QrCache::build(data, p_candidates, p_max);
	const int n_p = static_cast<int>(p_candidates.size());

	auto best_k_for = [&](int p) {
		int best_k = k_candidates.front();
		double best = kInf;
		for (const int k : k_candidates) {
			const double s = bic_cell(cache, data, k, p, n_p, cfg).score;
			if (s < best || (s == best && k < best_k)) {
				best = s;
				best_k = k;
			}
		}
		return best_k;
	};
	auto best_p_for = [&](int k) {
		int best_p = p_candidates.front();
		double best = kInf;
		for (const int p : p_candidates) {
			const double s = bic_cell(cache, data, k, p, n_p, cfg).score;
			if (s < best || (s == best && p < best_p)) {
				best = s;
				best_p = p;
			}
		}
		return best_p;
	};

	AdhocSelection sel;
	sel.p = vote_order(data, p_candidates);
	sel.K = k_candidates.size() == 1 ? k_candidates.front() : best_k_for(sel.p);
	sel.cycles = 1;
	if (p_candidates.size() == 1 || k_candidates.size() == 1) {
		return sel;
	}
	for (int cycle = 2; cycle <= 5; ++cycle) {
		const int p = best_p_for(sel.K);
		const int k = best_k_for(p);
		sel.cycles = cycle;
		if (p == sel.p && k == sel.K) {
			break;
		}
		sel.p = p;
		sel.K = k;
	}
	return sel;
}

} // namespace varclust
