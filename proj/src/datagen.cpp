#include "varclust/datagen.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <numeric>

namespace varclust {

void DatasetSpec::validate() const {
	if (m < 1 || p < 1 || K < 1 || n_per_cluster < 1) {
		throw InvalidArgument("dataset spec needs m, p, K, Nc >= 1");
	}
	if (T < p + 2) {
		throw InvalidArgument("dataset spec needs T >= p + 2");
	}
	if (burn_in < 0) {
		throw InvalidArgument("burn-in must be nonnegative");
	}
	if (!(root_min_abs > 1.0) || !(root_max_abs >= root_min_abs)) {
		throw InvalidArgument("root magnitudes must satisfy 1 < min <= max");
	}
}

std::vector<double> lag_coefficients_from_roots(std::span<const double> roots) {
	// poly[i] is the coefficient of z^i in prod (1 - z / r)
	std::vector<double> poly{1.0};
	for (const double r : roots) {
		if (r == 0.0) {
			throw InvalidArgument("polynomial root must be nonzero");
		}
		std::vector<double> next(poly.size() + 1, 0.0);
		for (std::size_t i = 0; i < poly.size(); ++i) {
			next[i] += poly[i];
			next[i + 1] -= poly[i] / r;
		}
		poly = std::move(next);
	}
	std::vector<double> lambda(roots.size());
	for (std::size_t i = 0; i < roots.size(); ++i) {
		lambda[i] = -poly[i + 1];
	}
	return lambda;
}

std::vector<Matrix> lags_from_roots(const Matrix &roots, const Matrix &basis) {
	// roots: m x p, row j holds the p roots of channel j
	const auto m = roots.rows();
	const auto p = roots.cols();
	std::vector<Matrix> lags(static_cast<std::size_t>(p), Matrix::Zero(m, m));
	Matrix lambda(m, p);
	for (Eigen::Index j = 0; j < m; ++j) {
		std::vector<double> r(static_cast<std::size_t>(p));
		for (Eigen::Index i = 0; i < p; ++i) {
			r[static_cast<std::size_t>(i)] = roots(j, i);
		}
		const auto coef = lag_coefficients_from_roots(r);
		for (Eigen::Index i = 0; i < p; ++i) {
			lambda(j, i) = coef[static_cast<std::size_t>(i)];
		}
	}
	for (Eigen::Index i = 0; i < p; ++i) {
		lags[static_cast<std::size_t>(i)] = basis.transpose() * lambda.col(i).asDiagonal() * basis;
	}
	return lags;
}

Matrix companion_matrix(const std::vector<Matrix> &lags) {
	if (lags.empty()) {
		return Matrix();
	}
	const auto m = lags.front().rows();
	const auto p = static_cast<Eigen::Index>(lags.size());
	Matrix c = Matrix::Zero(m * p, m * p);
	for (Eigen::Index i = 0; i < p; ++i) {
		c.block(0, i * m, m, m) = lags[static_cast<std::size_t>(i)];
	}
	if (p > 1) {
		c.block(m, 0, m * (p - 1), m * (p - 1)).setIdentity();
	}
	return c;
}

double spectral_radius(const Matrix &a) {
	if (a.size() == 0) {
		return 0.0;
	}
	Eigen::EigenSolver<Matrix> es(a, false);
	return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix random_orthogonal(int m, Rng &rng) {
	Matrix x(m, m);
	for (int j = 0; j < m; ++j) {
		for (int i = 0; i < m; ++i) {
			x(i, j) = rng.normal();
		}
	}
	Eigen::HouseholderQR<Matrix> qr(x);
	Matrix q = qr.householderQ();
	// sign fix makes the draw Haar distributed
	for (int j = 0; j < m; ++j) {
		if (qr.matrixQR()(j, j) < 0.0) {
			q.col(j) *= -1.0;
		}
	}
	return q;
}

Matrix generate_spd(int m, Rng &rng) {
	if (m < 1) {
		throw InvalidArgument("matrix dimension must be positive");
	}
	while (true) {
		Matrix l(m, m);
		for (int j = 0; j < m; ++j) {
			for (int i = 0; i < m; ++i) {
				l(i, j) = rng.normal();
			}
		}
		Matrix omega = l.transpose() * l;
		omega = (0.5 * (omega + omega.transpose())).eval();
		Eigen::SelfAdjointEigenSolver<Matrix> es(omega, Eigen::EigenvaluesOnly);
		const double lo = es.eigenvalues().minCoeff();
		const double hi = es.eigenvalues().maxCoeff();
		if (lo > 0.0 && hi / lo <= 1e6) {
			return omega;
		}
	}
}

VarComponent generate_stable_var(int m, int p, Rng &rng, const StableVarOptions &opts) {
	if (m < 1 || p < 1) {
		throw InvalidArgument("VAR dimension and order must be positive");
	}
	Matrix roots(m, p);
	for (int j = 0; j < m; ++j) {
		for (int i = 0; i < p; ++i) {
			const double mag = rng.uniform(opts.root_min_abs, opts.root_max_abs);
			roots(j, i) = rng.uniform() < 0.5 ? -mag : mag;
		}
	}
	const Matrix basis = random_orthogonal(m, rng);

	VarComponent comp;
	comp.lags = lags_from_roots(roots, basis);
	comp.intercept.resize(m);
	for (int j = 0; j < m; ++j) {
		comp.intercept(j) = rng.uniform(-1.0, 1.0);
	}
	comp.covariance = generate_spd(m, rng);

	const double radius = spectral_radius(companion_matrix(comp.lags));
	if (radius > 1.0 / opts.root_min_abs + 1e-8) {
		throw SimulationFailure("generated VAR has spectral radius " + std::to_string(radius));
	}
	return comp;
}

TimeSeries simulate_var(const VarComponent &comp, int T, int burn_in, Rng &rng, std::string id) {
	if (T < 1 || burn_in < 0) {
		throw InvalidArgument("simulation length must be positive");
	}
	const int m = comp.dim();
	const int p = comp.order();
	Eigen::LLT<Matrix> llt(0.5 * (comp.covariance + comp.covariance.transpose()));
	if (llt.info() != Eigen::Success) {
		throw InvalidCovariance("innovation covariance is not positive definite");
	}
	const Matrix chol = llt.matrixL();

	const int total = burn_in + T;
	Matrix path = Matrix::Zero(total + p, m); // p leading zero rows as initial values
	Vector z(m);
	for (int t = p; t < total + p; ++t) {
		for (int j = 0; j < m; ++j) {
			z(j) = rng.normal();
		}
		Vector y = comp.intercept + chol * z;
		for (int i = 1; i <= p; ++i) {
			y.noalias() += comp.lags[static_cast<std::size_t>(i - 1)] * path.row(t - i).transpose();
		}
		if (!y.allFinite() || y.cwiseAbs().maxCoeff() > 1e150) {
			throw SimulationFailure("VAR simulation diverged at step " + std::to_string(t - p));
		}
		path.row(t) = y.transpose();
	}
	return TimeSeries(std::move(id), path.bottomRows(T));
}

Dataset generate_dataset(const DatasetSpec &spec) {
	spec.validate();
	const Rng root(spec.seed, 0);
	const StableVarOptions opts{spec.root_min_abs, spec.root_max_abs};

	Dataset out;
	out.spec = spec;
	out.models.reserve(static_cast<std::size_t>(spec.K));
	std::vector<Rng> model_rngs;
	for (int k = 0; k < spec.K; ++k) {
		Rng rng = root.split(static_cast<std::uint64_t>(k));
		out.models.push_back(generate_stable_var(spec.m, spec.p, rng, opts));
		model_rngs.push_back(rng);
	}

	const int n_total = spec.K * spec.n_per_cluster;
	std::vector<int> order(static_cast<std::size_t>(n_total));
	std::iota(order.begin(), order.end(), 0);
	Rng shuffle_rng = root.split(0xFFFFFFFFull);
	shuffle_rng.shuffle(std::span<int>(order));

	const int width = std::max(4, static_cast<int>(std::to_string(n_total).size()));
	std::vector<TimeSeries> series(static_cast<std::size_t>(n_total));
	out.truth.assign(static_cast<std::size_t>(n_total), 0);
#pragma omp parallel for schedule(dynamic)
	for (int slot = 0; slot < n_total; ++slot) {
		const int source = order[static_cast<std::size_t>(slot)];
		const int k = source / spec.n_per_cluster;
		const int j = source % spec.n_per_cluster;
		Rng rng = model_rngs[static_cast<std::size_t>(k)].split(static_cast<std::uint64_t>(j) + 1);
		char id[32];
		std::snprintf(id, sizeof id, "s%0*d", width, slot + 1);
		series[static_cast<std::size_t>(slot)] =
		    simulate_var(out.models[static_cast<std::size_t>(k)], spec.T, spec.burn_in, rng, id);
		out.truth[static_cast<std::size_t>(slot)] = k + 1;
	}
	out.data = TimeSeriesSet(std::move(series));
	return out;
}

} // namespace varclust
