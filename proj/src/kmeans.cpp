#include "varclust/kmeans.hpp"

#include <limits>

namespace varclust {

namespace {

Matrix seed_plus_plus(const Matrix &points, int k, Rng &rng) {
	const auto n = points.rows();
	Matrix centroids(k, points.cols());
	const auto first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
	centroids.row(0) = points.row(first);
	Vector d2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
	for (int c = 1; c < k; ++c) {
		const double total = d2.sum();
		Eigen::Index pick = 0;
		if (total > 0.0) {
			const double target = rng.uniform() * total;
			double acc = 0.0;
			pick = n - 1;
			for (Eigen::Index i = 0; i < n; ++i) {
				acc += d2(i);
				if (acc > target && d2(i) > 0.0) {
					pick = i;
					break;
				}
			}
		} else {
			pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
		}
		centroids.row(c) = points.row(pick);
		d2 = d2.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
	}
	return centroids;
}

KMeansResult lloyd(const Matrix &points, Matrix centroids, int max_iters) {
	const auto n = points.rows();
	const auto k = centroids.rows();
	KMeansResult res;
	res.labels.assign(static_cast<std::size_t>(n), -1);
	Vector best_d2(n);
	for (int it = 0; it < max_iters; ++it) {
		bool changed = false;
		for (Eigen::Index i = 0; i < n; ++i) {
			Eigen::Index best = 0;
			double best_v = std::numeric_limits<double>::infinity();
			for (Eigen::Index c = 0; c < k; ++c) {
				const double v = (points.row(i) - centroids.row(c)).squaredNorm();
				if (v < best_v) {
					best_v = v;
					best = c;
				}
			}
			best_d2(i) = best_v;
			if (res.labels[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
				res.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
				changed = true;
			}
		}
		res.iterations = it + 1;

		Matrix sums = Matrix::Zero(k, points.cols());
		std::vector<int> counts(static_cast<std::size_t>(k), 0);
		for (Eigen::Index i = 0; i < n; ++i) {
			const int c = res.labels[static_cast<std::size_t>(i)];
			sums.row(c) += points.row(i);
			++counts[static_cast<std::size_t>(c)];
		}
		for (Eigen::Index c = 0; c < k; ++c) {
			if (counts[static_cast<std::size_t>(c)] > 0) {
				centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
				continue;
			}
			Eigen::Index far = 0;
			best_d2.maxCoeff(&far);
			centroids.row(c) = points.row(far);
			best_d2(far) = 0.0;
			changed = true;
		}
		if (!changed) {
			break;
		}
	}
	res.centroids = std::move(centroids);
	res.inertia = 0.0;
	for (Eigen::Index i = 0; i < n; ++i) {
		res.inertia += (points.row(i) - res.centroids.row(res.labels[static_cast<std::size_t>(i)])).squaredNorm();
	}
	return res;
}

} // namespace

KMeansResult kmeans(const Matrix &points, int k, Rng &rng, int n_init, int max_iters) {
	if (k < 1 || k > points.rows()) {
		throw InvalidArgument("k-means needs 1 <= K <= number of points");
	}
	KMeansResult best;
	best.inertia = std::numeric_limits<double>::infinity();
	for (int start = 0; start < std::max(1, n_init); ++start) {
		KMeansResult res = lloyd(points, seed_plus_plus(points, k, rng), max_iters);
		if (res.inertia < best.inertia) {
			best = std::move(res);
		}
	}
	return best;
}

} // namespace varclust
