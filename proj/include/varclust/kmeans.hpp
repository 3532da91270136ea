#pragma once

#include "varclust/core.hpp"
#include "varclust/rng.hpp"

#include <vector>

namespace varclust {

struct KMeansResult {
	std::vector<int> labels; // 0-based
	Matrix centroids;        // K x d
	double inertia = 0.0;
	int iterations = 0;
};

// Lloyd iterations from k-means++ seeding, best of n_init starts. Rows of
// points are observations. An emptied cluster takes the point farthest from
// its centroid.
KMeansResult kmeans(const Matrix &points, int k, Rng &rng, int n_init = 10, int max_iters = 300);

} // namespace varclust
