#pragma once

#include <span>
#include <vector>

namespace varclust {

// Cluster ids per series. Only equality of ids matters to the metrics.
using LabelVector = std::vector<int>;

/// (TP + TN) / (N(N-1)/2) from the contingency table.
double rand_index(std::span<const int> truth, std::span<const int> pred);

struct NmiResult {
	double value = 0.0;
	// Set when either side has a single cluster; value is then 0.
	bool degenerate = false;
};

/// Normalized mutual information with the geometric-mean normalization,
/// natural log, and 0 log 0 = 0.
NmiResult nmi_detail(std::span<const int> truth, std::span<const int> pred);
double nmi(std::span<const int> truth, std::span<const int> pred);

} // namespace varclust
