#include "varclust/metrics.hpp"
#include "varclust/errors.hpp"

#include <cmath>
#include <map>

namespace varclust {

namespace {

struct Contingency {
	std::vector<std::vector<long long>> cells; // [truth cluster][pred cluster]
	std::vector<long long> rows;
	std::vector<long long> cols;
	long long total = 0;
};

std::vector<int> compact(std::span<const int> labels, std::size_t *count) {
	std::map<int, int> ids;
	std::vector<int> out(labels.size());
	for (std::size_t i = 0; i < labels.size(); ++i) {
		auto [it, inserted] = ids.try_emplace(labels[i], static_cast<int>(ids.size()));
		out[i] = it->second;
	}
	*count = ids.size();
	return out;
}

Contingency contingency(std::span<const int> truth, std::span<const int> pred) {
	if (truth.size() != pred.size()) {
		throw InvalidArgument("label vectors differ in length (" + std::to_string(truth.size()) + " vs " +
		                      std::to_string(pred.size()) + ")");
	}
	std::size_t kt = 0;
	std::size_t kp = 0;
	const auto t = compact(truth, &kt);
	const auto p = compact(pred, &kp);
	Contingency c;
	c.cells.assign(kt, std::vector<long long>(kp, 0));
	c.rows.assign(kt, 0);
	c.cols.assign(kp, 0);
	for (std::size_t i = 0; i < t.size(); ++i) {
		++c.cells[t[i]][p[i]];
		++c.rows[t[i]];
		++c.cols[p[i]];
	}
	c.total = static_cast<long long>(t.size());
	return c;
}

long long pairs(long long n) { return n * (n - 1) / 2; }

} // namespace

double rand_index(std::span<const int> truth, std::span<const int> pred) {
	const Contingency c = contingency(truth, pred);
	if (c.total < 2) {
		throw InvalidArgument("Rand index needs at least two items");
	}
	long long same_both = 0;
	for (const auto &row : c.cells) {
		for (const long long v : row) {
			same_both += pairs(v);
		}
	}
	long long same_truth = 0;
	for (const long long v : c.rows) {
		same_truth += pairs(v);
	}
	long long same_pred = 0;
	for (const long long v : c.cols) {
		same_pred += pairs(v);
	}
	const long long all = pairs(c.total);
	const long long tp = same_both;
	const long long tn = all - same_truth - same_pred + same_both;
	return static_cast<double>(tp + tn) / static_cast<double>(all);
}

NmiResult nmi_detail(std::span<const int> truth, std::span<const int> pred) {
	const Contingency c = contingency(truth, pred);
	if (c.total == 0) {
		throw InvalidArgument("NMI of empty label vectors");
	}
	const double n = static_cast<double>(c.total);
	double mutual = 0.0;
	for (std::size_t i = 0; i < c.rows.size(); ++i) {
		for (std::size_t j = 0; j < c.cols.size(); ++j) {
			const double nij = static_cast<double>(c.cells[i][j]);
			if (nij > 0.0) {
				mutual += nij * std::log(n * nij / (static_cast<double>(c.rows[i]) * static_cast<double>(c.cols[j])));
			}
		}
	}
	auto entropy_term = [n](const std::vector<long long> &sizes) {
		double h = 0.0;
		for (const long long s : sizes) {
			if (s > 0) {
				h += static_cast<double>(s) * std::log(static_cast<double>(s) / n);
			}
		}
		return h;
	};
	const double ht = entropy_term(c.rows);
	const double hp = entropy_term(c.cols);
	if (c.rows.size() < 2 || c.cols.size() < 2 || ht == 0.0 || hp == 0.0) {
		return {0.0, true};
	}
	return {mutual / std::sqrt(ht * hp), false};
}

double nmi(std::span<const int> truth, std::span<const int> pred) { return nmi_detail(truth, pred).value; }

} // namespace varclust
