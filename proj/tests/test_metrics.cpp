#include "test_util.hpp"

#include "varclust/metrics.hpp"

#include <doctest.h>

using namespace varclust;

TEST_CASE("Rand index fixed examples") {
	const std::vector<int> truth{1, 1, 2, 2};
	CHECK(rand_index(truth, truth) == 1.0);
	CHECK(rand_index(truth, std::vector<int>{1, 2, 1, 2}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
	CHECK(rand_index(truth, std::vector<int>{2, 2, 1, 1}) == 1.0);
	CHECK(rand_index(std::vector<int>{1, 1, 2, 3, 3}, std::vector<int>{7, 7, 9, 4, 4}) == 1.0);
}

TEST_CASE("NMI fixed examples") {
	const std::vector<int> truth{1, 1, 2, 2};
	CHECK(nmi(truth, truth) == doctest::Approx(1.0).epsilon(1e-15));
	CHECK(std::abs(nmi(truth, std::vector<int>{1, 2, 1, 2})) < 1e-15);
	CHECK(nmi(truth, std::vector<int>{5, 5, 3, 3}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("single-cluster partitions give NMI 0 with a flag") {
	const auto r = nmi_detail(std::vector<int>{1, 1, 1}, std::vector<int>{1, 2, 3});
	CHECK(r.value == 0.0);
	CHECK(r.degenerate);
	CHECK_FALSE(nmi_detail(std::vector<int>{1, 2}, std::vector<int>{1, 2}).degenerate);
}

TEST_CASE("length mismatch is rejected") {
	CHECK_THROWS_AS(rand_index(std::vector<int>{1, 2}, std::vector<int>{1}), InvalidArgument);
	CHECK_THROWS_AS(nmi(std::vector<int>{1, 2}, std::vector<int>{1}), InvalidArgument);
}

TEST_CASE("metrics match brute-force oracles on random partitions") {
	Rng rng(2024);
	for (int trial = 0; trial < 200; ++trial) {
		const int n = 2 + static_cast<int>(rng.below(199));
		const int ka = 1 + static_cast<int>(rng.below(8));
		const int kb = 1 + static_cast<int>(rng.below(8));
		std::vector<int> a(static_cast<std::size_t>(n));
		std::vector<int> b(static_cast<std::size_t>(n));
		for (int i = 0; i < n; ++i) {
			a[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(ka)));
			b[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(kb)));
		}
		const double ri = rand_index(a, b);
		CHECK(std::abs(ri - vt::brute_rand_index(a, b)) < 1e-12);
		const double v = nmi(a, b);
		CHECK(std::abs(v - vt::brute_nmi(a, b)) < 1e-12);
		CHECK(v >= -1e-12);
		CHECK(v <= 1.0 + 1e-12);
		// relabeling invariance
		std::vector<int> relabeled = b;
		for (int &x : relabeled) {
			x = 100 - 3 * x;
		}
		CHECK(std::abs(rand_index(a, relabeled) - ri) < 1e-15);
		CHECK(std::abs(nmi(a, relabeled) - v) < 1e-12);
	}
}
