#include "varclust/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace varclust;

TEST_CASE("Philox4x32-10 known-answer vectors") {
	using A4 = std::array<std::uint32_t, 4>;
	using A2 = std::array<std::uint32_t, 2>;
	CHECK(philox4x32_10(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
	CHECK(philox4x32_10(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
	      A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
	CHECK(philox4x32_10(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
	      A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same seed and stream reproduce the sequence") {
	Rng a(42, 7);
	Rng b(42, 7);
	for (int i = 0; i < 1000; ++i) {
		REQUIRE(a() == b());
	}
	Rng c(42, 7);
	Rng d(42, 7);
	for (int i = 0; i < 100; ++i) {
		REQUIRE(c.normal() == d.normal());
	}
}

TEST_CASE("streams and children differ") {
	Rng a(1, 0);
	Rng b(1, 1);
	Rng c(2, 0);
	int same_ab = 0;
	int same_ac = 0;
	for (int i = 0; i < 64; ++i) {
		const auto x = a();
		same_ab += x == b() ? 1 : 0;
		same_ac += x == c() ? 1 : 0;
	}
	CHECK(same_ab < 2);
	CHECK(same_ac < 2);

	const Rng root(9);
	Rng s1 = root.split(1);
	Rng s1b = root.split(1);
	Rng s2 = root.split(2);
	CHECK(s1() == s1b());
	CHECK(s1() != s2());
}

TEST_CASE("uniform draws lie in range with the right moments") {
	Rng rng(123);
	const int n = 200000;
	double sum = 0.0;
	double sq = 0.0;
	for (int i = 0; i < n; ++i) {
		const double u = rng.uniform();
		REQUIRE(u >= 0.0);
		REQUIRE(u < 1.0);
		sum += u;
		sq += u * u;
	}
	const double mean = sum / n;
	CHECK(std::abs(mean - 0.5) < 0.005);
	CHECK(std::abs(sq / n - mean * mean - 1.0 / 12.0) < 0.003);
	for (int i = 0; i < 1000; ++i) {
		const double v = rng.uniform(-2.0, 3.0);
		REQUIRE(v >= -2.0);
		REQUIRE(v < 3.0);
	}
}

TEST_CASE("normal and exponential moments") {
	Rng rng(77);
	const int n = 200000;
	double s = 0.0;
	double s2 = 0.0;
	double s4 = 0.0;
	double e = 0.0;
	for (int i = 0; i < n; ++i) {
		const double z = rng.normal();
		s += z;
		s2 += z * z;
		s4 += z * z * z * z;
		e += rng.exponential();
	}
	CHECK(std::abs(s / n) < 0.01);
	CHECK(std::abs(s2 / n - 1.0) < 0.02);
	CHECK(std::abs(s4 / n - 3.0) < 0.1);
	CHECK(std::abs(e / n - 1.0) < 0.01);
}

TEST_CASE("below is unbiased and shuffle permutes") {
	Rng rng(5);
	std::array<int, 7> counts{};
	const int n = 70000;
	for (int i = 0; i < n; ++i) {
		const auto v = rng.below(7);
		REQUIRE(v < 7);
		++counts[v];
	}
	for (const int c : counts) {
		CHECK(std::abs(c - n / 7) < 400);
	}
	std::vector<int> items(50);
	std::iota(items.begin(), items.end(), 0);
	rng.shuffle(std::span<int>(items));
	std::vector<int> sorted = items;
	std::sort(sorted.begin(), sorted.end());
	std::vector<int> expect(50);
	std::iota(expect.begin(), expect.end(), 0);
	CHECK(sorted == expect);
	CHECK(items != expect);
}
