#include "varclust/rng.hpp"

#include <cmath>
#include <numbers>

namespace varclust {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

// splitmix64 finalizer, used only to derive child seeds
std::uint64_t mix64(std::uint64_t z) {
	z += 0x9E3779B97F4A7C15ull;
	z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
	z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
	return z ^ (z >> 31);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
	for (int round = 0; round < 10; ++round) {
		const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
		const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
		const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
		const auto lo0 = static_cast<std::uint32_t>(p0);
		const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
		const auto lo1 = static_cast<std::uint32_t>(p1);
		ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
		key[0] += kWeyl0;
		key[1] += kWeyl1;
	}
	return ctr;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

void Rng::refill() {
	const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
	                                       static_cast<std::uint32_t>(stream_),
	                                       static_cast<std::uint32_t>(stream_ >> 32)};
	const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
	buffer_ = philox4x32_10(ctr, key);
	++block_;
	used_ = 0;
}

Rng::result_type Rng::operator()() {
	if (used_ == 4) {
		refill();
	}
	return buffer_[used_++];
}

Rng Rng::split(std::uint64_t child) const {
	return Rng(mix64(seed_ ^ mix64(stream_ + 1)), mix64(child + 0x632BE59BD9B4E019ull));
}

double Rng::uniform() {
	const std::uint64_t hi = (*this)() >> 5; // 27 bits
	const std::uint64_t lo = (*this)() >> 6; // 26 bits
	return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
	if (has_spare_normal_) {
		has_spare_normal_ = false;
		return spare_normal_;
	}
	double u1 = uniform();
	while (u1 <= 0.0) {
		u1 = uniform();
	}
	const double u2 = uniform();
	const double r = std::sqrt(-2.0 * std::log(u1));
	const double theta = 2.0 * std::numbers::pi * u2;
	spare_normal_ = r * std::sin(theta);
	has_spare_normal_ = true;
	return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
	if (n <= 1) {
		return 0;
	}
	// rejection sampling on 64-bit words to avoid modulo bias
	const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
	while (true) {
		const std::uint64_t word = (static_cast<std::uint64_t>((*this)()) << 32) | (*this)();
		if (word < limit) {
			return word % n;
		}
	}
}

double Rng::exponential() {
	double u = uniform();
	while (u <= 0.0) {
		u = uniform();
	}
	return -std::log(u);
}

} // namespace varclust
