#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace varclust {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A generator is identified by a 64-bit key (seed) and a 64-bit stream id;
/// the 128-bit counter holds (stream, block index). Two generators with the
/// same (seed, stream) produce identical sequences on every platform, and
/// distinct streams never overlap, so independent work items (one series,
/// one restart, ...) each get their own stream via split().
///
/// Floating-point draws are built from the raw 32-bit words with explicit
/// arithmetic only; no std:: distribution is involved.
class Rng {
public:
	using result_type = std::uint32_t;

	explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

	static constexpr result_type min() { return 0; }
	static constexpr result_type max() { return 0xffffffffu; }
	result_type operator()();

	// Independent child generator; deterministic in (seed, stream, child).
	Rng split(std::uint64_t child) const;

	// Uniform on [0, 1) with 53 random bits.
	double uniform();
	// Uniform on [lo, hi).
	double uniform(double lo, double hi);
	// Standard normal via Box-Muller; caches the second variate.
	double normal();
	// Uniform integer in [0, n).
	std::uint64_t below(std::uint64_t n);
	// Exp(1).
	double exponential();

	template <typename T>
	void shuffle(std::span<T> items) {
		for (std::size_t i = items.size(); i > 1; --i) {
			const auto j = static_cast<std::size_t>(below(i));
			std::swap(items[i - 1], items[j]);
		}
	}

	std::uint64_t seed() const { return seed_; }
	std::uint64_t stream() const { return stream_; }

private:
	void refill();

	std::uint64_t seed_;
	std::uint64_t stream_;
	std::uint64_t block_ = 0;
	std::array<std::uint32_t, 4> buffer_{};
	int used_ = 4;
	bool has_spare_normal_ = false;
	double spare_normal_ = 0.0;
};

// Raw Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

} // namespace varclust
