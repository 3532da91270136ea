#pragma once

#include "varclust/core.hpp"
#include "varclust/metrics.hpp"
#include "varclust/modelsel.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace varclust::cli {

enum ExitCode : int {
	kOk = 0,
	kUsage = 1,
	kIo = 2,
	kNotConverged = 3,
	kNumericFailure = 4,
};

Algorithm parse_algorithm(const std::string &name);
std::string algorithm_name(Algorithm algo);

struct RunOutcome {
	std::vector<int> labels; // 0-based
	bool converged = false;
	bool failed = false;     // exception, or the linear-domain cMVAR formula breaks down
	bool numeric_failure = false;
	std::string error;
	double seconds = 0.0;
};

/// One clustering run with the command-line defaults for each algorithm.
RunOutcome run_algorithm(Algorithm algo, const TimeSeriesSet &data, int n_clusters, std::span<const int> orders,
                         std::uint64_t seed, int max_iters = 500, double tol = 1e-8, int restarts = 1);

struct BenchmarkRow {
	std::string suite;
	std::string algo;
	int m = 0;
	int p = 0;
	int T = 0;
	int K = 0;
	int Nc = 0;
	std::uint64_t seed = 0;
	double ri = 0.0;
	double nmi = 0.0;
	double seconds = 0.0;
	bool failed = false;
};

struct BenchmarkConfig {
	std::string suite;
	double scale = 1.0;
	int seeds = 5;
	std::uint64_t seed = 1;
	std::vector<Algorithm> algos; // empty: the suite's defaults
};

struct SuiteCase {
	int m, p, T, K, Nc;
};

/// Configurations of a suite after shrinking N_c by `scale` and keeping
/// every ceil(1/scale)-th point of the swept grid (the last point always kept).
std::vector<SuiteCase> suite_cases(const std::string &suite, double scale);
std::vector<Algorithm> suite_default_algos(const std::string &suite);
std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig &config, std::ostream *progress = nullptr);

extern const char *const kBenchmarkVersionLine;
std::string benchmark_header();
std::string format_row(const BenchmarkRow &row);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(std::vector<std::string> args, std::ostream &out, std::ostream &err);

} // namespace varclust::cli
