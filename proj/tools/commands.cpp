#include "commands.hpp"

#include "varclust/cmvar.hpp"
#include "varclust/datagen.hpp"
#include "varclust/io.hpp"
#include "varclust/klmvar.hpp"
#include "varclust/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

namespace varclust::cli {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
	return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
	if (std::isnan(v)) {
		return "nan";
	}
	if (std::isinf(v)) {
		return v > 0 ? "inf" : "-inf";
	}
	char buf[40];
	std::snprintf(buf, sizeof buf, "%.17g", v);
	return buf;
}

fs::path dataset_file(const std::string &path) {
	const fs::path p(path);
	if (fs::is_directory(p)) {
		return p / "data.csv";
	}
	return p;
}

// JSON numbers print without trailing noise; infinities become null otherwise.
json number(double v) {
	if (std::isfinite(v)) {
		return v;
	}
	return fmt(v);
}

std::vector<int> expand_orders(const std::string &text, int n_clusters) {
	std::vector<int> orders = parse_int_list(text);
	if (orders.size() == 1) {
		orders.assign(static_cast<std::size_t>(n_clusters), orders.front());
	}
	if (static_cast<int>(orders.size()) != n_clusters) {
		throw InvalidArgument("--p needs one order or exactly K orders");
	}
	for (const int p : orders) {
		if (p < 1) {
			throw InvalidArgument("orders must be >= 1");
		}
	}
	return orders;
}

// Inserts `--key value` pairs from a JSON config for every key the command
// line does not already set. A section named after the subcommand overrides
// top-level keys. Top-level keys the subcommand has no flag for are ignored so
// one file can serve several commands; unknown keys in a section are errors.
void merge_config(std::vector<std::string> &args, CLI::App &app) {
	const auto it = std::find(args.begin(), args.end(), "--config");
	if (it == args.end()) {
		return;
	}
	if (it + 1 == args.end()) {
		throw InvalidArgument("--config needs a path");
	}
	const fs::path path = *(it + 1);
	args.erase(it, it + 2);
	const json cfg = read_json(path);
	if (!cfg.is_object()) {
		throw InvalidArgument("config file must hold a JSON object");
	}
	const std::string command = args.empty() ? std::string() : args.front();
	CLI::App *sub = command.empty() ? nullptr : app.get_subcommand_no_throw(command);
	std::set<std::string> sectioned;
	json merged = json::object();
	for (const auto &[k, v] : cfg.items()) {
		if (!v.is_object()) {
			merged[k] = v;
		}
	}
	if (cfg.contains(command) && cfg[command].is_object()) {
		for (const auto &[k, v] : cfg[command].items()) {
			merged[k] = v;
			sectioned.insert(k);
		}
	}
	auto to_text = [](const json &v) -> std::string {
		if (v.is_string()) {
			return v.get<std::string>();
		}
		if (v.is_array()) {
			std::string s;
			for (const auto &e : v) {
				if (!s.empty()) {
					s += ',';
				}
				s += e.is_string() ? e.get<std::string>() : e.dump();
			}
			return s;
		}
		return v.dump();
	};
	for (const auto &[key, value] : merged.items()) {
		std::string name = key;
		std::replace(name.begin(), name.end(), '_', '-');
		const std::string flag = name.size() == 1 && name != "K" && name != "T" && name != "p" && name != "m"
		                             ? "-" + name
		                             : "--" + name;
		const bool present = std::any_of(args.begin(), args.end(), [&](const std::string &a) {
			return a == flag || a.rfind(flag + "=", 0) == 0;
		});
		if (present) {
			continue;
		}
		if (!sectioned.contains(key) && (sub == nullptr || sub->get_option_no_throw(flag) == nullptr)) {
			continue;
		}
		if (value.is_boolean()) {
			if (value.get<bool>()) {
				args.push_back(flag);
			}
			continue;
		}
		args.push_back(flag);
		args.push_back(to_text(value));
	}
}

struct Common {
	std::uint64_t seed = 0;
	int threads = 0;
};

void add_common(CLI::App *cmd, Common &c) {
	cmd->add_option("--seed", c.seed, "Random seed");
	cmd->add_option("--threads", c.threads, "Worker threads (default: VARCLUST_THREADS or all cores)")
	    ->check(CLI::NonNegativeNumber);
}

void apply_threads(const Common &c) {
	const int n = c.threads > 0 ? c.threads : threads_from_env();
	if (n > 0) {
		set_thread_count(n);
	}
}

// ---- generate ----

struct GenerateArgs {
	Common common;
	DatasetSpec spec;
	std::string out_dir = ".";
};

int cmd_generate(const GenerateArgs &a, std::ostream &out) {
	apply_threads(a.common);
	DatasetSpec spec = a.spec;
	spec.seed = a.common.seed;
	spec.validate();
	const Dataset ds = generate_dataset(spec);
	const fs::path dir(a.out_dir);
	std::error_code ec;
	fs::create_directories(dir, ec);
	if (ec) {
		throw IoError("cannot create " + dir.string() + ": " + ec.message());
	}
	write_dataset_csv(dir / "data.csv", ds.data);
	write_truth_json(dir / "truth.json", ds);
	out << "generated N=" << ds.data.size() << " series (m=" << spec.m << ", p=" << spec.p << ", T=" << spec.T
	    << ", K=" << spec.K << ", Nc=" << spec.n_per_cluster << ", seed=" << spec.seed << ")\n";
	out << "data:  " << (dir / "data.csv").string() << '\n';
	out << "truth: " << (dir / "truth.json").string() << '\n';
	return kOk;
}

// ---- cluster ----

struct ClusterArgs {
	Common common;
	std::string data;
	std::string algo = "klmvar";
	int K = 2;
	std::string p = "1";
	double tol = 1e-8;
	int max_iters = 500;
	int restarts = 1;
	std::string init;
	std::string empty_policy = "reseed";
	bool raw_covariance = false;
	std::string out_dir = ".";
};

int cmd_cluster(const ClusterArgs &a, std::ostream &out, std::ostream &err) {
	apply_threads(a.common);
	const Algorithm algo = parse_algorithm(a.algo);
	if (a.K < 1) {
		throw InvalidArgument("--K must be >= 1");
	}
	const auto orders = expand_orders(a.p, a.K);
	const TimeSeriesSet data = read_dataset_csv(dataset_file(a.data));
	if (static_cast<std::size_t>(a.K) > data.size()) {
		throw InvalidArgument("--K exceeds the number of series");
	}
	const int p_max = *std::max_element(orders.begin(), orders.end());
	const auto start = Clock::now();
	const QrCache cache = QrCache::build(data, orders, p_max);

	json result;
	result["algo"] = algorithm_name(algo);
	result["K"] = a.K;
	result["orders"] = orders;
	result["seed"] = a.common.seed;
	result["n_series"] = data.size();
	std::vector<int> labels;
	int code = kOk;

	switch (algo) {
	case Algorithm::Klmvar: {
		KlmvarConfig cfg;
		cfg.max_iters = a.max_iters;
		cfg.tol = a.tol;
		cfg.seed = a.common.seed;
		cfg.restarts = a.restarts;
		cfg.normalize_covariance = !a.raw_covariance;
		if (a.init == "naive2step") {
			cfg.init = KlmvarInit::Naive2Step;
		} else if (!a.init.empty() && a.init != "random") {
			throw InvalidArgument("k-LMVAR --init must be naive2step or random");
		}
		if (a.empty_policy == "freeze") {
			cfg.empty_policy = EmptyClusterPolicy::Freeze;
		} else if (a.empty_policy != "reseed") {
			throw InvalidArgument("--empty-policy must be reseed or freeze");
		}
		const KlmvarResult r = fit_klmvar(cache, a.K, orders, cfg);
		labels = r.labels;
		result["params"] = to_json(r.params);
		result["objective"] = r.objective;
		result["objective_trace"] = r.objective_trace;
		result["iterations"] = r.iterations;
		result["converged"] = r.converged;
		result["cluster_sizes"] = r.cluster_sizes;
		result["label_cycle"] = r.label_cycle;
		result["empty_cluster_events"] = r.empty_cluster_events;
		result["restart"] = r.restart;
		result["ridge"] = r.ridge;
		result["covariance_regularized"] = r.covariance_regularized;
		if (!r.converged) {
			code = kNotConverged;
		}
		break;
	}
	case Algorithm::Cmvar: {
		CmvarConfig cfg;
		cfg.max_iters = a.max_iters;
		cfg.tol = a.tol;
		cfg.seed = a.common.seed;
		if (a.init == "naive2step") {
			cfg.init = CmvarInit::FromComponents;
		} else if (!a.init.empty() && a.init != "random") {
			throw InvalidArgument("cMVAR --init must be naive2step or random");
		}
		const CmvarResult r = fit_cmvar(cache, data, a.K, orders, cfg);
		labels = r.labels;
		result["params"] = to_json(r.params);
		result["log_likelihood"] = number(r.log_likelihood);
		result["log_likelihood_trace"] = r.log_likelihood_trace;
		result["pointwise_log_likelihood"] = number(r.pointwise_log_likelihood);
		result["iterations"] = r.iterations;
		result["converged"] = r.converged;
		result["underflow_events"] = r.underflow_events;
		result["naive_zero_rows"] = r.naive_zero_rows;
		result["numeric_failure"] = r.numeric_failure;
		result["ridge"] = r.ridge;
		result["covariance_regularized"] = r.covariance_regularized;
		if (r.numeric_failure) {
			err << "numeric failure: " << r.naive_zero_rows
			    << " responsibility rows underflow to 0/0 in the linear-domain formula (" << r.underflow_events
			    << " one-hot rows in total); log-domain results written\n";
			code = kNumericFailure;
		} else if (!r.converged) {
			code = kNotConverged;
		}
		break;
	}
	case Algorithm::Naive2Step: {
		labels = naive_two_step(cache, a.K, p_max, a.common.seed);
		result["converged"] = true;
		result["iterations"] = 1;
		break;
	}
	}
	const double secs = seconds_since(start);
	result["seconds"] = secs;
	std::vector<int> one_based(labels.size());
	std::transform(labels.begin(), labels.end(), one_based.begin(), [](int l) { return l + 1; });
	result["labels"] = one_based;

	const fs::path dir(a.out_dir);
	write_labels_csv(dir / "labels.csv", data, one_based);
	write_json(dir / "result.json", result);
	char took[32];
	std::snprintf(took, sizeof took, "%.3f", secs);
	out << algorithm_name(algo) << ": " << data.size() << " series, K=" << a.K << ", "
	    << result.value("iterations", 0) << " iterations, " << took << " s"
	    << (code == kNotConverged ? " (max_iters reached without convergence)" : "") << '\n';
	out << "labels: " << (dir / "labels.csv").string() << '\n';
	out << "result: " << (dir / "result.json").string() << '\n';
	return code;
}

// ---- select ----

struct SelectArgs {
	Common common;
	std::string data;
	std::string algo = "klmvar";
	std::string ks = "2";
	std::string ps = "1";
	double gamma = 0.5;
	int restarts = 3;
	int max_iters = 500;
	double tol = 1e-8;
	bool adhoc = false;
	std::string output = "grid.csv";
};

int cmd_select(const SelectArgs &a, std::ostream &out) {
	apply_threads(a.common);
	SelectionConfig cfg;
	cfg.algo = parse_algorithm(a.algo);
	cfg.gamma = a.gamma;
	cfg.restarts = a.restarts;
	cfg.max_iters = a.max_iters;
	cfg.tol = a.tol;
	cfg.seed = a.common.seed;
	if (!(a.gamma >= 0.0 && a.gamma <= 1.0)) {
		throw InvalidArgument("--gamma must lie in [0, 1]");
	}
	const auto ks = parse_int_list(a.ks);
	const auto ps = parse_int_list(a.ps);
	const TimeSeriesSet data = read_dataset_csv(dataset_file(a.data));

	const BicGrid grid = bic_surface(data, ks, ps, cfg);
	fs::path path(a.output);
	if (fs::is_directory(path)) {
		path /= "grid.csv";
	}
	if (path.has_parent_path()) {
		fs::create_directories(path.parent_path());
	}
	std::ofstream csv(path);
	if (!csv) {
		throw IoError("cannot write " + path.string());
	}
	csv << "K,p,gamma,score,converged,seed,failed\n";
	int failed = 0;
	for (const auto &cell : grid.cells) {
		csv << cell.K << ',' << cell.p << ',' << fmt(grid.gamma) << ',' << fmt(cell.score) << ','
		    << (cell.converged ? 1 : 0) << ',' << grid.seed << ',' << (cell.failed ? 1 : 0) << '\n';
		failed += cell.failed ? 1 : 0;
	}
	if (!csv) {
		throw IoError("write failed for " + path.string());
	}
	out << "grid " << ks.size() << "x" << ps.size() << " written to " << path.string();
	if (failed > 0) {
		out << " (" << failed << " failed cells)";
	}
	out << '\n';
	if (grid.best_k == 0) {
		out << "no cell produced a finite score\n";
		return kNumericFailure;
	}
	out << "best K=" << grid.best_k << " p=" << grid.best_p << '\n';
	if (a.adhoc) {
		const AdhocSelection sel = adhoc_select(data, ks, ps, cfg);
		out << "ad hoc K=" << sel.K << " p=" << sel.p << " after " << sel.cycles << " cycles\n";
	}
	return kOk;
}

// ---- evaluate ----

struct EvaluateArgs {
	std::string labels;
	std::string truth;
	std::string output;
};

std::vector<std::pair<std::string, int>> read_any_labels(const std::string &path) {
	if (fs::path(path).extension() == ".json") {
		return read_truth_labels(path);
	}
	if (fs::is_directory(path)) {
		if (fs::exists(fs::path(path) / "truth.json")) {
			return read_truth_labels(fs::path(path) / "truth.json");
		}
		return read_labels_csv(fs::path(path) / "labels.csv");
	}
	return read_labels_csv(path);
}

int cmd_evaluate(const EvaluateArgs &a, std::ostream &out) {
	const auto [pred, truth] = align_labels(read_any_labels(a.labels), read_any_labels(a.truth));
	const double ri = rand_index(pred, truth);
	const auto nd = nmi_detail(pred, truth);
	json j;
	j["n_series"] = pred.size();
	j["ri"] = ri;
	j["nmi"] = nd.value;
	j["nmi_degenerate"] = nd.degenerate;
	out << "RI=" << fmt(ri) << " NMI=" << fmt(nd.value) << '\n';
	if (!a.output.empty()) {
		write_json(a.output, j);
	}
	return kOk;
}

// ---- benchmark ----

struct BenchArgs {
	Common common;
	std::string suite;
	double scale = 1.0;
	int seeds = 5;
	std::string algos;
	std::string output;
};

std::vector<Algorithm> parse_algos(const std::string &text) {
	std::vector<Algorithm> out;
	std::stringstream in(text);
	std::string tok;
	while (std::getline(in, tok, ',')) {
		if (!tok.empty()) {
			out.push_back(parse_algorithm(tok));
		}
	}
	return out;
}

int cmd_benchmark(const BenchArgs &a, std::ostream &out) {
	apply_threads(a.common);
	BenchmarkConfig cfg;
	cfg.suite = a.suite;
	cfg.scale = a.scale;
	cfg.seeds = a.seeds;
	cfg.seed = a.common.seed;
	cfg.algos = parse_algos(a.algos);

	std::ostream *sink = &out;
	std::ofstream file;
	bool need_header = true;
	if (!a.output.empty()) {
		const fs::path path(a.output);
		if (fs::exists(path) && fs::file_size(path) > 0) {
			std::ifstream check(path);
			std::string first;
			std::getline(check, first);
			if (first != kBenchmarkVersionLine) {
				throw IoError(path.string() + " exists with a different schema");
			}
			need_header = false;
		}
		if (path.has_parent_path()) {
			fs::create_directories(path.parent_path());
		}
		file.open(path, std::ios::app);
		if (!file) {
			throw IoError("cannot write " + path.string());
		}
		sink = &file;
	}
	if (need_header) {
		*sink << kBenchmarkVersionLine << '\n' << benchmark_header() << '\n';
	}
	const auto rows = run_benchmark(cfg, a.output.empty() ? nullptr : &out);
	for (const auto &row : rows) {
		*sink << format_row(row) << '\n';
	}
	if (!*sink) {
		throw IoError("benchmark write failed");
	}
	return kOk;
}

int subsample_step(double scale) { return std::max(1, static_cast<int>(std::ceil(1.0 / scale - 1e-12))); }

std::vector<int> range(int a, int step, int b) {
	std::vector<int> v;
	for (int x = a; x <= b; x += step) {
		v.push_back(x);
	}
	return v;
}

std::vector<int> thin(const std::vector<int> &grid, double scale) {
	const int step = subsample_step(scale);
	std::vector<int> out;
	for (std::size_t i = 0; i < grid.size(); i += static_cast<std::size_t>(step)) {
		out.push_back(grid[i]);
	}
	if (out.back() != grid.back()) {
		out.push_back(grid.back());
	}
	return out;
}

} // namespace

const char *const kBenchmarkVersionLine = "# varclust-bench v1";

Algorithm parse_algorithm(const std::string &name) {
	if (name == "cmvar") {
		return Algorithm::Cmvar;
	}
	if (name == "klmvar") {
		return Algorithm::Klmvar;
	}
	if (name == "naive2step") {
		return Algorithm::Naive2Step;
	}
	throw InvalidArgument("unknown algorithm '" + name + "' (cmvar, klmvar, naive2step)");
}

std::string algorithm_name(Algorithm algo) {
	switch (algo) {
	case Algorithm::Cmvar:
		return "cmvar";
	case Algorithm::Klmvar:
		return "klmvar";
	case Algorithm::Naive2Step:
		return "naive2step";
	}
	return "?";
}

RunOutcome run_algorithm(Algorithm algo, const TimeSeriesSet &data, int n_clusters, std::span<const int> orders,
                         std::uint64_t seed, int max_iters, double tol, int restarts) {
	RunOutcome out;
	const auto start = Clock::now();
	try {
		const int p_max = *std::max_element(orders.begin(), orders.end());
		const QrCache cache = QrCache::build(data, orders, p_max);
		switch (algo) {
		case Algorithm::Klmvar: {
			KlmvarConfig cfg;
			cfg.max_iters = max_iters;
			cfg.tol = tol;
			cfg.seed = seed;
			cfg.restarts = restarts;
			const auto r = fit_klmvar(cache, n_clusters, orders, cfg);
			out.labels = r.labels;
			out.converged = r.converged;
			break;
		}
		case Algorithm::Cmvar: {
			CmvarConfig cfg;
			cfg.max_iters = max_iters;
			cfg.tol = tol;
			cfg.seed = seed;
			const auto r = fit_cmvar(cache, data, n_clusters, orders, cfg);
			out.labels = r.labels;
			out.converged = r.converged;
			out.numeric_failure = r.numeric_failure;
			out.failed = r.numeric_failure;
			break;
		}
		case Algorithm::Naive2Step:
			out.labels = naive_two_step(cache, n_clusters, p_max, seed);
			out.converged = true;
			break;
		}
	} catch (const Error &e) {
		out.failed = true;
		out.error = e.what();
	}
	out.seconds = seconds_since(start);
	return out;
}

std::vector<SuiteCase> suite_cases(const std::string &suite, double scale) {
	if (!(scale > 0.0 && scale <= 1.0)) {
		throw InvalidArgument("--scale must lie in (0, 1]");
	}
	auto nc = [&](int full) { return std::max(2, static_cast<int>(std::lround(full * scale))); };
	std::vector<SuiteCase> cases;
	if (suite == "precision") {
		for (const int m : thin({3, 6, 9}, scale)) {
			cases.push_back({m, 5, 100, 8, nc(40)});
		}
	} else if (suite == "scale-K") {
		for (const int k : thin(range(2, 2, 84), scale)) {
			cases.push_back({6, 5, 100, k, nc(50)});
		}
	} else if (suite == "scale-T") {
		for (const int t : thin(range(50, 50, 1200), scale)) {
			cases.push_back({2, 5, t, 5, nc(20)});
		}
	} else if (suite == "scale-m") {
		for (const int m : thin(range(2, 1, 20), scale)) {
			cases.push_back({m, 5, 150, 5, nc(20)});
		}
	} else if (suite == "twostep-T") {
		for (const int t : thin(range(100, 200, 1500), scale)) {
			cases.push_back({3, 5, t, 8, nc(40)});
		}
	} else {
		throw InvalidArgument("unknown suite '" + suite + "' (precision, scale-K, scale-T, scale-m, twostep-T)");
	}
	return cases;
}

std::vector<Algorithm> suite_default_algos(const std::string &suite) {
	if (suite == "precision") {
		return {Algorithm::Klmvar, Algorithm::Cmvar, Algorithm::Naive2Step};
	}
	if (suite == "twostep-T") {
		return {Algorithm::Naive2Step, Algorithm::Klmvar};
	}
	return {Algorithm::Klmvar, Algorithm::Cmvar};
}

std::string benchmark_header() { return "suite,algo,m,p,T,K,Nc,seed,ri,nmi,seconds,failed"; }

std::string format_row(const BenchmarkRow &r) {
	std::ostringstream s;
	s << r.suite << ',' << r.algo << ',' << r.m << ',' << r.p << ',' << r.T << ',' << r.K << ',' << r.Nc << ','
	  << r.seed << ',' << fmt(r.ri) << ',' << fmt(r.nmi) << ',' << fmt(r.seconds) << ',' << (r.failed ? 1 : 0);
	return s.str();
}

std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig &config, std::ostream *progress) {
	if (config.seeds < 1) {
		throw InvalidArgument("--seeds must be >= 1");
	}
	const auto cases = suite_cases(config.suite, config.scale);
	const auto algos = config.algos.empty() ? suite_default_algos(config.suite) : config.algos;
	std::vector<BenchmarkRow> rows;
	for (std::size_t c = 0; c < cases.size(); ++c) {
		const SuiteCase &sc = cases[c];
		for (int s = 0; s < config.seeds; ++s) {
			DatasetSpec spec;
			spec.m = sc.m;
			spec.p = sc.p;
			spec.T = sc.T;
			spec.K = sc.K;
			spec.n_per_cluster = sc.Nc;
			spec.seed = config.seed + 1000003ULL * c + static_cast<std::uint64_t>(s);
			const Dataset ds = generate_dataset(spec);
			const std::vector<int> orders(static_cast<std::size_t>(sc.K), sc.p);
			for (const Algorithm algo : algos) {
				const RunOutcome r = run_algorithm(algo, ds.data, sc.K, orders, spec.seed);
				BenchmarkRow row{config.suite, algorithm_name(algo), sc.m, sc.p, sc.T, sc.K, sc.Nc, spec.seed,
				                 std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
				                 r.seconds, r.failed};
				if (!r.labels.empty()) {
					row.ri = rand_index(r.labels, ds.truth);
					row.nmi = nmi(r.labels, ds.truth);
				}
				if (progress != nullptr) {
					*progress << format_row(row) << '\n';
				}
				rows.push_back(row);
			}
		}
	}
	return rows;
}

int run(std::vector<std::string> args, std::ostream &out, std::ostream &err) {
	CLI::App app{"Clustering of vector time series by their autoregressive dynamics", "varclust"};
	app.require_subcommand(1);
	app.set_version_flag("--version", "varclust 1.0");
	app.footer("Any command accepts --config FILE (JSON mirroring the flags; flags take precedence).\n"
	           "Exit codes: 0 ok, 1 usage, 2 IO, 3 no convergence, 4 numeric failure.");

	GenerateArgs gen;
	auto *g = app.add_subcommand("generate", "Simulate a labelled dataset of stable VAR series");
	add_common(g, gen.common);
	g->add_option("--m", gen.spec.m, "Variables per series")->check(CLI::PositiveNumber);
	g->add_option("--p", gen.spec.p, "VAR order")->check(CLI::PositiveNumber);
	g->add_option("--T", gen.spec.T, "Series length")->check(CLI::PositiveNumber);
	g->add_option("--K", gen.spec.K, "Number of clusters")->check(CLI::PositiveNumber);
	g->add_option("--Nc", gen.spec.n_per_cluster, "Series per cluster")->check(CLI::PositiveNumber);
	g->add_option("--burn-in", gen.spec.burn_in, "Discarded warm-up steps")->check(CLI::NonNegativeNumber);
	g->add_option("--root-min", gen.spec.root_min_abs, "Smallest characteristic root modulus");
	g->add_option("--root-max", gen.spec.root_max_abs, "Largest characteristic root modulus");
	g->add_option("-o,--output", gen.out_dir, "Output directory");

	ClusterArgs cl;
	auto *c = app.add_subcommand("cluster", "Cluster a dataset");
	add_common(c, cl.common);
	c->add_option("data", cl.data, "Dataset CSV or directory holding data.csv")->required();
	c->add_option("--algo", cl.algo, "cmvar | klmvar | naive2step");
	c->add_option("--K", cl.K, "Number of clusters");
	c->add_option("--p", cl.p, "VAR order, or one order per cluster (a,b,c)");
	c->add_option("--tol", cl.tol, "Relative convergence tolerance");
	c->add_option("--max-iters", cl.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
	c->add_option("--restarts", cl.restarts, "k-LMVAR independent initializations")->check(CLI::PositiveNumber);
	c->add_option("--init", cl.init, "random (default) | naive2step");
	c->add_option("--empty-policy", cl.empty_policy, "k-LMVAR empty cluster handling: reseed | freeze");
	c->add_flag("--raw-covariance", cl.raw_covariance, "k-LMVAR label update without det-normalization");
	c->add_option("-o,--output", cl.out_dir, "Output directory");

	SelectArgs se;
	auto *s = app.add_subcommand("select", "BIC surface over (K, p) candidates");
	add_common(s, se.common);
	s->add_option("data", se.data, "Dataset CSV or directory holding data.csv")->required();
	s->add_option("--algo", se.algo, "cmvar | klmvar | naive2step");
	s->add_option("--K", se.ks, "K candidates: a:i:b or a,b,c");
	s->add_option("--p", se.ps, "p candidates: a:i:b or a,b,c");
	s->add_option("--gamma", se.gamma, "Extended BIC weight in [0, 1]");
	s->add_option("--restarts", se.restarts, "Restarts per cell")->check(CLI::PositiveNumber);
	s->add_option("--max-iters", se.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
	s->add_option("--tol", se.tol, "Relative convergence tolerance");
	s->add_flag("--adhoc", se.adhoc, "Also run cyclic (K, p) descent");
	s->add_option("-o,--output", se.output, "Grid CSV path or directory");

	EvaluateArgs ev;
	auto *e = app.add_subcommand("evaluate", "Rand index and NMI against ground truth");
	e->add_option("labels", ev.labels, "Labels CSV (or result directory)")->required();
	e->add_option("truth", ev.truth, "truth.json, labels CSV, or dataset directory")->required();
	e->add_option("-o,--output", ev.output, "Metrics JSON path");

	BenchArgs be;
	be.common.seed = 1;
	auto *b = app.add_subcommand("benchmark", "Scaled reproduction suites, long-format CSV");
	add_common(b, be.common);
	b->add_option("suite", be.suite, "precision | scale-K | scale-T | scale-m | twostep-T")->required();
	b->add_option("--scale", be.scale, "Shrink factor in (0, 1] for N_c and sweep grids");
	b->add_option("--seeds", be.seeds, "Datasets per configuration")->check(CLI::PositiveNumber);
	b->add_option("--algos", be.algos, "Comma list of cmvar,klmvar,naive2step");
	b->add_option("-o,--output", be.output, "CSV path (appended when present); stdout otherwise");

	try {
		merge_config(args, app);
		std::reverse(args.begin(), args.end());
		app.parse(args);
	} catch (const CLI::CallForHelp &) {
		out << app.help();
		return kOk;
	} catch (const CLI::CallForAllHelp &) {
		out << app.help("", CLI::AppFormatMode::All);
		return kOk;
	} catch (const CLI::CallForVersion &) {
		out << app.version() << '\n';
		return kOk;
	} catch (const CLI::ParseError &pe) {
		err << "error: " << pe.what() << '\n';
		return kUsage;
	} catch (const IoError &ex) {
		err << "error: " << ex.what() << '\n';
		return kIo;
	} catch (const Error &ex) {
		err << "error: " << ex.what() << '\n';
		return kUsage;
	}

	try {
		if (g->parsed()) {
			return cmd_generate(gen, out);
		}
		if (c->parsed()) {
			return cmd_cluster(cl, out, err);
		}
		if (s->parsed()) {
			return cmd_select(se, out);
		}
		if (e->parsed()) {
			return cmd_evaluate(ev, out);
		}
		if (b->parsed()) {
			return cmd_benchmark(be, out);
		}
	} catch (const IoError &ex) {
		err << "error: " << ex.what() << '\n';
		return kIo;
	} catch (const fs::filesystem_error &ex) {
		err << "error: " << ex.what() << '\n';
		return kIo;
	} catch (const InvalidArgument &ex) {
		err << "error: " << ex.what() << '\n';
		return kUsage;
	} catch (const InsufficientData &ex) {
		err << "error: " << ex.what() << '\n';
		return kUsage;
	} catch (const RangeError &ex) {
		err << "error: " << ex.what() << '\n';
		return kUsage;
	} catch (const Error &ex) {
		err << "numeric failure: " << ex.what() << '\n';
		return kNumericFailure;
	}
	return kUsage;
}

} // namespace varclust::cli
