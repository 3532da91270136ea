#include "varclust/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace varclust {

namespace {

std::string fmt17(double v) {
	char buf[40];
	std::snprintf(buf, sizeof buf, "%.17g", v);
	return buf;
}

std::vector<std::string> split(const std::string &line, char sep) {
	std::vector<std::string> out;
	std::string cur;
	std::istringstream in(line);
	while (std::getline(in, cur, sep)) {
		out.push_back(cur);
	}
	if (!line.empty() && line.back() == sep) {
		out.emplace_back();
	}
	return out;
}

std::string trim(std::string s) {
	const auto b = s.find_first_not_of(" \t\r\n");
	if (b == std::string::npos) {
		return {};
	}
	const auto e = s.find_last_not_of(" \t\r\n");
	return s.substr(b, e - b + 1);
}

double parse_double(const std::string &text, const std::string &what) {
	const std::string s = trim(text);
	double v = 0.0;
	const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
	if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
		throw InvalidArgument("cannot parse " + what + ": '" + text + "'");
	}
	return v;
}

long long parse_integer(const std::string &text, const std::string &what) {
	const std::string s = trim(text);
	long long v = 0;
	const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
	if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
		throw InvalidArgument("cannot parse " + what + ": '" + text + "'");
	}
	return v;
}

std::ifstream open_in(const fs::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw IoError("cannot open " + path.string());
	}
	return in;
}

std::ofstream open_out(const fs::path &path) {
	if (path.has_parent_path()) {
		std::error_code ec;
		fs::create_directories(path.parent_path(), ec);
	}
	std::ofstream out(path);
	if (!out) {
		throw IoError("cannot write " + path.string());
	}
	return out;
}

Matrix matrix_from_json(const nlohmann::json &j) {
	const auto rows = static_cast<Eigen::Index>(j.size());
	const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
	Matrix m(rows, cols);
	for (Eigen::Index r = 0; r < rows; ++r) {
		if (static_cast<Eigen::Index>(j[r].size()) != cols) {
			throw InvalidArgument("ragged matrix in JSON");
		}
		for (Eigen::Index c = 0; c < cols; ++c) {
			m(r, c) = j[r][c].get<double>();
		}
	}
	return m;
}

} // namespace

void write_dataset_csv(const fs::path &path, const TimeSeriesSet &data) {
	std::vector<std::size_t> order(data.size());
	for (std::size_t i = 0; i < order.size(); ++i) {
		order[i] = i;
	}
	std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data[a].id() < data[b].id(); });

	auto out = open_out(path);
	out << "series_id,t";
	for (int j = 1; j <= data.dim(); ++j) {
		out << ",y" << j;
	}
	out << '\n';
	for (const std::size_t n : order) {
		const auto &s = data[n];
		for (int t = 0; t < s.length(); ++t) {
			out << s.id() << ',' << (t + 1);
			for (int j = 0; j < s.dim(); ++j) {
				out << ',' << fmt17(s.values()(t, j));
			}
			out << '\n';
		}
	}
	if (!out) {
		throw IoError("write failed for " + path.string());
	}
}

TimeSeriesSet read_dataset_csv(const fs::path &path) {
	auto in = open_in(path);
	std::string line;
	if (!std::getline(in, line)) {
		throw InvalidArgument("empty dataset file " + path.string());
	}
	const auto header = split(trim(line), ',');
	if (header.size() < 3 || trim(header[0]) != "series_id" || trim(header[1]) != "t") {
		throw InvalidArgument("dataset header must be series_id,t,y1,...,ym");
	}
	const int m = static_cast<int>(header.size()) - 2;
	for (int j = 0; j < m; ++j) {
		if (trim(header[static_cast<std::size_t>(j) + 2]) != "y" + std::to_string(j + 1)) {
			throw InvalidArgument("dataset header must be series_id,t,y1,...,ym");
		}
	}

	std::vector<std::string> ids;
	std::unordered_map<std::string, std::vector<std::vector<double>>> rows;
	std::size_t line_no = 1;
	while (std::getline(in, line)) {
		++line_no;
		line = trim(line);
		if (line.empty()) {
			continue;
		}
		const auto fields = split(line, ',');
		if (static_cast<int>(fields.size()) != m + 2) {
			throw InvalidArgument("line " + std::to_string(line_no) + ": expected " + std::to_string(m + 2) + " fields");
		}
		const std::string id = trim(fields[0]);
		const long long t = parse_integer(fields[1], "time index");
		auto [it, inserted] = rows.try_emplace(id);
		if (inserted) {
			ids.push_back(id);
		}
		if (t != static_cast<long long>(it->second.size()) + 1) {
			throw InvalidArgument("line " + std::to_string(line_no) + ": time index for '" + id +
			                      "' must be consecutive from 1");
		}
		std::vector<double> v(static_cast<std::size_t>(m));
		for (int j = 0; j < m; ++j) {
			v[static_cast<std::size_t>(j)] = parse_double(fields[static_cast<std::size_t>(j) + 2], "value");
		}
		it->second.push_back(std::move(v));
	}
	if (ids.empty()) {
		throw InvalidArgument("dataset has no rows");
	}
	std::vector<TimeSeries> series;
	series.reserve(ids.size());
	for (const auto &id : ids) {
		const auto &r = rows[id];
		Matrix values(static_cast<Eigen::Index>(r.size()), m);
		for (std::size_t t = 0; t < r.size(); ++t) {
			for (int j = 0; j < m; ++j) {
				values(static_cast<Eigen::Index>(t), j) = r[t][static_cast<std::size_t>(j)];
			}
		}
		series.emplace_back(id, std::move(values));
	}
	return TimeSeriesSet(std::move(series));
}

void write_labels_csv(const fs::path &path, const TimeSeriesSet &data, std::span<const int> labels) {
	if (labels.size() != data.size()) {
		throw InvalidArgument("label count does not match series count");
	}
	auto out = open_out(path);
	out << "series_id,label\n";
	for (std::size_t n = 0; n < data.size(); ++n) {
		out << data[n].id() << ',' << labels[n] << '\n';
	}
	if (!out) {
		throw IoError("write failed for " + path.string());
	}
}

std::vector<std::pair<std::string, int>> read_labels_csv(const fs::path &path) {
	auto in = open_in(path);
	std::string line;
	if (!std::getline(in, line) || trim(line) != "series_id,label") {
		throw InvalidArgument("labels header must be series_id,label");
	}
	std::vector<std::pair<std::string, int>> out;
	while (std::getline(in, line)) {
		line = trim(line);
		if (line.empty()) {
			continue;
		}
		const auto fields = split(line, ',');
		if (fields.size() != 2) {
			throw InvalidArgument("labels row must have two fields: " + line);
		}
		out.emplace_back(trim(fields[0]), static_cast<int>(parse_integer(fields[1], "label")));
	}
	return out;
}

nlohmann::json to_json(const Matrix &m) {
	nlohmann::json j = nlohmann::json::array();
	for (Eigen::Index r = 0; r < m.rows(); ++r) {
		nlohmann::json row = nlohmann::json::array();
		for (Eigen::Index c = 0; c < m.cols(); ++c) {
			row.push_back(m(r, c));
		}
		j.push_back(std::move(row));
	}
	return j;
}

nlohmann::json to_json(const VarComponent &comp) {
	nlohmann::json j;
	j["order"] = comp.order();
	j["intercept"] = std::vector<double>(comp.intercept.data(), comp.intercept.data() + comp.intercept.size());
	j["lags"] = nlohmann::json::array();
	for (const auto &a : comp.lags) {
		j["lags"].push_back(to_json(a));
	}
	j["covariance"] = to_json(comp.covariance);
	return j;
}

nlohmann::json to_json(const MixtureParams &params) {
	nlohmann::json j;
	j["components"] = nlohmann::json::array();
	for (const auto &c : params.components) {
		j["components"].push_back(to_json(c));
	}
	if (params.weights) {
		const Vector &w = *params.weights;
		j["weights"] = std::vector<double>(w.data(), w.data() + w.size());
	}
	return j;
}

VarComponent component_from_json(const nlohmann::json &j) {
	try {
		VarComponent c;
		const auto icpt = j.at("intercept").get<std::vector<double>>();
		c.intercept = Eigen::Map<const Vector>(icpt.data(), static_cast<Eigen::Index>(icpt.size()));
		for (const auto &a : j.at("lags")) {
			c.lags.push_back(matrix_from_json(a));
		}
		c.covariance = matrix_from_json(j.at("covariance"));
		c.validate();
		return c;
	} catch (const nlohmann::json::exception &e) {
		throw InvalidArgument(std::string("malformed component JSON: ") + e.what());
	}
}

void write_json(const fs::path &path, const nlohmann::json &j) {
	auto out = open_out(path);
	out << j.dump(2) << '\n';
	if (!out) {
		throw IoError("write failed for " + path.string());
	}
}

nlohmann::json read_json(const fs::path &path) {
	auto in = open_in(path);
	try {
		return nlohmann::json::parse(in);
	} catch (const nlohmann::json::exception &e) {
		throw InvalidArgument("malformed JSON in " + path.string() + ": " + e.what());
	}
}

void write_truth_json(const fs::path &path, const Dataset &dataset) {
	nlohmann::json j;
	const auto &s = dataset.spec;
	j["spec"] = {{"m", s.m},           {"p", s.p},
	             {"T", s.T},           {"K", s.K},
	             {"Nc", s.n_per_cluster}, {"seed", s.seed},
	             {"burn_in", s.burn_in}, {"root_min_abs", s.root_min_abs},
	             {"root_max_abs", s.root_max_abs}};
	j["labels"] = nlohmann::json::array();
	for (std::size_t n = 0; n < dataset.data.size(); ++n) {
		j["labels"].push_back({{"series_id", dataset.data[n].id()}, {"label", dataset.truth[n]}});
	}
	j["models"] = nlohmann::json::array();
	for (const auto &c : dataset.models) {
		j["models"].push_back(to_json(c));
	}
	write_json(path, j);
}

std::vector<std::pair<std::string, int>> read_truth_labels(const fs::path &path) {
	const auto j = read_json(path);
	std::vector<std::pair<std::string, int>> out;
	try {
		for (const auto &e : j.at("labels")) {
			out.emplace_back(e.at("series_id").get<std::string>(), e.at("label").get<int>());
		}
	} catch (const nlohmann::json::exception &e) {
		throw InvalidArgument("malformed truth file " + path.string() + ": " + e.what());
	}
	return out;
}

std::vector<int> parse_int_list(const std::string &text) {
	const std::string s = trim(text);
	if (s.empty()) {
		throw InvalidArgument("empty candidate list");
	}
	std::vector<int> out;
	if (s.find(':') != std::string::npos) {
		const auto parts = split(s, ':');
		if (parts.size() != 3) {
			throw InvalidArgument("range must be a:i:b, got '" + text + "'");
		}
		const long long a = parse_integer(parts[0], "range start");
		const long long step = parse_integer(parts[1], "range step");
		const long long b = parse_integer(parts[2], "range end");
		if (step <= 0 || b < a) {
			throw InvalidArgument("range needs a positive step and a <= b: '" + text + "'");
		}
		for (long long v = a; v <= b; v += step) {
			out.push_back(static_cast<int>(v));
		}
		return out;
	}
	for (const auto &part : split(s, ',')) {
		out.push_back(static_cast<int>(parse_integer(part, "list value")));
	}
	return out;
}

std::vector<double> parse_double_list(const std::string &text) {
	std::vector<double> out;
	for (const auto &part : split(trim(text), ',')) {
		out.push_back(parse_double(part, "list value"));
	}
	if (out.empty()) {
		throw InvalidArgument("empty list");
	}
	return out;
}

std::pair<LabelVector, LabelVector> align_labels(const std::vector<std::pair<std::string, int>> &a,
                                                 const std::vector<std::pair<std::string, int>> &b) {
	std::unordered_map<std::string, int> lookup;
	for (const auto &[id, label] : b) {
		if (!lookup.emplace(id, label).second) {
			throw InvalidArgument("duplicate series id '" + id + "'");
		}
	}
	if (a.size() != b.size()) {
		throw InvalidArgument("label files cover different numbers of series");
	}
	LabelVector la;
	LabelVector lb;
	std::unordered_set<std::string> seen;
	for (const auto &[id, label] : a) {
		const auto it = lookup.find(id);
		if (it == lookup.end()) {
			throw InvalidArgument("series id '" + id + "' missing from the other label set");
		}
		if (!seen.insert(id).second) {
			throw InvalidArgument("duplicate series id '" + id + "'");
		}
		la.push_back(label);
		lb.push_back(it->second);
	}
	return {la, lb};
}

} // namespace varclust
