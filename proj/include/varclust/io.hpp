#pragma once

#include "varclust/core.hpp"
#include "varclust/datagen.hpp"
#include "varclust/metrics.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace varclust {

namespace fs = std::filesystem;

/// Dataset CSV: header `series_id,t,y1,...,ym`, rows sorted by (series_id, t),
/// t 1-based and consecutive, numbers printed with 17 significant digits.
void write_dataset_csv(const fs::path &path, const TimeSeriesSet &data);
TimeSeriesSet read_dataset_csv(const fs::path &path);

// Labels CSV `series_id,label`.
void write_labels_csv(const fs::path &path, const TimeSeriesSet &data, std::span<const int> labels);
std::vector<std::pair<std::string, int>> read_labels_csv(const fs::path &path);

nlohmann::json to_json(const VarComponent &comp);
nlohmann::json to_json(const MixtureParams &params);
nlohmann::json to_json(const Matrix &m);
VarComponent component_from_json(const nlohmann::json &j);

/// Sidecar with the generating spec, 1-based truth labels keyed by id, and the models.
void write_truth_json(const fs::path &path, const Dataset &dataset);
std::vector<std::pair<std::string, int>> read_truth_labels(const fs::path &path);

void write_json(const fs::path &path, const nlohmann::json &j);
nlohmann::json read_json(const fs::path &path);

/// Candidate lists: `a:i:b` (inclusive, step i), `a,b,c`, or a single value.
std::vector<int> parse_int_list(const std::string &text);
std::vector<double> parse_double_list(const std::string &text);

/// Aligns two labelled id lists. Throws InvalidArgument on any id mismatch.
std::pair<LabelVector, LabelVector> align_labels(const std::vector<std::pair<std::string, int>> &a,
                                                 const std::vector<std::pair<std::string, int>> &b);

} // namespace varclust
