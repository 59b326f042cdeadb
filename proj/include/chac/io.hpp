#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "chac/geometry.hpp"
#include "chac/hac.hpp"

#include "json.hpp"

namespace chac {

enum class PointFormat { csv, fvecs };

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// CSV: one point per row, '.' decimal separator, optional header
/// auto-detected. fvecs: little-endian records of [int32 d][d x float32],
/// widened to doubles. Ragged rows, dimension changes and non-finite values
/// are parse errors naming the offending record.
Dataset load_points(const std::string& path, PointFormat format);
Dataset read_points_csv(std::istream& in, const std::string& name);
Dataset read_points_fvecs(std::istream& in, const std::string& name);

void write_points(const Dataset& points, const std::string& path, PointFormat format);

/// One integer label per row; optional header auto-detected.
std::vector<std::int64_t> load_labels(const std::string& path);

/// Header `left_id,right_id,new_id,distance,size`; distances carry 17
/// significant digits so reloading is bit-exact.
void write_dendrogram(const Dendrogram& dend, const std::string& path);
Dendrogram load_dendrogram(const std::string& path);

/// original row index -> dendrogram leaf id, as `input_index,leaf_id` rows.
void write_leaf_map(const std::vector<std::uint32_t>& leaf_of_input, const std::string& path);
std::vector<std::uint32_t> load_leaf_map(const std::string& path);

nlohmann::json stats_to_json(const RunStats& stats);

/// JSON with every counter, Gamma (= stale dequeues per merge) and the
/// wall-clock phases, plus any caller-supplied context (seed, config echo).
void emit_stats(const RunStats& stats, const std::string& path,
                const nlohmann::json& extra = nlohmann::json::object());

}  // namespace chac
