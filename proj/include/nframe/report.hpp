#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nframe/analysis.hpp"

namespace nframe::report {

// Shortest round-trip decimal form ("{:.17g}"); CSV bytes depend only on the values.
std::string number(double v);
std::string csv_field(const std::string& s);

// model,image,frame,layer_index,layer_name,stable_rank
// One row per (curve, successful image, tap). Degenerate taps leave stable_rank empty.
std::string results_csv(const std::vector<StableRankCurve>& curves);

// Per curve: per-layer {layer_index, layer_name, mean, ci_low, ci_high, n}, skipped images and warnings.
nlohmann::json curve_json(const StableRankCurve& curve);
nlohmann::json summary_json(const std::vector<StableRankCurve>& curves);

// model_a,model_b,tap_a,tap_b,cka,n_images
std::string cka_csv(const CkaReport& report);
nlohmann::json cka_json(const CkaReport& report);

// key,layer_index,layer_name,mean,ci_low,ci_high,n with `key_name` as the first
// column header and keys[i] labelling curves[i]. Used by sweep-k and series.
std::string aggregate_csv(const std::string& key_name, const std::vector<std::string>& keys,
                          const std::vector<StableRankCurve>& curves);

nlohmann::json correlation_json(const CorrelationReport& report);

// Fixed-width text table for terminals.
std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);
std::string curve_table(const std::vector<StableRankCurve>& curves);

// Writes via a temporary file in the same directory, then renames.
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace nframe::report
