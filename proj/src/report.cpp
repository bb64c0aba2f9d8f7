#include "nframe/report.hpp"

#include "nframe/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

namespace nframe::report {

using nlohmann::json;

std::string number(double v)
{
    if (std::isnan(v)) return "nan";
    return fmt::format("{:.17g}", v);
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

namespace {

std::string opt_number(const std::optional<double>& v)
{
    return v ? number(*v) : std::string{};
}

json opt_json(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string results_csv(const std::vector<StableRankCurve>& curves)
{
    std::string out = "model,image,frame,layer_index,layer_name,stable_rank\n";
    for (const auto& curve : curves) {
        const std::string frame{to_string(curve.frame)};
        for (std::size_t i = 0; i < curve.image_ids.size(); ++i) {
            for (const auto& tap : curve.taps) {
                out += fmt::format("{},{},{},{},{},{}\n", csv_field(curve.model), csv_field(curve.image_ids[i]), frame,
                                   tap.tap_id, csv_field(tap.name), opt_number(tap.per_image[i]));
            }
        }
    }
    return out;
}

json curve_json(const StableRankCurve& curve)
{
    json j;
    j["model"] = curve.model;
    j["frame"] = std::string(to_string(curve.frame));
    j["k"] = curve.k;
    j["images"] = curve.image_ids;
    j["layers"] = json::array();
    for (const auto& tap : curve.taps) {
        j["layers"].push_back({{"layer_index", tap.tap_id},
                               {"layer_name", tap.name},
                               {"mean", opt_json(tap.mean)},
                               {"ci_low", opt_json(tap.ci_low)},
                               {"ci_high", opt_json(tap.ci_high)},
                               {"n", tap.n},
                               {"degenerate", tap.degenerate}});
    }
    j["skipped"] = json::array();
    for (const auto& s : curve.skipped) j["skipped"].push_back({{"image", s.image_id}, {"reason", s.reason}});
    j["warnings"] = curve.warnings;
    if (curve.frame == FrameKind::Noise) j["matched_noise_norm"] = curve.matched_noise_norm;
    return j;
}

json summary_json(const std::vector<StableRankCurve>& curves)
{
    json j;
    j["curves"] = json::array();
    json skipped = json::array();
    for (const auto& c : curves) {
        j["curves"].push_back(curve_json(c));
        for (const auto& s : c.skipped) {
            skipped.push_back({{"image", s.image_id}, {"frame", std::string(to_string(c.frame))}, {"reason", s.reason}});
        }
    }
    j["skipped"] = skipped;
    if (!curves.empty()) j["model"] = curves.front().model;
    return j;
}

std::string cka_csv(const CkaReport& r)
{
    std::string out = "model_a,model_b,tap_a,tap_b,cka,n_images\n";
    for (Eigen::Index p = 0; p < r.mean.rows(); ++p) {
        for (Eigen::Index q = 0; q < r.mean.cols(); ++q) {
            const int count = r.counts(p, q);
            out += fmt::format("{},{},{},{},{},{}\n", csv_field(r.model_a), csv_field(r.model_b),
                               r.taps_a[static_cast<std::size_t>(p)], r.taps_b[static_cast<std::size_t>(q)],
                               count > 0 ? number(r.mean(p, q)) : std::string{}, count);
        }
    }
    return out;
}

json cka_json(const CkaReport& r)
{
    json j;
    j["model_a"] = r.model_a;
    j["model_b"] = r.model_b;
    j["taps_a"] = json::array();
    for (std::size_t i = 0; i < r.taps_a.size(); ++i) j["taps_a"].push_back({{"tap_id", r.taps_a[i]}, {"name", r.names_a[i]}});
    j["taps_b"] = json::array();
    for (std::size_t i = 0; i < r.taps_b.size(); ++i) j["taps_b"].push_back({{"tap_id", r.taps_b[i]}, {"name", r.names_b[i]}});
    j["images"] = r.images;
    j["degenerate_pairs"] = r.degenerate_pairs;
    j["skipped"] = json::array();
    for (const auto& s : r.skipped) j["skipped"].push_back({{"image", s.image_id}, {"reason", s.reason}});
    return j;
}

std::string aggregate_csv(const std::string& key_name, const std::vector<std::string>& keys,
                          const std::vector<StableRankCurve>& curves)
{
    if (keys.size() != curves.size()) throw Error(ErrorKind::Shape, "aggregate_csv: one key per curve");
    std::string out = key_name + ",layer_index,layer_name,mean,ci_low,ci_high,n\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        for (const auto& tap : curves[c].taps) {
            out += fmt::format("{},{},{},{},{},{},{}\n", csv_field(keys[c]), tap.tap_id, csv_field(tap.name),
                               opt_number(tap.mean), opt_number(tap.ci_low), opt_number(tap.ci_high), tap.n);
        }
    }
    return out;
}

json correlation_json(const CorrelationReport& r)
{
    json j;
    j["models"] = r.models;
    j["warnings"] = r.warnings;
    j["layers"] = json::array();
    for (const auto& t : r.taps) {
        j["layers"].push_back({{"layer_index", t.tap_id},
                               {"layer_name", t.name},
                               {"pearson", opt_json(t.pearson)},
                               {"spearman", opt_json(t.spearman)},
                               {"models", t.models}});
    }
    return j;
}

std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows)
{
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    const auto line = [&](const std::vector<std::string>& cells) {
        std::string s;
        for (std::size_t c = 0; c < width.size(); ++c) {
            const std::string cell = c < cells.size() ? cells[c] : "";
            s += fmt::format("{:<{}}", cell, width[c]);
            if (c + 1 < width.size()) s += "  ";
        }
        while (!s.empty() && s.back() == ' ') s.pop_back();
        return s + "\n";
    };
    std::string out = line(header);
    std::vector<std::string> rule;
    for (auto w : width) rule.emplace_back(w, '-');
    out += line(rule);
    for (const auto& row : rows) out += line(row);
    return out;
}

std::string curve_table(const std::vector<StableRankCurve>& curves)
{
    std::vector<std::vector<std::string>> rows;
    const auto fixed = [](const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("-"); };
    for (const auto& c : curves) {
        for (const auto& t : c.taps) {
            rows.push_back({std::string(to_string(c.frame)), std::to_string(t.tap_id), t.name, fixed(t.mean),
                            fixed(t.ci_low), fixed(t.ci_high), std::to_string(t.n)});
        }
    }
    return table({"frame", "layer", "name", "mean", "ci_low", "ci_high", "n"}, rows);
}

void write_file(const std::filesystem::path& path, const std::string& contents)
{
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::Io, fmt::format("cannot move {} into place: {}", path.string(), ec.message()));
}

}  // namespace nframe::report
