#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nframe/linalg.hpp"

namespace nframe::svg {

struct Series {
    std::string name;
    std::vector<std::optional<double>> values;  // one per x label; gaps break the line
};

// Polyline chart with categorical x axis. At most 12 series.
std::string line_chart(const std::string& title, const std::string& y_label, const std::vector<std::string>& x_labels,
                       const std::vector<Series>& series);

// One <rect class="cell"> per matrix entry; NaN cells are drawn grey.
// Colour scale is fixed to [0, 1].
std::string heatmap(const std::string& title, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const linalg::Matrix& values);

std::string escape(const std::string& text);

}  // namespace nframe::svg
