#include "nframe/svg.hpp"

#include "nframe/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace nframe::svg {

namespace {

constexpr std::array<const char*, 12> palette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                               "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};

std::string header(double width, double height)
{
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" viewBox=\"0 0 {0:.0f} {1:.0f}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        width, height);
}

// Viridis-like ramp between a few anchors.
std::string colour(double t)
{
    static constexpr std::array<std::array<double, 3>, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                                                                 {94, 201, 98}, {253, 231, 37}}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), 3);
    const double f = t - static_cast<double>(i);
    std::array<int, 3> rgb{};
    for (std::size_t c = 0; c < 3; ++c) {
        rgb[c] = static_cast<int>(std::lround(stops[i][c] + f * (stops[i + 1][c] - stops[i][c])));
    }
    return fmt::format("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2]);
}

}  // namespace

std::string escape(const std::string& text)
{
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string line_chart(const std::string& title, const std::string& y_label, const std::vector<std::string>& x_labels,
                       const std::vector<Series>& series)
{
    if (series.size() > palette.size()) {
        throw Error(ErrorKind::Config, fmt::format("line chart supports at most {} series", palette.size()));
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : series) {
        for (const auto& v : s.values) {
            if (v && std::isfinite(*v)) {
                lo = std::min(lo, *v);
                hi = std::max(hi, *v);
            }
        }
    }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo = std::max(0.0, lo - pad);
    hi += pad;

    const double left = 70, right = 160, top = 40, bottom = 110;
    const double plot_w = std::max(300.0, 40.0 * static_cast<double>(x_labels.size()));
    const double plot_h = 300;
    const double width = left + plot_w + right;
    const double height = top + plot_h + bottom;
    const auto n = x_labels.size();
    const auto px = [&](std::size_t i) {
        return n <= 1 ? left + plot_w / 2 : left + plot_w * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    const auto py = [&](double v) { return top + plot_h * (1.0 - (v - lo) / (hi - lo)); };

    std::string out = header(width, height);
    out += fmt::format("<text x=\"{:.1f}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                       left + plot_w / 2, escape(title));
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{:.1f}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", left,
                       top, plot_w, plot_h);
    for (int t = 0; t <= 5; ++t) {
        const double v = lo + (hi - lo) * t / 5.0;
        const double y = py(v);
        out += fmt::format("<line x1=\"{}\" x2=\"{:.1f}\" y1=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#ddd\"/>\n", left,
                           left + plot_w, y, y);
        out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", left - 6, y + 4, v);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double x = px(i);
        const double y = top + plot_h + 12;
        out += fmt::format(
            "<text x=\"{0:.1f}\" y=\"{1:.1f}\" text-anchor=\"end\" transform=\"rotate(-45 {0:.1f} {1:.1f})\">{2}</text>\n",
            x, y, escape(x_labels[i]));
    }
    out += fmt::format("<text x=\"16\" y=\"{0:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0:.1f})\">{1}</text>\n",
                       top + plot_h / 2, escape(y_label));

    for (std::size_t s = 0; s < series.size(); ++s) {
        std::vector<std::string> runs{""};
        for (std::size_t i = 0; i < n && i < series[s].values.size(); ++i) {
            const auto& v = series[s].values[i];
            if (!v || !std::isfinite(*v)) {
                if (!runs.back().empty()) runs.emplace_back();
                continue;
            }
            runs.back() += fmt::format("{}{:.2f},{:.2f}", runs.back().empty() ? "" : " ", px(i), py(*v));
        }
        for (const auto& pts : runs) {
            if (pts.empty()) continue;
            out += fmt::format("<polyline class=\"series\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
                               palette[s], pts);
        }
        const double ly = top + 10 + 18.0 * static_cast<double>(s);
        out += fmt::format("<line x1=\"{0:.1f}\" x2=\"{1:.1f}\" y1=\"{2:.1f}\" y2=\"{2:.1f}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                           left + plot_w + 12, left + plot_w + 32, ly, palette[s]);
        out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", left + plot_w + 38, ly + 4,
                           escape(series[s].name));
    }
    out += "</svg>\n";
    return out;
}

std::string heatmap(const std::string& title, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const linalg::Matrix& values)
{
    if (static_cast<std::size_t>(values.rows()) != row_labels.size() ||
        static_cast<std::size_t>(values.cols()) != col_labels.size()) {
        throw Error(ErrorKind::Shape, "heatmap labels do not match the matrix shape");
    }
    const double cell = 28;
    const double left = 130, top = 40, bottom = 120, right = 80;
    const double grid_w = cell * static_cast<double>(values.cols());
    const double grid_h = cell * static_cast<double>(values.rows());
    std::string out = header(left + grid_w + right, top + grid_h + bottom);
    out += fmt::format("<text x=\"{:.1f}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                       left + grid_w / 2, escape(title));
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        const double y = top + cell * static_cast<double>(r);
        out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", left - 6, y + cell / 2 + 4,
                           escape(row_labels[static_cast<std::size_t>(r)]));
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            const double v = values(r, c);
            const double x = left + cell * static_cast<double>(c);
            out += fmt::format("<rect class=\"cell\" x=\"{:.1f}\" y=\"{:.1f}\" width=\"{}\" height=\"{}\" fill=\"{}\">"
                               "<title>{}</title></rect>\n",
                               x, y, cell, cell, std::isnan(v) ? std::string("#cccccc") : colour(v),
                               std::isnan(v) ? std::string("n/a") : fmt::format("{:.4f}", v));
        }
    }
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        const double x = left + cell * (static_cast<double>(c) + 0.5);
        const double y = top + grid_h + 10;
        out += fmt::format(
            "<text x=\"{0:.1f}\" y=\"{1:.1f}\" text-anchor=\"end\" transform=\"rotate(-60 {0:.1f} {1:.1f})\">{2}</text>\n",
            x, y, escape(col_labels[static_cast<std::size_t>(c)]));
    }
    for (int i = 0; i <= 10; ++i) {
        const double y = top + grid_h - grid_h * i / 10.0;
        out += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"14\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                           left + grid_w + 20, y - grid_h / 10.0, grid_h / 10.0, colour(i / 10.0));
    }
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">1</text>\n", left + grid_w + 40, top + 10);
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">0</text>\n", left + grid_w + 40, top + grid_h);
    out += "</svg>\n";
    return out;
}

}  // namespace nframe::svg
