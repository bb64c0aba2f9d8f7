#include "nframe/image.hpp"

#include "nframe/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nframe {

std::string_view to_string(Interpolation mode) noexcept
{
    switch (mode) {
    case Interpolation::Bilinear: return "bilinear";
    case Interpolation::Nearest: return "nearest";
    case Interpolation::Bicubic: return "bicubic";
    }
    return "bilinear";
}

Interpolation parse_interpolation(std::string_view name)
{
    if (name == "bilinear") return Interpolation::Bilinear;
    if (name == "nearest") return Interpolation::Nearest;
    if (name == "bicubic") return Interpolation::Bicubic;
    throw Error(ErrorKind::InvalidSpec, "unknown interpolation '" + std::string(name) + "'");
}

Raster::Raster(int height, int width, double fill)
    : height_(height), width_(width),
      data_(static_cast<std::size_t>(kChannels) * std::max(height, 0) * std::max(width, 0), fill)
{
    if (height <= 0 || width <= 0) {
        throw Error(ErrorKind::InvalidInput, "raster dimensions must be positive");
    }
}

Raster::Raster(int height, int width, std::vector<double> planar)
    : height_(height), width_(width), data_(std::move(planar))
{
    if (height <= 0 || width <= 0) {
        throw Error(ErrorKind::InvalidInput, "raster dimensions must be positive");
    }
    if (data_.size() != static_cast<std::size_t>(kChannels) * height * width) {
        throw Error(ErrorKind::InvalidInput, "raster buffer size does not match 3x" + std::to_string(height) +
                                                 "x" + std::to_string(width));
    }
}

Image::Image(int height, int width, double fill) : raster_(height, width, fill)
{
    if (!(fill >= 0.0 && fill <= 1.0)) {
        throw Error(ErrorKind::InvalidInput, "image fill value outside [0, 1]");
    }
}

Image Image::from_raster(Raster raster)
{
    if (raster.size() == 0) {
        throw Error(ErrorKind::InvalidInput, "image is empty");
    }
    for (double v : raster.data()) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw Error(ErrorKind::InvalidInput, "image value outside [0, 1]");
        }
    }
    return Image(std::move(raster));
}

Image Image::clamped(Raster raster)
{
    if (raster.size() == 0) {
        throw Error(ErrorKind::InvalidInput, "image is empty");
    }
    for (double& v : raster.data()) {
        if (std::isnan(v)) {
            throw Error(ErrorKind::InvalidInput, "image value is NaN");
        }
        v = std::clamp(v, 0.0, 1.0);
    }
    return Image(std::move(raster));
}

namespace {

struct Tap {
    int index;
    double weight;
};

// Keys cubic convolution kernel, a = -0.5.
double cubic_weight(double t)
{
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

std::vector<std::vector<Tap>> resample_taps(int in, int out, Interpolation mode)
{
    std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(out));
    const double scale = out > 1 ? static_cast<double>(in - 1) / (out - 1) : 0.0;
    for (int d = 0; d < out; ++d) {
        const double src = out > 1 ? d * scale : 0.5 * (in - 1);
        auto& row = taps[static_cast<std::size_t>(d)];
        switch (mode) {
        case Interpolation::Nearest:
            row.push_back({std::clamp(static_cast<int>(std::lround(src)), 0, in - 1), 1.0});
            break;
        case Interpolation::Bilinear: {
            const int i0 = std::clamp(static_cast<int>(std::floor(src)), 0, in - 1);
            const double f = src - i0;
            row.push_back({i0, 1.0 - f});
            if (f > 0.0) row.push_back({std::min(i0 + 1, in - 1), f});
            break;
        }
        case Interpolation::Bicubic: {
            const int i0 = static_cast<int>(std::floor(src));
            const double f = src - i0;
            for (int m = -1; m <= 2; ++m) {
                const double w = cubic_weight(m - f);
                if (w != 0.0) row.push_back({std::clamp(i0 + m, 0, in - 1), w});
            }
            break;
        }
        }
    }
    return taps;
}

}  // namespace

Raster resize(const Raster& x, int height, int width, Interpolation mode)
{
    if (height < 1 || width < 1) {
        throw Error(ErrorKind::InvalidInput, "resize: target dimensions must be positive");
    }
    if (height == x.height() && width == x.width()) return x;

    const auto col_taps = resample_taps(x.width(), width, mode);
    const auto row_taps = resample_taps(x.height(), height, mode);

    Raster horizontal(x.height(), width);
    for (int c = 0; c < Raster::kChannels; ++c) {
        for (int y = 0; y < x.height(); ++y) {
            for (int d = 0; d < width; ++d) {
                double acc = 0.0;
                for (const Tap& t : col_taps[static_cast<std::size_t>(d)]) acc += t.weight * x.at(c, y, t.index);
                horizontal.at(c, y, d) = acc;
            }
        }
    }
    Raster out(height, width);
    for (int c = 0; c < Raster::kChannels; ++c) {
        for (int d = 0; d < height; ++d) {
            const auto& taps = row_taps[static_cast<std::size_t>(d)];
            for (int xx = 0; xx < width; ++xx) {
                double acc = 0.0;
                for (const Tap& t : taps) acc += t.weight * horizontal.at(c, t.index, xx);
                out.at(c, d, xx) = acc;
            }
        }
    }
    return out;
}

Image resize(const Image& x, int height, int width, Interpolation mode)
{
    if (height == x.height() && width == x.width()) return x;
    return Image::clamped(resize(x.raster(), height, width, mode));
}

double sample(const Raster& x, int channel, double y, double xcoord, Interpolation mode, double outside)
{
    const double max_y = x.height() - 1;
    const double max_x = x.width() - 1;
    // Small tolerance so exact border positions survive rounding in the caller.
    constexpr double slack = 1e-9;
    if (y < -slack || xcoord < -slack || y > max_y + slack || xcoord > max_x + slack) return outside;
    y = std::clamp(y, 0.0, max_y);
    xcoord = std::clamp(xcoord, 0.0, max_x);

    switch (mode) {
    case Interpolation::Nearest:
        return x.at(channel, static_cast<int>(std::lround(y)), static_cast<int>(std::lround(xcoord)));
    case Interpolation::Bilinear: {
        const int y0 = static_cast<int>(std::floor(y));
        const int x0 = static_cast<int>(std::floor(xcoord));
        const int y1 = std::min(y0 + 1, x.height() - 1);
        const int x1 = std::min(x0 + 1, x.width() - 1);
        const double fy = y - y0;
        const double fx = xcoord - x0;
        const double top = x.at(channel, y0, x0) + fx * (x.at(channel, y0, x1) - x.at(channel, y0, x0));
        const double bottom = x.at(channel, y1, x0) + fx * (x.at(channel, y1, x1) - x.at(channel, y1, x0));
        return top + fy * (bottom - top);
    }
    case Interpolation::Bicubic: {
        const int y0 = static_cast<int>(std::floor(y));
        const int x0 = static_cast<int>(std::floor(xcoord));
        const double fy = y - y0;
        const double fx = xcoord - x0;
        double acc = 0.0;
        for (int m = -1; m <= 2; ++m) {
            const double wy = cubic_weight(m - fy);
            if (wy == 0.0) continue;
            const int yy = std::clamp(y0 + m, 0, x.height() - 1);
            for (int n = -1; n <= 2; ++n) {
                const double wx = cubic_weight(n - fx);
                if (wx == 0.0) continue;
                acc += wy * wx * x.at(channel, yy, std::clamp(x0 + n, 0, x.width() - 1));
            }
        }
        return acc;
    }
    }
    return outside;
}

std::vector<double> luma(const Raster& x)
{
    std::vector<double> out(x.plane_size());
    const auto r = x.plane(0);
    const auto g = x.plane(1);
    const auto b = x.plane(2);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    return out;
}

}  // namespace nframe
