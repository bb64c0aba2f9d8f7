#include "nframe/augment.hpp"

#include "nframe/error.hpp"
#include "nframe/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace nframe {

namespace {

constexpr std::array<std::pair<AugmentationKind, std::string_view>, 13> kKindNames{{
    {AugmentationKind::Jpeg, "jpeg"},
    {AugmentationKind::Brightness, "brightness"},
    {AugmentationKind::CropResize, "crop_resize"},
    {AugmentationKind::Contrast, "contrast"},
    {AugmentationKind::Gamma, "gamma"},
    {AugmentationKind::Hue, "hue"},
    {AugmentationKind::Saturation, "saturation"},
    {AugmentationKind::Sharpness, "sharpness"},
    {AugmentationKind::Downscale, "downscale"},
    {AugmentationKind::RotateTranslate, "rotate_translate"},
    {AugmentationKind::GaussianBlur, "gaussian_blur"},
    {AugmentationKind::LogCorrection, "log_correction"},
    {AugmentationKind::SigmoidCorrection, "sigmoid_correction"},
}};

constexpr int kMinGeometricSide = 32;

template <typename Fn>
Raster map_values(const Raster& x, Fn&& fn)
{
    Raster out = x;
    for (double& v : out.data()) v = fn(v);
    return out;
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v)
{
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    v = mx;
    s = mx > 0.0 ? delta / mx : 0.0;
    if (delta <= 0.0) {
        h = 0.0;
        return;
    }
    if (mx == r) {
        h = (g - b) / delta;
    } else if (mx == g) {
        h = 2.0 + (b - r) / delta;
    } else {
        h = 4.0 + (r - g) / delta;
    }
    h /= 6.0;
    h -= std::floor(h);
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b)
{
    const double scaled = h * 6.0;
    const int sector = static_cast<int>(std::floor(scaled)) % 6;
    const double f = scaled - std::floor(scaled);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
    }
}

Raster shift_hue(const Raster& x, double shift)
{
    Raster out = x;
    const auto n = x.plane_size();
    auto r = out.plane(0);
    auto g = out.plane(1);
    auto b = out.plane(2);
    for (std::size_t i = 0; i < n; ++i) {
        double h = 0.0, s = 0.0, v = 0.0;
        rgb_to_hsv(r[i], g[i], b[i], h, s, v);
        h += shift;
        h -= std::floor(h);
        hsv_to_rgb(h, s, v, r[i], g[i], b[i]);
    }
    return out;
}

Raster adjust_contrast(const Raster& x, double factor)
{
    const auto gray = luma(x);
    double mean = 0.0;
    for (double v : gray) mean += v;
    mean /= static_cast<double>(gray.size());
    // factor·g + (1 − factor)·mean is exactly g at factor 1
    return map_values(x, [&](double v) { return factor * v + (1.0 - factor) * mean; });
}

Raster adjust_saturation(const Raster& x, double factor)
{
    const auto gray = luma(x);
    Raster out = x;
    for (int c = 0; c < Raster::kChannels; ++c) {
        auto plane = out.plane(c);
        for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = factor * plane[i] + (1.0 - factor) * gray[i];
    }
    return out;
}

// Smooths interior pixels with [[1,1,1],[1,5,1],[1,1,1]]/13 and blends; border
// pixels are left as they are.
Raster adjust_sharpness(const Raster& x, double factor)
{
    Raster out = x;
    const int h = x.height();
    const int w = x.width();
    for (int c = 0; c < Raster::kChannels; ++c) {
        for (int y = 1; y + 1 < h; ++y) {
            for (int xx = 1; xx + 1 < w; ++xx) {
                double acc = 4.0 * x.at(c, y, xx);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) acc += x.at(c, y + dy, xx + dx);
                }
                const double smooth = acc / 13.0;
                out.at(c, y, xx) = (1.0 - factor) * smooth + factor * x.at(c, y, xx);
            }
        }
    }
    return out;
}

int reflect(int i, int n)
{
    if (n == 1) return 0;
    if (i < 0) return -i;
    if (i >= n) return 2 * (n - 1) - i;
    return i;
}

Raster gaussian_blur3(const Raster& x, double sigma)
{
    const double side = std::exp(-1.0 / (2.0 * sigma * sigma));
    const double norm = 1.0 + 2.0 * side;
    const std::array<double, 3> k{side / norm, 1.0 / norm, side / norm};
    const int h = x.height();
    const int w = x.width();
    Raster tmp(h, w);
    for (int c = 0; c < Raster::kChannels; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int xx = 0; xx < w; ++xx) {
                tmp.at(c, y, xx) = k[0] * x.at(c, y, reflect(xx - 1, w)) + k[1] * x.at(c, y, xx) +
                                   k[2] * x.at(c, y, reflect(xx + 1, w));
            }
        }
    }
    Raster out(h, w);
    for (int c = 0; c < Raster::kChannels; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int xx = 0; xx < w; ++xx) {
                out.at(c, y, xx) = k[0] * tmp.at(c, reflect(y - 1, h), xx) + k[1] * tmp.at(c, y, xx) +
                                   k[2] * tmp.at(c, reflect(y + 1, h), xx);
            }
        }
    }
    return out;
}

Raster crop(const Raster& x, int border)
{
    Raster out(x.height() - 2 * border, x.width() - 2 * border);
    for (int c = 0; c < Raster::kChannels; ++c) {
        for (int y = 0; y < out.height(); ++y) {
            for (int xx = 0; xx < out.width(); ++xx) out.at(c, y, xx) = x.at(c, y + border, xx + border);
        }
    }
    return out;
}

Image crop_resize(const Image& x, int upscale, int border, Interpolation interp)
{
    const int hu = x.height() * upscale;
    const int wu = x.width() * upscale;
    if (2 * border >= std::min(hu, wu)) {
        throw Error(ErrorKind::InvalidSpec, "crop_resize: crop removes the whole image");
    }
    // Nearest on both legs returns the input unchanged (the shift is a quarter pixel).
    const Raster up = resize(x.raster(), hu, wu, Interpolation::Bilinear);
    return Image::clamped(resize(crop(up, border), x.height(), x.width(), interp));
}

struct InverseRotation {
    double cos_t;
    double sin_t;
    double cy;
    double cx;

    InverseRotation(double degrees, double center_y, double center_x)
        : cos_t(std::cos(degrees * std::numbers::pi / 180.0)),
          sin_t(std::sin(degrees * std::numbers::pi / 180.0)), cy(center_y), cx(center_x)
    {
    }

    // Source position of output pixel (y, x) for a counter-clockwise rotation
    // in screen coordinates (y pointing down).
    void source(double y, double x, double& sy, double& sx) const
    {
        const double dy = y - cy;
        const double dx = x - cx;
        sx = cx + cos_t * dx - sin_t * dy;
        sy = cy + sin_t * dx + cos_t * dy;
    }
};

void require_geometric_size(const Image& x, std::string_view what)
{
    if (x.height() < kMinGeometricSide || x.width() < kMinGeometricSide) {
        throw Error(ErrorKind::InvalidSpec,
                    fmt::format("{} needs images of at least {} px per side", what, kMinGeometricSide));
    }
}

}  // namespace

std::string_view to_string(AugmentationKind kind) noexcept
{
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

AugmentationKind parse_augmentation_kind(std::string_view name)
{
    for (const auto& [k, n] : kKindNames) {
        if (n == name) return k;
    }
    if (name == "rotate" || name == "rotation") return AugmentationKind::RotateTranslate;
    throw Error(ErrorKind::InvalidSpec, fmt::format("unknown augmentation kind '{}'", name));
}

AugmentationSpec AugmentationSpec::defaults(AugmentationKind kind)
{
    AugmentationSpec s;
    s.kind = kind;
    switch (kind) {
    case AugmentationKind::Jpeg: s.amount = 70.0; break;
    case AugmentationKind::Brightness: s.amount = 1.02; break;
    case AugmentationKind::CropResize: s.amount = 1.0; s.upscale = 4; break;
    case AugmentationKind::Contrast: s.amount = 1.05; break;
    case AugmentationKind::Gamma: s.amount = 1.02; break;
    case AugmentationKind::Hue: s.amount = 0.01; break;
    case AugmentationKind::Saturation: s.amount = 1.1; break;
    case AugmentationKind::Sharpness: s.amount = 1.2; break;
    case AugmentationKind::Downscale: s.amount = 0.9; break;
    case AugmentationKind::RotateTranslate: s.amount = 2.0; s.upscale = 4; break;
    case AugmentationKind::GaussianBlur: s.amount = 2.0; break;
    case AugmentationKind::LogCorrection: s.amount = 1.0; s.gain = 1.05; break;
    case AugmentationKind::SigmoidCorrection: s.amount = 1.0; s.gain = 5.0; s.cutoff = 0.5; break;
    }
    return s;
}

double AugmentationSpec::identity_value() const
{
    switch (kind) {
    case AugmentationKind::Jpeg: return 100.0;
    case AugmentationKind::Brightness:
    case AugmentationKind::Contrast:
    case AugmentationKind::Gamma:
    case AugmentationKind::Saturation:
    case AugmentationKind::Sharpness:
    case AugmentationKind::Downscale: return 1.0;
    case AugmentationKind::CropResize:
    case AugmentationKind::Hue:
    case AugmentationKind::RotateTranslate:
    case AugmentationKind::GaussianBlur:
    case AugmentationKind::LogCorrection:
    case AugmentationKind::SigmoidCorrection: return 0.0;
    }
    return 0.0;
}

AugmentationSpec AugmentationSpec::at_identity() const
{
    AugmentationSpec s = *this;
    s.amount = identity_value();
    return s;
}

std::string AugmentationSpec::label() const
{
    switch (kind) {
    case AugmentationKind::CropResize:
    case AugmentationKind::Downscale: return fmt::format("{}@{}", to_string(kind), to_string(interp));
    case AugmentationKind::RotateTranslate: return fmt::format("rotate@({:g},{:g})", center.x, center.y);
    default: return std::string(to_string(kind));
    }
}

void AugmentationSpec::validate() const
{
    const auto fail = [&](std::string_view why) {
        throw Error(ErrorKind::InvalidSpec, fmt::format("{}: {} (amount {:g})", label(), why, amount));
    };
    if (!std::isfinite(amount) || !std::isfinite(gain) || !std::isfinite(cutoff)) fail("non-finite parameter");
    switch (kind) {
    case AugmentationKind::Jpeg:
        if (amount < 1.0 || amount > 100.0 || amount != std::floor(amount)) fail("quality must be an integer in [1, 100]");
        break;
    case AugmentationKind::Brightness:
    case AugmentationKind::Contrast:
    case AugmentationKind::Saturation:
    case AugmentationKind::Sharpness:
        if (amount < 0.0) fail("factor must be non-negative");
        break;
    case AugmentationKind::Gamma:
        if (amount <= 0.0) fail("gamma must be positive");
        break;
    case AugmentationKind::Hue:
        if (amount < -0.5 || amount > 0.5) fail("hue shift must be in [-0.5, 0.5]");
        break;
    case AugmentationKind::CropResize:
        if (amount < 0.0 || amount != std::floor(amount)) fail("crop must be a non-negative integer");
        if (upscale < 1) fail("upscale must be >= 1");
        break;
    case AugmentationKind::Downscale:
        if (amount <= 0.0 || amount > 1.0) fail("ratio must be in (0, 1]");
        break;
    case AugmentationKind::RotateTranslate:
        if (std::abs(amount) >= 45.0) fail("rotation must be below 45 degrees");
        if (upscale < 1) fail("upscale must be >= 1");
        if (border_crop && *border_crop < 0) fail("border crop must be non-negative");
        break;
    case AugmentationKind::GaussianBlur:
        if (amount < 0.0) fail("sigma must be non-negative");
        break;
    case AugmentationKind::LogCorrection:
        if (amount < 0.0 || amount > 1.0) fail("strength must be in [0, 1]");
        if (gain <= 0.0) fail("gain must be positive");
        break;
    case AugmentationKind::SigmoidCorrection:
        if (amount < 0.0 || amount > 1.0) fail("strength must be in [0, 1]");
        break;
    }
}

std::vector<AugmentationSpec> default_augmentation_specs()
{
    using K = AugmentationKind;
    constexpr std::array<Interpolation, 3> interps{Interpolation::Bilinear, Interpolation::Nearest,
                                                   Interpolation::Bicubic};
    std::vector<AugmentationSpec> specs;
    specs.push_back(AugmentationSpec::defaults(K::Jpeg));
    specs.push_back(AugmentationSpec::defaults(K::Brightness));
    for (auto interp : interps) {
        auto s = AugmentationSpec::defaults(K::CropResize);
        s.interp = interp;
        specs.push_back(s);
    }
    for (auto kind : {K::Contrast, K::Gamma, K::Hue, K::Saturation, K::Sharpness}) {
        specs.push_back(AugmentationSpec::defaults(kind));
    }
    for (auto interp : interps) {
        auto s = AugmentationSpec::defaults(K::Downscale);
        s.interp = interp;
        specs.push_back(s);
    }
    for (PixelOffset c : {PixelOffset{0, 0}, PixelOffset{50, 50}, PixelOffset{-50, 50}}) {
        auto s = AugmentationSpec::defaults(K::RotateTranslate);
        s.center = c;
        specs.push_back(s);
    }
    for (auto kind : {K::GaussianBlur, K::LogCorrection, K::SigmoidCorrection}) {
        specs.push_back(AugmentationSpec::defaults(kind));
    }
    return specs;
}

Image apply_augmentation(const Image& x, const AugmentationSpec& spec)
{
    spec.validate();
    const double t = spec.amount;
    const Raster& r = x.raster();
    switch (spec.kind) {
    case AugmentationKind::Jpeg:
        return decode_jpeg(encode_jpeg(x, static_cast<int>(t)));
    case AugmentationKind::Brightness:
        return Image::clamped(map_values(r, [t](double v) { return t * v; }));
    case AugmentationKind::Contrast:
        return Image::clamped(adjust_contrast(r, t));
    case AugmentationKind::Gamma:
        return Image::clamped(map_values(r, [t](double v) { return std::pow(v, t); }));
    case AugmentationKind::Hue:
        if (t == 0.0) return x;
        return Image::clamped(shift_hue(r, t));
    case AugmentationKind::Saturation:
        return Image::clamped(adjust_saturation(r, t));
    case AugmentationKind::Sharpness:
        return Image::clamped(adjust_sharpness(r, t));
    case AugmentationKind::CropResize:
        require_geometric_size(x, "crop_resize");
        if (t == 0.0) return x;
        return crop_resize(x, spec.upscale, static_cast<int>(t), spec.interp);
    case AugmentationKind::Downscale: {
        const int h = std::max(1, static_cast<int>(std::lround(t * x.height())));
        const int w = std::max(1, static_cast<int>(std::lround(t * x.width())));
        return Image::clamped(resize(resize(r, h, w, spec.interp), x.height(), x.width(), spec.interp));
    }
    case AugmentationKind::RotateTranslate:
        return edge_safe_rotate(x, t, spec.center, spec.upscale, spec.border_crop, spec.interp);
    case AugmentationKind::GaussianBlur:
        if (t == 0.0) return x;
        return Image::clamped(gaussian_blur3(r, t));
    case AugmentationKind::LogCorrection: {
        const double gain = spec.gain;
        return Image::clamped(
            map_values(r, [=](double v) { return (1.0 - t) * v + t * std::min(1.0, gain * std::log2(1.0 + v)); }));
    }
    case AugmentationKind::SigmoidCorrection: {
        const double gain = spec.gain;
        const double cutoff = spec.cutoff;
        return Image::clamped(map_values(r, [=](double v) {
            return (1.0 - t) * v + t * (1.0 / (1.0 + std::exp(gain * (cutoff - v))));
        }));
    }
    }
    throw Error(ErrorKind::InvalidSpec, "unhandled augmentation kind");
}

int minimal_rotation_crop(int upscaled_height, int upscaled_width, double degrees, double center_y_up,
                          double center_x_up)
{
    const InverseRotation rot(degrees, center_y_up, center_x_up);
    const double max_y = upscaled_height - 1;
    const double max_x = upscaled_width - 1;
    constexpr double slack = 1e-9;
    const int limit = (std::min(upscaled_height, upscaled_width) + 1) / 2;
    for (int b = 0; b < limit; ++b) {
        const std::array<std::pair<double, double>, 4> corners{{
            {b, b}, {b, max_x - b}, {max_y - b, b}, {max_y - b, max_x - b}}};
        bool inside = true;
        for (const auto& [y, x] : corners) {
            double sy = 0.0, sx = 0.0;
            rot.source(y, x, sy, sx);
            if (sy < -slack || sx < -slack || sy > max_y + slack || sx > max_x + slack) {
                inside = false;
                break;
            }
        }
        if (inside) return b;
    }
    return limit;
}

RotationPreset edge_handling_preset()
{
    return {8, 5.0, 20};
}

RotationPreset table_rotation_preset()
{
    return {4, 2.0, std::nullopt};
}

Image edge_safe_rotate(const Image& x, double degrees, PixelOffset center, int upscale,
                       std::optional<int> border_crop, Interpolation interp, int* used_crop)
{
    if (std::abs(degrees) >= 45.0) {
        throw Error(ErrorKind::InvalidSpec, "edge_safe_rotate: |degrees| must be below 45");
    }
    if (upscale < 1) {
        throw Error(ErrorKind::InvalidSpec, "edge_safe_rotate: upscale must be >= 1");
    }
    require_geometric_size(x, "edge_safe_rotate");
    const int hu = x.height() * upscale;
    const int wu = x.width() * upscale;
    const double cy = 0.5 * (hu - 1) + center.y * upscale;
    const double cx = 0.5 * (wu - 1) + center.x * upscale;

    const int minimal = minimal_rotation_crop(hu, wu, degrees, cy, cx);
    const int border = std::max(border_crop.value_or(0), minimal);
    if (2 * border >= std::min(hu, wu)) {
        throw Error(ErrorKind::InvalidSpec,
                    fmt::format("edge_safe_rotate: crop of {} px would remove the entire {}x{} image", border, hu, wu));
    }
    if (used_crop) *used_crop = border;

    const Raster up = resize(x.raster(), hu, wu, interp);
    const InverseRotation rot(degrees, cy, cx);
    Raster rotated(hu - 2 * border, wu - 2 * border);
    for (int y = 0; y < rotated.height(); ++y) {
        for (int xx = 0; xx < rotated.width(); ++xx) {
            double sy = 0.0, sx = 0.0;
            rot.source(y + border, xx + border, sy, sx);
            for (int c = 0; c < Raster::kChannels; ++c) {
                rotated.at(c, y, xx) = sample(up, c, sy, sx, interp, 0.0);
            }
        }
    }
    return Image::clamped(resize(rotated, x.height(), x.width(), interp));
}

}  // namespace nframe
