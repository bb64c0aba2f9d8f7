#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace nframe {

enum class Interpolation { Bilinear, Nearest, Bicubic };

std::string_view to_string(Interpolation mode) noexcept;
Interpolation parse_interpolation(std::string_view name);

// Planar (channel-major) RGB buffer with no range constraint. Used for model
// inputs that leave the unit cube (noise and rotated frames) and for
// intermediate resampling results.
class Raster {
public:
    static constexpr int kChannels = 3;

    Raster() = default;
    Raster(int height, int width, double fill = 0.0);
    Raster(int height, int width, std::vector<double> planar);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height_) * width_; }

    double at(int c, int y, int x) const noexcept { return data_[index(c, y, x)]; }
    double& at(int c, int y, int x) noexcept { return data_[index(c, y, x)]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    std::span<const double> plane(int c) const noexcept { return {data_.data() + c * plane_size(), plane_size()}; }
    std::span<double> plane(int c) noexcept { return {data_.data() + c * plane_size(), plane_size()}; }

    // Flattened C×H×W view; this is also the order models receive.
    Eigen::Map<const Eigen::VectorXd> flat() const noexcept
    {
        return {data_.data(), static_cast<Eigen::Index>(data_.size())};
    }

    bool same_shape(const Raster& other) const noexcept
    {
        return height_ == other.height_ && width_ == other.width_;
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    std::size_t index(int c, int y, int x) const noexcept
    {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

// RGB image with every value in [0, 1].
class Image {
public:
    Image() = default;
    Image(int height, int width, double fill = 0.0);

    // Throws Error(InvalidInput) on non-positive dims or values outside [0, 1].
    static Image from_raster(Raster raster);
    static Image clamped(Raster raster);

    int height() const noexcept { return raster_.height(); }
    int width() const noexcept { return raster_.width(); }
    const Raster& raster() const noexcept { return raster_; }
    double at(int c, int y, int x) const noexcept { return raster_.at(c, y, x); }
    std::span<const double> data() const noexcept { return raster_.data(); }
    auto flat() const noexcept { return raster_.flat(); }
    bool same_shape(const Image& other) const noexcept { return raster_.same_shape(other.raster_); }

    friend bool operator==(const Image&, const Image&) = default;

private:
    explicit Image(Raster raster) : raster_(std::move(raster)) {}
    Raster raster_;
};

// Separable resampling with align-corners sample positions
// (src = dst·(in−1)/(out−1)), so bilinear reproduces affine ramps exactly.
// Same-size requests return a bit-identical copy.
Raster resize(const Raster& x, int height, int width, Interpolation mode);
Image resize(const Image& x, int height, int width, Interpolation mode);

// Samples a single channel at a fractional position; returns `outside` when
// the position falls off the raster.
double sample(const Raster& x, int channel, double y, double xcoord, Interpolation mode, double outside);

// ITU-R 601 luma, 0.299 R + 0.587 G + 0.114 B, per pixel.
std::vector<double> luma(const Raster& x);

}  // namespace nframe
