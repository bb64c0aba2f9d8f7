#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nframe/augment.hpp"
#include "nframe/image.hpp"
#include "nframe/linalg.hpp"

namespace nframe {

enum class FrameKind { Augmentation, Noise, RotatedAugmentation, External };

std::string_view to_string(FrameKind kind) noexcept;
FrameKind parse_frame_kind(std::string_view name);

// A base image plus k perturbed inputs. Tangent j is (perturbed_j − base) / step_j.
// Perturbed inputs are rasters because noise and rotated frames leave [0, 1].
struct Frame {
    FrameKind kind = FrameKind::Augmentation;
    Image base;
    std::vector<Raster> perturbed;
    std::vector<std::string> labels;
    std::vector<double> steps;
    // Per-vector norm used by noise frames (mean reference tangent norm); 0 otherwise.
    double matched_norm = 0.0;
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return perturbed.size(); }

    // n×k, n = 3·H·W in channel-major order.
    linalg::Matrix tangent_matrix() const;

    // Throws Error(Config) when k < 2, labels repeat, steps are not positive,
    // or a perturbed input has a different shape than the base.
    void validate() const;
};

Frame build_augmentation_frame(const Image& x, const std::vector<AugmentationSpec>& specs = default_augmentation_specs());

// k Gaussian directions, each scaled to the mean tangent norm of `reference`.
Frame build_noise_frame(const Image& x, std::size_t k, std::uint64_t seed, const Frame& reference);

// The reference tangents mapped by a seeded random subspace isometry.
Frame build_rotated_frame(const Frame& reference, std::uint64_t seed);

// Every PNG/JPEG in `dir`, in filename order, as one perturbation each.
Frame load_external_frame(const Image& x, const std::filesystem::path& dir);

struct RotationSpan {
    linalg::SingularSpectrum spectrum;
    int border_crop = 0;
    // All tangents vanish: the image is fixed by every rotation.
    bool degenerate = false;
};

// Singular spectrum of the rotation tangents taken about each centre. Every
// tangent is edge_safe_rotate(x, degrees) − edge_safe_rotate(x, 0) under one
// shared crop, so the columns differ only by the rotation they encode.
RotationSpan rotation_span_spectrum(const Image& x, const std::vector<PixelOffset>& centers, double degrees,
                                    int upscale, Interpolation interp = Interpolation::Bilinear);

// The first `count` (<= 9) of a fixed set of centre offsets: the image centre,
// the four diagonals at `radius`, then the axes at 1.2·radius.
std::vector<PixelOffset> spread_rotation_centers(std::size_t count, double radius = 50.0);

// Smooth synthetic test pattern: a few anisotropic coloured Gaussian blobs on a
// gray background, with no rotational symmetry.
Image gaussian_blob_image(int height, int width);

}  // namespace nframe
