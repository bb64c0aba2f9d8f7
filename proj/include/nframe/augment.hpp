#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nframe/image.hpp"

namespace nframe {

enum class AugmentationKind {
    Jpeg,
    Brightness,
    CropResize,
    Contrast,
    Gamma,
    Hue,
    Saturation,
    Sharpness,
    Downscale,
    RotateTranslate,
    GaussianBlur,
    LogCorrection,
    SigmoidCorrection,
};

std::string_view to_string(AugmentationKind kind) noexcept;
AugmentationKind parse_augmentation_kind(std::string_view name);

// Offset from the image centre in original-resolution pixels (x right, y down).
struct PixelOffset {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const PixelOffset&, const PixelOffset&) = default;
};

// One augmentation f(t, x). `amount` is the kind's primary parameter t:
//
//   jpeg               quality in [1, 100]            identity 100 (nominal only)
//   brightness         factor >= 0                    identity 1
//   crop_resize        border pixels removed at the upscaled size, >= 0      identity 0
//   contrast           factor >= 0                    identity 1
//   gamma              exponent > 0                   identity 1
//   hue                shift in [-0.5, 0.5] turns     identity 0
//   saturation         factor >= 0                    identity 1
//   sharpness          factor >= 0                    identity 1
//   downscale          ratio in (0, 1]                identity 1
//   rotate_translate   degrees, |t| < 45              identity 0
//   gaussian_blur      sigma >= 0 (3x3 kernel)        identity 0
//   log_correction     blend strength in [0, 1]       identity 0
//   sigmoid_correction blend strength in [0, 1]       identity 0
//
// Log and sigmoid corrections have no parameter value at which they reduce to
// the identity, so they are parametrised as (1 - t)·x + t·correct(x) with the
// correction's own gain/cutoff held fixed.
struct AugmentationSpec {
    AugmentationKind kind = AugmentationKind::Brightness;
    double amount = 1.0;
    // crop_resize: the resize back only (the upscale is always bilinear).
    Interpolation interp = Interpolation::Bilinear;
    double gain = 1.0;
    double cutoff = 0.5;
    PixelOffset center{};
    int upscale = 4;
    // Rotation only. Crop at the upscaled size; raised to the smallest crop that
    // leaves no fill pixels when absent or too small.
    std::optional<int> border_crop;

    // Defaults from the standard augmentation table.
    static AugmentationSpec defaults(AugmentationKind kind);

    double identity_value() const;
    AugmentationSpec at_identity() const;
    std::string label() const;
    // Throws Error(InvalidSpec) on out-of-range parameters.
    void validate() const;
};

// The 19-direction default frame: jpeg, brightness, crop_resize x3 interps,
// contrast, gamma, hue, saturation, sharpness, downscale x3 interps, rotation at
// centres (0,0), (50,50), (-50,50), gaussian blur, log, sigmoid.
std::vector<AugmentationSpec> default_augmentation_specs();

// Returns f(spec.amount, x), clamped to [0, 1].
Image apply_augmentation(const Image& x, const AugmentationSpec& spec);

// Smallest border (in upscaled pixels) such that rotating an upscaled image of
// the given size by `degrees` about `center_up` (upscaled pixel coordinates)
// and cropping that border leaves no pixels sampled from outside the source.
int minimal_rotation_crop(int upscaled_height, int upscaled_width, double degrees, double center_y_up,
                          double center_x_up);

struct RotationPreset {
    int upscale;
    double degrees;
    std::optional<int> border_crop;
};

// x8 upscale, 5 degrees, 20 px border.
RotationPreset edge_handling_preset();
// x4 upscale, 2 degrees, crop derived from geometry.
RotationPreset table_rotation_preset();

// Upscale, rotate counter-clockwise by `degrees` about `center`, crop the border,
// resize back. The crop actually used is max(border_crop, minimal crop) so no
// fill pixels survive; pass it back via `used_crop` if needed.
Image edge_safe_rotate(const Image& x, double degrees, PixelOffset center, int upscale,
                       std::optional<int> border_crop, Interpolation interp, int* used_crop = nullptr);

}  // namespace nframe
