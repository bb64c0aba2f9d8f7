#include "nframe/frame.hpp"

#include "nframe/error.hpp"
#include "nframe/image_io.hpp"
#include "nframe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace nframe {

std::string_view to_string(FrameKind kind) noexcept
{
    switch (kind) {
    case FrameKind::Augmentation: return "augmentation";
    case FrameKind::Noise: return "noise";
    case FrameKind::RotatedAugmentation: return "rotated";
    case FrameKind::External: return "external";
    }
    return "augmentation";
}

FrameKind parse_frame_kind(std::string_view name)
{
    if (name == "augmentation") return FrameKind::Augmentation;
    if (name == "noise") return FrameKind::Noise;
    if (name == "rotated" || name == "rotated_augmentation") return FrameKind::RotatedAugmentation;
    if (name == "external" || name == "diffusion") return FrameKind::External;
    throw Error(ErrorKind::Config, fmt::format("unknown frame kind '{}'", name));
}

linalg::Matrix Frame::tangent_matrix() const
{
    const auto n = static_cast<Eigen::Index>(base.raster().size());
    linalg::Matrix v(n, static_cast<Eigen::Index>(perturbed.size()));
    const auto b = base.flat();
    for (std::size_t j = 0; j < perturbed.size(); ++j) {
        v.col(static_cast<Eigen::Index>(j)) = (perturbed[j].flat() - b) / steps[j];
    }
    return v;
}

void Frame::validate() const
{
    if (perturbed.size() < 2) {
        throw Error(ErrorKind::Config, fmt::format("frame needs k >= 2 directions, got {}", perturbed.size()));
    }
    if (labels.size() != perturbed.size() || steps.size() != perturbed.size()) {
        throw Error(ErrorKind::Config, "frame labels/steps do not match the number of perturbations");
    }
    std::set<std::string> seen;
    for (const auto& label : labels) {
        if (!seen.insert(label).second) {
            throw Error(ErrorKind::Config, fmt::format("duplicate frame label '{}'", label));
        }
    }
    for (std::size_t j = 0; j < perturbed.size(); ++j) {
        if (!(steps[j] > 0.0)) {
            throw Error(ErrorKind::Config, fmt::format("frame step for '{}' must be positive", labels[j]));
        }
        if (!perturbed[j].same_shape(base.raster())) {
            throw Error(ErrorKind::Config, fmt::format("perturbation '{}' has a different shape than the base", labels[j]));
        }
    }
}

namespace {

void note_zero_tangents(Frame& frame)
{
    const auto b = frame.base.flat();
    for (std::size_t j = 0; j < frame.perturbed.size(); ++j) {
        if ((frame.perturbed[j].flat() - b).cwiseAbs().maxCoeff() == 0.0) {
            frame.warnings.push_back(fmt::format("zero tangent vector for '{}'", frame.labels[j]));
        }
    }
}

Raster offset_raster(const Image& base, const linalg::Vector& displacement)
{
    Raster out = base.raster();
    auto data = out.data();
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += displacement(static_cast<Eigen::Index>(i));
    return out;
}

}  // namespace

Frame build_augmentation_frame(const Image& x, const std::vector<AugmentationSpec>& specs)
{
    std::set<std::string> seen;
    for (const auto& spec : specs) {
        spec.validate();
        if (!seen.insert(spec.label()).second) {
            throw Error(ErrorKind::Config, fmt::format("duplicate augmentation label '{}'", spec.label()));
        }
    }
    if (specs.size() < 2) {
        throw Error(ErrorKind::Config, fmt::format("augmentation frame needs at least 2 augmentations, got {}", specs.size()));
    }

    // Rotations without an explicit crop share the largest minimal crop so their
    // tangents do not differ by a zoom.
    int shared_crop = 0;
    for (const auto& spec : specs) {
        if (spec.kind != AugmentationKind::RotateTranslate || spec.border_crop) continue;
        const int hu = x.height() * spec.upscale;
        const int wu = x.width() * spec.upscale;
        shared_crop = std::max(shared_crop, minimal_rotation_crop(hu, wu, spec.amount, 0.5 * (hu - 1) + spec.center.y * spec.upscale,
                                                                  0.5 * (wu - 1) + spec.center.x * spec.upscale));
    }

    Frame frame;
    frame.kind = FrameKind::Augmentation;
    frame.base = x;
    for (auto spec : specs) {
        if (spec.kind == AugmentationKind::RotateTranslate && !spec.border_crop) spec.border_crop = shared_crop;
        frame.perturbed.push_back(apply_augmentation(x, spec).raster());
        frame.labels.push_back(spec.label());
        frame.steps.push_back(1.0);
    }
    note_zero_tangents(frame);
    frame.validate();
    return frame;
}

Frame build_noise_frame(const Image& x, std::size_t k, std::uint64_t seed, const Frame& reference)
{
    if (k < 2) {
        throw Error(ErrorKind::Config, "noise frame needs k >= 2");
    }
    if (!reference.base.same_shape(x)) {
        throw Error(ErrorKind::Config, "noise frame reference was built on an image of a different size");
    }
    const linalg::Matrix ref = reference.tangent_matrix();
    double mean_norm = 0.0;
    for (Eigen::Index j = 0; j < ref.cols(); ++j) mean_norm += ref.col(j).norm();
    mean_norm /= static_cast<double>(ref.cols());
    if (!(mean_norm > 0.0)) {
        throw Error(ErrorKind::Degenerate, "noise frame reference has zero mean tangent norm");
    }

    const auto n = static_cast<Eigen::Index>(x.raster().size());
    GaussianStream stream(derive_seed(seed, "noise_frame"));
    Frame frame;
    frame.kind = FrameKind::Noise;
    frame.base = x;
    frame.matched_norm = mean_norm;
    linalg::Vector direction(n);
    for (std::size_t j = 0; j < k; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) direction(i) = stream.next();
        direction *= mean_norm / direction.norm();
        frame.perturbed.push_back(offset_raster(x, direction));
        frame.labels.push_back(fmt::format("noise_{:03d}", j));
        frame.steps.push_back(1.0);
    }
    frame.validate();
    return frame;
}

Frame build_rotated_frame(const Frame& reference, std::uint64_t seed)
{
    const linalg::Matrix v = reference.tangent_matrix();
    if (v.cwiseAbs().maxCoeff() == 0.0) {
        throw Error(ErrorKind::Degenerate, "rotated frame reference has only zero tangents");
    }
    const linalg::RandomSubspaceIsometry isometry(v.rows(), v.cols(), seed);
    const auto mapped = isometry.map_frame(v);

    Frame frame;
    frame.kind = FrameKind::RotatedAugmentation;
    frame.base = reference.base;
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        frame.perturbed.push_back(offset_raster(reference.base, mapped.vectors.col(j)));
        frame.labels.push_back("rotated:" + reference.labels[static_cast<std::size_t>(j)]);
        frame.steps.push_back(1.0);
    }
    if (mapped.rank_deficient) {
        frame.warnings.push_back(fmt::format("reference frame has rank {} < k = {}; isometry padded with the "
                                             "orthogonal complement", mapped.input_rank, v.cols()));
    }
    frame.validate();
    return frame;
}

Frame load_external_frame(const Image& x, const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir)) {
        throw Error(ErrorKind::Ingest, "external frame directory not found: " + dir.string());
    }
    const auto files = list_image_files(dir);
    if (files.size() < 2) {
        throw Error(ErrorKind::Ingest,
                    fmt::format("external frame in {} needs at least 2 images, found {}", dir.string(), files.size()));
    }
    Frame frame;
    frame.kind = FrameKind::External;
    frame.base = x;
    for (const auto& file : files) {
        Image img = read_image(file);
        if (!img.same_shape(x)) {
            throw Error(ErrorKind::Ingest, fmt::format("{} is {}x{}, expected {}x{}", file.string(), img.width(),
                                                       img.height(), x.width(), x.height()));
        }
        frame.perturbed.push_back(img.raster());
        frame.labels.push_back(file.filename().string());
        frame.steps.push_back(1.0);
    }
    note_zero_tangents(frame);
    frame.validate();
    return frame;
}

RotationSpan rotation_span_spectrum(const Image& x, const std::vector<PixelOffset>& centers, double degrees,
                                    int upscale, Interpolation interp)
{
    if (centers.empty()) {
        throw Error(ErrorKind::InvalidSpec, "rotation_span_spectrum: no centres given");
    }
    const int hu = x.height() * upscale;
    const int wu = x.width() * upscale;
    int crop = 0;
    for (const auto& c : centers) {
        crop = std::max(crop, minimal_rotation_crop(hu, wu, degrees, 0.5 * (hu - 1) + c.y * upscale,
                                                    0.5 * (wu - 1) + c.x * upscale));
    }
    const Image still = edge_safe_rotate(x, 0.0, {}, upscale, crop, interp);
    const auto b = still.flat();

    linalg::Matrix tangents(b.size(), static_cast<Eigen::Index>(centers.size()));
    for (std::size_t j = 0; j < centers.size(); ++j) {
        const Image rotated = edge_safe_rotate(x, degrees, centers[j], upscale, crop, interp);
        tangents.col(static_cast<Eigen::Index>(j)) = rotated.flat() - b;
    }
    RotationSpan out;
    out.border_crop = crop;
    out.spectrum = linalg::singular_values(tangents);
    out.degenerate = out.spectrum.all_zero();
    return out;
}

std::vector<PixelOffset> spread_rotation_centers(std::size_t count, double radius)
{
    static constexpr double unit[9][2] = {{0, 0}, {1, 1}, {-1, 1}, {1, -1}, {-1, -1},
                                          {0, -1.2}, {1.2, 0}, {-1.2, 0}, {0, 1.2}};
    if (count == 0 || count > 9) {
        throw Error(ErrorKind::Config, fmt::format("between 1 and 9 rotation centres are available, asked for {}", count));
    }
    std::vector<PixelOffset> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back({unit[i][0] * radius, unit[i][1] * radius});
    return out;
}

Image gaussian_blob_image(int height, int width)
{
    struct Blob {
        double cy, cx;      // fraction of the image size
        double sy, sx;      // fraction of the smaller side
        double angle;       // radians
        double rgb[3];
    };
    static constexpr Blob blobs[] = {
        {0.35, 0.30, 0.16, 0.08, 0.4, {0.45, 0.10, -0.20}},
        {0.62, 0.68, 0.10, 0.20, -0.7, {-0.25, 0.35, 0.15}},
        {0.28, 0.72, 0.07, 0.12, 1.1, {0.10, -0.20, 0.40}},
        {0.75, 0.30, 0.12, 0.06, 0.2, {0.20, 0.25, -0.30}},
    };
    Raster r(height, width, 0.5);
    const double side = std::min(height, width);
    for (int y = 0; y < height; ++y) {
        for (int xx = 0; xx < width; ++xx) {
            for (const auto& blob : blobs) {
                const double dy = (y - blob.cy * (height - 1)) / side;
                const double dx = (xx - blob.cx * (width - 1)) / side;
                const double u = std::cos(blob.angle) * dx + std::sin(blob.angle) * dy;
                const double v = -std::sin(blob.angle) * dx + std::cos(blob.angle) * dy;
                const double g = std::exp(-0.5 * (u * u / (blob.sx * blob.sx) + v * v / (blob.sy * blob.sy)));
                for (int c = 0; c < 3; ++c) r.at(c, y, xx) += blob.rgb[c] * g;
            }
        }
    }
    return Image::clamped(std::move(r));
}

}  // namespace nframe
