#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nframe/augment.hpp"
#include "nframe/bundle.hpp"
#include "nframe/frame.hpp"
#include "nframe/linalg.hpp"

namespace nframe {

struct ImageEntry {
    std::string id;
    Image image;
};

// Loads every PNG/JPEG in `dir` (filename order), ids are file stems. Images
// are resized to `input` when given.
std::vector<ImageEntry> load_image_set(const std::filesystem::path& dir, const std::optional<InputSpec>& input = {});

struct FrameConfig {
    FrameKind kind = FrameKind::Augmentation;
    // Directions of augmentation frames; also the reference for noise and
    // rotated frames.
    std::vector<AugmentationSpec> augmentations = default_augmentation_specs();
    // Noise frame size; 0 means "same as the augmentation frame".
    std::size_t noise_k = 0;
    // External frames are read from `external_dir / image_id`.
    std::filesystem::path external_dir;
    // Forward-pass chunk size (0 = all k + 1 inputs in one batch).
    std::size_t max_batch = 0;
};

// Builds the configured frame for one image. Stochastic kinds draw from
// streams derived from (seed, kind, image_index).
Frame build_frame(const ImageEntry& entry, std::size_t image_index, const FrameConfig& config, std::uint64_t seed);

struct TapCurvePoint {
    int tap_id = 0;
    std::string name;
    // Empty when fewer than one (mean) or two (interval) images gave a value.
    std::optional<double> mean;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    std::size_t n = 0;
    // Images whose neural frame vanished at this tap.
    std::size_t degenerate = 0;
    // Aligned with StableRankCurve::image_ids; empty where degenerate.
    std::vector<std::optional<double>> per_image;
};

struct SkippedImage {
    std::string image_id;
    std::string reason;
};

struct StableRankCurve {
    std::string model;
    FrameKind frame = FrameKind::Augmentation;
    std::size_t k = 0;
    std::vector<std::string> image_ids;  // successful images, input order
    std::vector<TapCurvePoint> taps;     // tap 0 first
    std::vector<SkippedImage> skipped;
    std::vector<std::string> warnings;
    double matched_noise_norm = 0.0;     // mean over images, noise frames only
};

// One curve per requested kind over the same images; augmentation frames are
// built once per image and reused as the reference for noise/rotated frames.
// Per-image work runs on `jobs` threads; results do not depend on `jobs`.
std::vector<StableRankCurve> stable_rank_curves(const ModelBundle& bundle, const std::vector<ImageEntry>& images,
                                                const std::vector<FrameKind>& kinds, const FrameConfig& config,
                                                std::uint64_t seed, int jobs = 1);

StableRankCurve stable_rank_curve(const ModelBundle& bundle, const std::vector<ImageEntry>& images,
                                  const FrameConfig& config, std::uint64_t seed, int jobs = 1);

struct CkaReport {
    std::string model_a;
    std::string model_b;
    std::vector<int> taps_a;
    std::vector<int> taps_b;
    std::vector<std::string> names_a;
    std::vector<std::string> names_b;
    linalg::Matrix mean;                  // taps_a × taps_b, NaN where no image counted
    Eigen::MatrixXi counts;               // images contributing to each cell
    std::size_t images = 0;
    std::size_t degenerate_pairs = 0;     // (image, tap pair) cells skipped
    std::vector<SkippedImage> skipped;
};

// Mean over images of linear CKA between the two models' neural frames (k × n_i
// row form) for every tap pair, taps 0..T of each model.
CkaReport frame_cka(const ModelBundle& bundle_a, const ModelBundle& bundle_b, const std::vector<ImageEntry>& images,
                    const FrameConfig& config, std::uint64_t seed, int jobs = 1);

// Seeded order over config.augmentations; entry k of the result uses the first
// k directions of that order (kept in their original relative order so the full
// prefix reproduces the unpermuted frame).
std::vector<std::size_t> augmentation_order(std::size_t count, std::uint64_t seed);

std::vector<StableRankCurve> vary_k_sweep(const ModelBundle& bundle, const std::vector<ImageEntry>& images,
                                          const std::vector<std::size_t>& k_values, const FrameConfig& config,
                                          std::uint64_t seed, int jobs = 1);

struct TapCorrelation {
    int tap_id = 0;
    std::string name;
    std::optional<double> pearson;
    std::optional<double> spearman;
    std::size_t models = 0;
};

struct CorrelationReport {
    std::vector<TapCorrelation> taps;
    std::vector<std::string> models;
    std::vector<std::string> warnings;
};

// Correlation across models between per-tap mean stable rank and top-1
// accuracy. Models without an accuracy are excluded with a warning; at least
// three must remain.
CorrelationReport accuracy_correlation(const std::vector<StableRankCurve>& curves,
                                       const std::vector<std::optional<double>>& accuracies);

// One curve per checkpoint with identical images, frames and seeds.
std::vector<StableRankCurve> checkpoint_series(const std::vector<const ModelBundle*>& bundles,
                                               const std::vector<ImageEntry>& images, const FrameConfig& config,
                                               std::uint64_t seed, int jobs = 1);

}  // namespace nframe
