#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace nframe {

struct FixtureOptions {
    // Drop the ReLU and swap max pooling for average pooling so the whole graph
    // is affine in its input.
    bool linear = false;
    // Multiplies every weight (not biases); 0 yields a degenerate checkpoint.
    double weight_scale = 1.0;
    std::optional<double> top1_accuracy;
    std::string name = "fixture";
};

struct FixturePaths {
    std::filesystem::path graph;
    std::filesystem::path manifest;
};

// Writes a small conv -> relu -> pool -> dense classifier on 64x64x3 inputs as
// model.onnx + manifest.json in `out_dir`. The graph starts with the ImageNet
// (x - mean) / std stage and exposes three taps:
//   1 conv1.relu  [8, 64, 64]   2 pool1  [8, 32, 32]   3 fc  [32]
// Weights are He-normal from `seed`; output bytes depend only on (seed, options).
FixturePaths make_fixture_bundle(const std::filesystem::path& out_dir, std::uint64_t seed,
                                 const FixtureOptions& options = {});

}  // namespace nframe
