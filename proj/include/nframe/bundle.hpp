#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nframe/frame.hpp"
#include "nframe/image.hpp"
#include "nframe/linalg.hpp"
#include "nframe/onnx_graph.hpp"

namespace nframe {

struct InputSpec {
    int height = 0;
    int width = 0;
    int channels = 3;
    std::string layout = "NCHW";
};

// Per-channel constants of the graph's leading (x - mean) / std stage. The
// runtime feeds raw [0, 1] pixels; these are recorded for reference.
struct Normalization {
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<double, 3> std{1.0, 1.0, 1.0};
};

struct TapSpec {
    int tap_id = 0;
    std::string tensor_name;
    std::string display_name;
};

// manifest.json:
//   { "name": str,
//     "input": {"height": int, "width": int, "channels": 3, "layout": "NCHW"},
//     "normalization": {"mean": [3 reals], "std": [3 reals]},
//     "taps": [{"tap_id": int >= 1, "tensor_name": str, "display_name": str}, ...],
//     "top1_accuracy": real in [0, 1]   (optional) }
// Tap 0 is reserved for raw input space and never appears in the file.
struct ModelManifest {
    std::string name;
    InputSpec input;
    Normalization normalization;
    std::vector<TapSpec> taps;
    std::optional<double> top1_accuracy;

    static ModelManifest from_json(const nlohmann::json& j);
    static ModelManifest load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    // Throws Error(Manifest) on schema violations.
    void validate() const;
};

struct ModelBundle {
    onnx_rt::Graph graph;
    ModelManifest manifest;

    std::size_t tap_count() const noexcept { return manifest.taps.size(); }
};

// Loads and cross-checks the graph and manifest: every tap tensor must be a
// graph output and the graph input must be [N, 3, height, width].
ModelBundle load_bundle(const std::filesystem::path& graph_path, const std::filesystem::path& manifest_path);
// `dir`/model.onnx + `dir`/manifest.json
ModelBundle load_bundle(const std::filesystem::path& dir);

// Per input, per manifest tap: the tap tensor of that sample flattened in
// row-major order of its non-batch axes (channel-major for NCHW maps, token-major
// for [N, tokens, features]). Inputs are processed in chunks of `max_batch`
// (0 = all at once).
using TapActivations = std::vector<linalg::Vector>;
std::vector<TapActivations> forward_taps(const ModelBundle& bundle, std::span<const Raster> inputs,
                                         std::size_t max_batch = 0);

struct TapMatrix {
    int tap_id = 0;
    std::string name;
    linalg::Matrix columns;  // n_i × k
};

// Pushforward of a frame through every tap. taps[0] is raw input space.
struct NeuralFrame {
    std::vector<TapMatrix> taps;
    std::vector<std::string> warnings;

    std::size_t frame_size() const noexcept { return taps.empty() ? 0 : static_cast<std::size_t>(taps.front().columns.cols()); }
};

// Column j at tap i is (F_i(perturbed_j) − F_i(base)) / step_j from k + 1
// batched forward passes; tap 0 is exactly frame.tangent_matrix().
NeuralFrame compute_neural_frame(const ModelBundle& bundle, const Frame& frame, std::size_t max_batch = 0);

// Raster at the manifest input size; resizes with bilinear interpolation when needed.
Image fit_to_input(const Image& image, const InputSpec& input);

}  // namespace nframe
