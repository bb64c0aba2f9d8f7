#include "nframe/bundle.hpp"

#include "nframe/error.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

namespace nframe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* key, const std::string& where)
{
    if (!j.contains(key)) {
        throw Error(ErrorKind::Manifest, fmt::format("manifest: missing '{}' in {}", key, where));
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Manifest, fmt::format("manifest: bad '{}' in {}: {}", key, where, e.what()));
    }
}

}  // namespace

ModelManifest ModelManifest::from_json(const json& j)
{
    if (!j.is_object()) throw Error(ErrorKind::Manifest, "manifest: top level must be an object");
    ModelManifest m;
    m.name = field<std::string>(j, "name", "manifest");
    const json& input = j.contains("input") ? j.at("input") : throw Error(ErrorKind::Manifest, "manifest: missing 'input'");
    m.input.height = field<int>(input, "height", "input");
    m.input.width = field<int>(input, "width", "input");
    m.input.channels = field<int>(input, "channels", "input");
    m.input.layout = field<std::string>(input, "layout", "input");
    if (j.contains("normalization")) {
        const json& norm = j.at("normalization");
        m.normalization.mean = field<std::array<double, 3>>(norm, "mean", "normalization");
        m.normalization.std = field<std::array<double, 3>>(norm, "std", "normalization");
    } else {
        throw Error(ErrorKind::Manifest, "manifest: missing 'normalization'");
    }
    if (!j.contains("taps") || !j.at("taps").is_array()) {
        throw Error(ErrorKind::Manifest, "manifest: 'taps' must be an array");
    }
    for (const json& t : j.at("taps")) {
        TapSpec tap;
        tap.tap_id = field<int>(t, "tap_id", "tap");
        tap.tensor_name = field<std::string>(t, "tensor_name", "tap");
        tap.display_name = field<std::string>(t, "display_name", "tap");
        m.taps.push_back(std::move(tap));
    }
    if (j.contains("top1_accuracy") && !j.at("top1_accuracy").is_null()) {
        m.top1_accuracy = field<double>(j, "top1_accuracy", "manifest");
    }
    m.validate();
    return m;
}

ModelManifest ModelManifest::load(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open manifest " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Manifest, fmt::format("manifest {} is not valid JSON: {}", path.string(), e.what()));
    }
    return from_json(j);
}

json ModelManifest::to_json() const
{
    json j;
    j["name"] = name;
    j["input"] = {{"height", input.height}, {"width", input.width}, {"channels", input.channels}, {"layout", input.layout}};
    j["normalization"] = {{"mean", normalization.mean}, {"std", normalization.std}};
    j["taps"] = json::array();
    for (const auto& t : taps) {
        j["taps"].push_back({{"tap_id", t.tap_id}, {"tensor_name", t.tensor_name}, {"display_name", t.display_name}});
    }
    if (top1_accuracy) j["top1_accuracy"] = *top1_accuracy;
    return j;
}

void ModelManifest::validate() const
{
    const auto fail = [](const std::string& why) { throw Error(ErrorKind::Manifest, "manifest: " + why); };
    if (name.empty()) fail("name must not be empty");
    if (input.height < 1 || input.width < 1) fail("input dimensions must be positive");
    if (input.channels != 3) fail("only 3-channel inputs are supported");
    if (input.layout != "NCHW") fail("only NCHW layout is supported, got " + input.layout);
    for (double s : normalization.std) {
        if (!(s > 0.0)) fail("normalization std must be positive");
    }
    if (taps.empty()) fail("at least one tap is required");
    std::set<std::string> names;
    int previous = 0;
    for (const auto& t : taps) {
        if (t.tap_id == 0) fail("tap_id 0 is reserved for input space");
        if (t.tap_id <= previous) fail(fmt::format("tap ids must be increasing (tap {} after {})", t.tap_id, previous));
        previous = t.tap_id;
        if (t.tensor_name.empty()) fail("tap tensor_name must not be empty");
        if (!names.insert(t.tensor_name).second) fail("duplicate tap tensor '" + t.tensor_name + "'");
    }
    if (top1_accuracy && !(*top1_accuracy >= 0.0 && *top1_accuracy <= 1.0)) fail("top1_accuracy must lie in [0, 1]");
}

ModelBundle load_bundle(const fs::path& graph_path, const fs::path& manifest_path)
{
    ModelBundle bundle{onnx_rt::Graph::load(graph_path), ModelManifest::load(manifest_path)};
    const auto& m = bundle.manifest;
    for (const auto& tap : m.taps) {
        if (!bundle.graph.has_output(tap.tensor_name)) {
            throw Error(ErrorKind::Manifest, fmt::format("manifest tap {} names tensor '{}' which is not an output of {}",
                                                         tap.tap_id, tap.tensor_name, graph_path.string()));
        }
    }
    const auto& shape = bundle.graph.input_shape();
    const std::vector<std::int64_t> expected{-1, 3, m.input.height, m.input.width};
    bool ok = shape.size() == 4;
    for (std::size_t a = 1; ok && a < 4; ++a) ok = shape[a] == expected[a];
    if (!ok) {
        throw Error(ErrorKind::Manifest, fmt::format("graph input {} does not match manifest input [N,3,{},{}]",
                                                     onnx_rt::shape_string(shape), m.input.height, m.input.width));
    }
    return bundle;
}

ModelBundle load_bundle(const fs::path& dir)
{
    return load_bundle(dir / "model.onnx", dir / "manifest.json");
}

std::vector<TapActivations> forward_taps(const ModelBundle& bundle, std::span<const Raster> inputs, std::size_t max_batch)
{
    const auto& m = bundle.manifest;
    for (const auto& r : inputs) {
        if (r.height() != m.input.height || r.width() != m.input.width) {
            throw Error(ErrorKind::Inference, fmt::format("input is {}x{}, model expects {}x{}", r.width(), r.height(),
                                                          m.input.width, m.input.height));
        }
    }
    std::vector<std::string> fetch;
    for (const auto& t : m.taps) fetch.push_back(t.tensor_name);

    std::vector<TapActivations> out(inputs.size());
    const std::size_t chunk = max_batch == 0 ? std::max<std::size_t>(inputs.size(), 1) : max_batch;
    const auto per_image = static_cast<std::int64_t>(3) * m.input.height * m.input.width;
    for (std::size_t start = 0; start < inputs.size(); start += chunk) {
        const std::size_t count = std::min(chunk, inputs.size() - start);
        onnx_rt::Tensor batch({static_cast<std::int64_t>(count), 3, m.input.height, m.input.width});
        for (std::size_t b = 0; b < count; ++b) {
            const auto src = inputs[start + b].data();
            std::copy(src.begin(), src.end(), batch.data.begin() + static_cast<std::ptrdiff_t>(b) * per_image);
        }
        const auto results = bundle.graph.run(batch, fetch);
        for (std::size_t t = 0; t < results.size(); ++t) {
            const auto& tensor = results[t];
            if (tensor.rank() < 1 || tensor.dim(0) != static_cast<std::int64_t>(count)) {
                throw Error(ErrorKind::Inference,
                            fmt::format("tap '{}' has shape {}; expected a leading batch axis of {}", fetch[t],
                                        onnx_rt::shape_string(tensor.shape), count));
            }
            const std::int64_t width = tensor.numel() / static_cast<std::int64_t>(count);
            for (std::size_t b = 0; b < count; ++b) {
                out[start + b].push_back(
                    Eigen::Map<const linalg::Vector>(tensor.data.data() + static_cast<std::int64_t>(b) * width, width));
            }
        }
    }
    return out;
}

NeuralFrame compute_neural_frame(const ModelBundle& bundle, const Frame& frame, std::size_t max_batch)
{
    frame.validate();
    std::vector<Raster> inputs;
    inputs.reserve(frame.size() + 1);
    inputs.push_back(frame.base.raster());
    for (const auto& p : frame.perturbed) inputs.push_back(p);
    const auto acts = forward_taps(bundle, inputs, max_batch);

    NeuralFrame nf;
    nf.taps.push_back({0, "input", frame.tangent_matrix()});
    const auto k = static_cast<Eigen::Index>(frame.size());
    for (std::size_t t = 0; t < bundle.manifest.taps.size(); ++t) {
        const auto& spec = bundle.manifest.taps[t];
        const linalg::Vector& base = acts[0][t];
        TapMatrix tap{spec.tap_id, spec.display_name, linalg::Matrix(base.size(), k)};
        for (Eigen::Index j = 0; j < k; ++j) {
            tap.columns.col(j) = (acts[static_cast<std::size_t>(j) + 1][t] - base) / frame.steps[static_cast<std::size_t>(j)];
            if (tap.columns.col(j).cwiseAbs().maxCoeff() == 0.0) {
                nf.warnings.push_back(fmt::format("degenerate direction '{}' at tap {} ({})",
                                                  frame.labels[static_cast<std::size_t>(j)], spec.tap_id, spec.display_name));
            }
        }
        nf.taps.push_back(std::move(tap));
    }
    return nf;
}

Image fit_to_input(const Image& image, const InputSpec& input)
{
    return resize(image, input.height, input.width, Interpolation::Bilinear);
}

}  // namespace nframe
