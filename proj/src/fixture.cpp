#include "nframe/fixture.hpp"

#include "nframe/bundle.hpp"
#include "nframe/error.hpp"
#include "nframe/rng.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <google/protobuf/io/coded_stream.h>
#include <google/protobuf/io/zero_copy_stream_impl_lite.h>

#include "onnx.pb.h"

namespace nframe {

namespace fs = std::filesystem;

namespace {

constexpr int kSide = 64;
constexpr int kConvChannels = 8;
constexpr int kLatent = 32;
constexpr std::array<double, 3> kImagenetMean{0.485, 0.456, 0.406};
constexpr std::array<double, 3> kImagenetStd{0.229, 0.224, 0.225};

void add_float_tensor(onnx::GraphProto& graph, const std::string& name, const std::vector<std::int64_t>& dims,
                      const std::vector<float>& values)
{
    auto* t = graph.add_initializer();
    t->set_name(name);
    t->set_data_type(onnx::TensorProto::FLOAT);
    for (auto d : dims) t->add_dims(d);
    t->set_raw_data(std::string(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(float)));
}

std::vector<float> he_normal(GaussianStream& rng, std::size_t count, double fan_in, double scale)
{
    const double stddev = std::sqrt(2.0 / fan_in) * scale;
    std::vector<float> out(count);
    for (auto& v : out) v = static_cast<float>(stddev * rng.next());
    return out;
}

std::vector<float> small_bias(GaussianStream& rng, std::size_t count)
{
    std::vector<float> out(count);
    for (auto& v : out) v = static_cast<float>(0.01 * rng.next());
    return out;
}

onnx::AttributeProto* add_ints(onnx::NodeProto& node, const std::string& name, std::initializer_list<std::int64_t> v)
{
    auto* a = node.add_attribute();
    a->set_name(name);
    a->set_type(onnx::AttributeProto::INTS);
    for (auto x : v) a->add_ints(x);
    return a;
}

void add_int(onnx::NodeProto& node, const std::string& name, std::int64_t v)
{
    auto* a = node.add_attribute();
    a->set_name(name);
    a->set_type(onnx::AttributeProto::INT);
    a->set_i(v);
}

onnx::NodeProto& add_node(onnx::GraphProto& graph, const std::string& op, const std::string& name,
                          std::initializer_list<std::string> inputs, std::initializer_list<std::string> outputs)
{
    auto* n = graph.add_node();
    n->set_op_type(op);
    n->set_name(name);
    for (const auto& i : inputs) n->add_input(i);
    for (const auto& o : outputs) n->add_output(o);
    return *n;
}

void add_value_info(google::protobuf::RepeatedPtrField<onnx::ValueInfoProto>* list, const std::string& name,
                    std::initializer_list<std::int64_t> dims)
{
    auto* v = list->Add();
    v->set_name(name);
    auto* tensor = v->mutable_type()->mutable_tensor_type();
    tensor->set_elem_type(onnx::TensorProto::FLOAT);
    auto* shape = tensor->mutable_shape();
    for (auto d : dims) {
        auto* dim = shape->add_dim();
        if (d < 0) {
            dim->set_dim_param("N");
        } else {
            dim->set_dim_value(d);
        }
    }
}

}  // namespace

FixturePaths make_fixture_bundle(const fs::path& out_dir, std::uint64_t seed, const FixtureOptions& options)
{
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + out_dir.string() + ": " + ec.message());

    GaussianStream rng(derive_seed(seed, "fixture_weights"));
    const double scale = options.weight_scale;

    onnx::ModelProto model;
    model.set_ir_version(8);
    model.set_producer_name("nframe-fixture");
    auto* opset = model.add_opset_import();
    opset->set_domain("");
    opset->set_version(13);

    auto& g = *model.mutable_graph();
    g.set_name(options.linear ? "fixture_linear" : "fixture");

    std::vector<float> mean(kImagenetMean.begin(), kImagenetMean.end());
    std::vector<float> stdv(kImagenetStd.begin(), kImagenetStd.end());
    add_float_tensor(g, "norm.mean", {1, 3, 1, 1}, mean);
    add_float_tensor(g, "norm.std", {1, 3, 1, 1}, stdv);
    add_float_tensor(g, "conv1.weight", {kConvChannels, 3, 3, 3}, he_normal(rng, kConvChannels * 27, 27.0, scale));
    add_float_tensor(g, "conv1.bias", {kConvChannels}, small_bias(rng, kConvChannels));
    constexpr int pooled = kConvChannels * (kSide / 2) * (kSide / 2);
    add_float_tensor(g, "fc.weight", {kLatent, pooled}, he_normal(rng, static_cast<std::size_t>(kLatent) * pooled, pooled, scale));
    add_float_tensor(g, "fc.bias", {kLatent}, small_bias(rng, kLatent));

    add_node(g, "Sub", "norm_sub", {"pixels", "norm.mean"}, {"centered"});
    add_node(g, "Div", "norm_div", {"centered", "norm.std"}, {"normalized"});
    auto& conv = add_node(g, "Conv", "conv1", {"normalized", "conv1.weight", "conv1.bias"}, {"conv1.out"});
    add_ints(conv, "kernel_shape", {3, 3});
    add_ints(conv, "pads", {1, 1, 1, 1});
    add_ints(conv, "strides", {1, 1});

    std::string act = "conv1.out";
    if (!options.linear) {
        add_node(g, "Relu", "relu1", {"conv1.out"}, {"conv1.relu"});
        act = "conv1.relu";
    }
    auto& pool = add_node(g, options.linear ? "AveragePool" : "MaxPool", "pool1", {act}, {"pool1.out"});
    add_ints(pool, "kernel_shape", {2, 2});
    add_ints(pool, "strides", {2, 2});
    auto& flat = add_node(g, "Flatten", "flatten", {"pool1.out"}, {"flat"});
    add_int(flat, "axis", 1);
    auto& fc = add_node(g, "Gemm", "fc", {"flat", "fc.weight", "fc.bias"}, {"fc.out"});
    add_int(fc, "transB", 1);

    add_value_info(g.mutable_input(), "pixels", {-1, 3, kSide, kSide});
    add_value_info(g.mutable_output(), "fc.out", {-1, kLatent});
    add_value_info(g.mutable_output(), act, {-1, kConvChannels, kSide, kSide});
    add_value_info(g.mutable_output(), "pool1.out", {-1, kConvChannels, kSide / 2, kSide / 2});

    std::string bytes;
    {
        google::protobuf::io::StringOutputStream stream(&bytes);
        google::protobuf::io::CodedOutputStream coded(&stream);
        coded.SetSerializationDeterministic(true);
        if (!model.SerializeToCodedStream(&coded)) throw Error(ErrorKind::Io, "cannot serialise fixture graph");
    }

    FixturePaths paths{out_dir / "model.onnx", out_dir / "manifest.json"};
    {
        std::ofstream out(paths.graph, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorKind::Io, "cannot write " + paths.graph.string());
    }

    ModelManifest manifest;
    manifest.name = options.name;
    manifest.input = {kSide, kSide, 3, "NCHW"};
    manifest.normalization = {kImagenetMean, kImagenetStd};
    manifest.taps = {{1, act, options.linear ? "conv1" : "conv1.relu"}, {2, "pool1.out", "pool1"}, {3, "fc.out", "fc"}};
    manifest.top1_accuracy = options.top1_accuracy;
    manifest.validate();
    std::ofstream out(paths.manifest);
    out << manifest.to_json().dump(2) << '\n';
    if (!out) throw Error(ErrorKind::Io, "cannot write " + paths.manifest.string());
    return paths;
}

}  // namespace nframe
