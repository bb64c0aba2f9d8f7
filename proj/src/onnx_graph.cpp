#include "nframe/onnx_graph.hpp"

#include "nframe/error.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "onnx.pb.h"

namespace nframe::onnx_rt {

std::int64_t element_count(const std::vector<std::int64_t>& shape) noexcept
{
    return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

std::string shape_string(const std::vector<std::int64_t>& shape)
{
    return fmt::format("[{}]", fmt::join(shape, ","));
}

Tensor::Tensor(std::vector<std::int64_t> dims, double fill)
    : shape(std::move(dims)), data(static_cast<std::size_t>(element_count(shape)), fill)
{
}

Tensor::Tensor(std::vector<std::int64_t> dims, std::vector<double> values) : shape(std::move(dims)), data(std::move(values))
{
    if (static_cast<std::int64_t>(data.size()) != element_count(shape)) {
        throw Error(ErrorKind::Inference,
                    fmt::format("tensor of shape {} given {} values", shape_string(shape), data.size()));
    }
}

std::int64_t Tensor::numel() const noexcept
{
    return element_count(shape);
}

std::int64_t Attributes::get_int(std::string_view name, std::int64_t fallback) const
{
    auto it = values_.find(name);
    if (it == values_.end()) return fallback;
    if (const auto* v = std::get_if<std::int64_t>(&it->second)) return *v;
    throw Error(ErrorKind::Inference, fmt::format("attribute '{}' is not an int", name));
}

double Attributes::get_float(std::string_view name, double fallback) const
{
    auto it = values_.find(name);
    if (it == values_.end()) return fallback;
    if (const auto* v = std::get_if<double>(&it->second)) return *v;
    if (const auto* v = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*v);
    throw Error(ErrorKind::Inference, fmt::format("attribute '{}' is not a float", name));
}

std::string Attributes::get_string(std::string_view name, std::string fallback) const
{
    auto it = values_.find(name);
    if (it == values_.end()) return fallback;
    if (const auto* v = std::get_if<std::string>(&it->second)) return *v;
    throw Error(ErrorKind::Inference, fmt::format("attribute '{}' is not a string", name));
}

std::vector<std::int64_t> Attributes::get_ints(std::string_view name, std::vector<std::int64_t> fallback) const
{
    auto it = values_.find(name);
    if (it == values_.end()) return fallback;
    if (const auto* v = std::get_if<std::vector<std::int64_t>>(&it->second)) return *v;
    throw Error(ErrorKind::Inference, fmt::format("attribute '{}' is not an int list", name));
}

const Tensor* Attributes::get_tensor(std::string_view name) const
{
    auto it = values_.find(name);
    if (it == values_.end()) return nullptr;
    return std::get_if<Tensor>(&it->second);
}

namespace {

template <typename T>
std::vector<double> unpack_raw(const std::string& raw, std::size_t count, const std::string& name)
{
    if (raw.size() != count * sizeof(T)) {
        throw Error(ErrorKind::Inference, fmt::format("initializer '{}': raw_data holds {} bytes, expected {}", name,
                                                      raw.size(), count * sizeof(T)));
    }
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        T v;
        std::memcpy(&v, raw.data() + i * sizeof(T), sizeof(T));
        out[i] = static_cast<double>(v);
    }
    return out;
}

template <typename Field>
std::vector<double> unpack_field(const Field& field)
{
    return std::vector<double>(field.begin(), field.end());
}

Tensor convert_tensor(const onnx::TensorProto& proto)
{
    std::vector<std::int64_t> dims(proto.dims().begin(), proto.dims().end());
    const auto count = static_cast<std::size_t>(element_count(dims));
    const std::string& name = proto.name();
    std::vector<double> values;
    switch (proto.data_type()) {
    case onnx::TensorProto::FLOAT:
        values = proto.has_raw_data() ? unpack_raw<float>(proto.raw_data(), count, name) : unpack_field(proto.float_data());
        break;
    case onnx::TensorProto::DOUBLE:
        values = proto.has_raw_data() ? unpack_raw<double>(proto.raw_data(), count, name) : unpack_field(proto.double_data());
        break;
    case onnx::TensorProto::INT64:
        values = proto.has_raw_data() ? unpack_raw<std::int64_t>(proto.raw_data(), count, name) : unpack_field(proto.int64_data());
        break;
    case onnx::TensorProto::INT32:
        values = proto.has_raw_data() ? unpack_raw<std::int32_t>(proto.raw_data(), count, name) : unpack_field(proto.int32_data());
        break;
    default:
        throw Error(ErrorKind::Inference,
                    fmt::format("initializer '{}' has unsupported data type {}", name, proto.data_type()));
    }
    return Tensor(std::move(dims), std::move(values));
}

AttributeValue convert_attribute(const onnx::AttributeProto& a)
{
    switch (a.type()) {
    case onnx::AttributeProto::INT: return a.i();
    case onnx::AttributeProto::FLOAT: return static_cast<double>(a.f());
    case onnx::AttributeProto::STRING: return a.s();
    case onnx::AttributeProto::INTS: return std::vector<std::int64_t>(a.ints().begin(), a.ints().end());
    case onnx::AttributeProto::FLOATS: return std::vector<double>(a.floats().begin(), a.floats().end());
    case onnx::AttributeProto::TENSOR: return convert_tensor(a.t());
    default: break;
    }
    // Untyped attributes from old exporters: infer from what is set.
    if (a.ints_size() > 0) return std::vector<std::int64_t>(a.ints().begin(), a.ints().end());
    if (a.floats_size() > 0) return std::vector<double>(a.floats().begin(), a.floats().end());
    if (a.has_t()) return convert_tensor(a.t());
    if (a.has_s()) return a.s();
    if (a.has_f()) return static_cast<double>(a.f());
    return a.i();
}

}  // namespace

Graph Graph::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open model graph " + path.string());
    }
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse(bytes, path.string());
}

Graph Graph::parse(const std::string& bytes, const std::string& origin)
{
    onnx::ModelProto model;
    if (!model.ParseFromString(bytes)) {
        throw Error(ErrorKind::Manifest, "cannot parse ONNX model " + origin);
    }
    const auto& g = model.graph();
    Graph graph;
    graph.origin_ = origin;

    for (const auto& init : g.initializer()) {
        graph.initializers_[init.name()] = std::make_shared<const Tensor>(convert_tensor(init));
    }
    for (const auto& input : g.input()) {
        if (graph.initializers_.count(input.name())) continue;
        if (!graph.input_name_.empty()) {
            throw Error(ErrorKind::Manifest, fmt::format("{}: graphs with more than one data input are not supported", origin));
        }
        graph.input_name_ = input.name();
        for (const auto& d : input.type().tensor_type().shape().dim()) {
            graph.input_shape_.push_back(d.has_dim_value() ? d.dim_value() : -1);
        }
    }
    if (graph.input_name_.empty()) {
        throw Error(ErrorKind::Manifest, origin + ": graph has no data input");
    }
    for (const auto& output : g.output()) graph.output_names_.push_back(output.name());

    std::set<std::string> available;
    available.insert(graph.input_name_);
    for (const auto& [name, _] : graph.initializers_) available.insert(name);

    for (const auto& proto : g.node()) {
        Node node;
        node.name = proto.name();
        node.op_type = proto.op_type();
        if (!proto.domain().empty() && proto.domain() != "ai.onnx") {
            throw Error(ErrorKind::Manifest, fmt::format("{}: node '{}' uses unsupported domain '{}'", origin,
                                                         node.name, proto.domain()));
        }
        if (!is_supported_operator(node.op_type)) {
            throw Error(ErrorKind::Manifest,
                        fmt::format("{}: node '{}' uses unsupported operator {}", origin, node.name, node.op_type));
        }
        node.inputs.assign(proto.input().begin(), proto.input().end());
        node.outputs.assign(proto.output().begin(), proto.output().end());
        for (const auto& a : proto.attribute()) node.attributes.set(a.name(), convert_attribute(a));
        for (const auto& in : node.inputs) {
            if (!in.empty() && !available.count(in)) {
                throw Error(ErrorKind::Manifest, fmt::format("{}: node '{}' reads '{}' before it is produced", origin,
                                                             node.name, in));
            }
        }
        for (const auto& out : node.outputs) {
            available.insert(out);
            graph.producer_[out] = graph.nodes_.size();
        }
        graph.nodes_.push_back(std::move(node));
    }
    for (const auto& out : graph.output_names_) {
        if (!available.count(out)) {
            throw Error(ErrorKind::Manifest, fmt::format("{}: graph output '{}' is never produced", origin, out));
        }
    }
    return graph;
}

bool Graph::has_output(std::string_view name) const
{
    for (const auto& out : output_names_) {
        if (out == name) return true;
    }
    return false;
}

const Tensor* Graph::initializer(std::string_view name) const
{
    auto it = initializers_.find(std::string(name));
    return it == initializers_.end() ? nullptr : it->second.get();
}

std::vector<Tensor> Graph::run(const Tensor& input, const std::vector<std::string>& fetch) const
{
    if (input.rank() != input_shape_.size()) {
        throw Error(ErrorKind::Inference, fmt::format("{}: input rank {} does not match graph input rank {}", origin_,
                                                      input.rank(), input_shape_.size()));
    }
    for (std::size_t a = 0; a < input_shape_.size(); ++a) {
        if (input_shape_[a] >= 0 && input_shape_[a] != input.shape[a]) {
            throw Error(ErrorKind::Inference, fmt::format("{}: input shape {} does not match graph input {}", origin_,
                                                          shape_string(input.shape), shape_string(input_shape_)));
        }
    }

    // Mark nodes reachable backwards from the fetched names.
    std::vector<char> needed(nodes_.size(), 0);
    std::vector<std::string> stack(fetch.begin(), fetch.end());
    while (!stack.empty()) {
        const std::string name = std::move(stack.back());
        stack.pop_back();
        auto it = producer_.find(name);
        if (it == producer_.end()) continue;
        if (needed[it->second]) continue;
        needed[it->second] = 1;
        for (const auto& in : nodes_[it->second].inputs) {
            if (!in.empty()) stack.push_back(in);
        }
    }

    std::unordered_map<std::string, int> remaining_uses;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!needed[i]) continue;
        for (const auto& in : nodes_[i].inputs) {
            if (!in.empty()) ++remaining_uses[in];
        }
    }
    std::set<std::string> pinned(fetch.begin(), fetch.end());

    std::unordered_map<std::string, std::shared_ptr<const Tensor>> values;
    values[input_name_] = std::shared_ptr<const Tensor>(&input, [](const Tensor*) {});

    const auto lookup = [&](const std::string& name) -> std::shared_ptr<const Tensor> {
        if (auto it = values.find(name); it != values.end()) return it->second;
        if (auto it = initializers_.find(name); it != initializers_.end()) return it->second;
        throw Error(ErrorKind::Inference, fmt::format("{}: value '{}' is not available", origin_, name));
    };

    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!needed[i]) continue;
        const Node& node = nodes_[i];
        std::vector<std::shared_ptr<const Tensor>> held;
        std::vector<const Tensor*> args;
        for (const auto& in : node.inputs) {
            if (in.empty()) {
                args.push_back(nullptr);
                continue;
            }
            held.push_back(lookup(in));
            args.push_back(held.back().get());
        }
        std::vector<Tensor> results;
        try {
            results = run_operator(node, args);
        } catch (const Error& e) {
            throw Error(ErrorKind::Inference,
                        fmt::format("{}: node '{}' ({}) failed: {}", origin_, node.name, node.op_type, e.what()));
        }
        for (std::size_t o = 0; o < node.outputs.size() && o < results.size(); ++o) {
            if (node.outputs[o].empty()) continue;
            values[node.outputs[o]] = std::make_shared<const Tensor>(std::move(results[o]));
        }
        held.clear();
        for (const auto& in : node.inputs) {
            if (in.empty()) continue;
            if (--remaining_uses[in] == 0 && !pinned.count(in)) values.erase(in);
        }
    }

    std::vector<Tensor> out;
    out.reserve(fetch.size());
    for (const auto& name : fetch) out.push_back(*lookup(name));
    return out;
}

}  // namespace nframe::onnx_rt
