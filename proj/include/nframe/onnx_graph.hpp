#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace nframe::onnx_rt {

// Dense row-major tensor. All element types are held as double; this keeps
// finite differences of activations accurate and int64 shape tensors exact.
struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::int64_t> dims, double fill = 0.0);
    Tensor(std::vector<std::int64_t> dims, std::vector<double> values);

    std::int64_t numel() const noexcept;
    std::size_t rank() const noexcept { return shape.size(); }
    std::int64_t dim(std::size_t axis) const { return shape.at(axis); }
};

std::int64_t element_count(const std::vector<std::int64_t>& shape) noexcept;
std::string shape_string(const std::vector<std::int64_t>& shape);

using AttributeValue = std::variant<std::int64_t, double, std::string, std::vector<std::int64_t>,
                                    std::vector<double>, Tensor>;

class Attributes {
public:
    void set(std::string name, AttributeValue value) { values_[std::move(name)] = std::move(value); }
    bool has(std::string_view name) const { return values_.find(std::string(name)) != values_.end(); }

    std::int64_t get_int(std::string_view name, std::int64_t fallback) const;
    double get_float(std::string_view name, double fallback) const;
    std::string get_string(std::string_view name, std::string fallback) const;
    std::vector<std::int64_t> get_ints(std::string_view name, std::vector<std::int64_t> fallback) const;
    const Tensor* get_tensor(std::string_view name) const;

private:
    std::map<std::string, AttributeValue, std::less<>> values_;
};

struct Node {
    std::string name;
    std::string op_type;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    Attributes attributes;
};

// Executes one node. Inputs may contain nullptr for omitted optional inputs.
std::vector<Tensor> run_operator(const Node& node, const std::vector<const Tensor*>& inputs);
bool is_supported_operator(std::string_view op_type);

// Inference-only interpreter for ONNX graphs built from the operator subset
// listed in run_operator. Immutable after load; run() is safe to call
// concurrently.
class Graph {
public:
    static Graph load(const std::filesystem::path& path);
    static Graph parse(const std::string& bytes, const std::string& origin = "<memory>");

    const std::string& input_name() const noexcept { return input_name_; }
    // -1 marks symbolic dimensions (typically the batch axis).
    const std::vector<std::int64_t>& input_shape() const noexcept { return input_shape_; }
    const std::vector<std::string>& output_names() const noexcept { return output_names_; }
    bool has_output(std::string_view name) const;
    const Tensor* initializer(std::string_view name) const;
    const std::vector<Node>& nodes() const noexcept { return nodes_; }

    // Evaluates only the nodes needed for `fetch` and returns them in order.
    std::vector<Tensor> run(const Tensor& input, const std::vector<std::string>& fetch) const;

private:
    std::string origin_;
    std::string input_name_;
    std::vector<std::int64_t> input_shape_;
    std::vector<std::string> output_names_;
    std::vector<Node> nodes_;
    std::unordered_map<std::string, std::shared_ptr<const Tensor>> initializers_;
    std::unordered_map<std::string, std::size_t> producer_;
};

}  // namespace nframe::onnx_rt
