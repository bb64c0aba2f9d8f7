#include "nframe/onnx_graph.hpp"

#include "nframe/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <unordered_map>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace nframe::onnx_rt {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Shape = std::vector<std::int64_t>;
using Inputs = std::vector<const Tensor*>;

[[noreturn]] void fail(const std::string& message)
{
    throw Error(ErrorKind::Inference, message);
}

const Tensor& require(const Inputs& in, std::size_t i)
{
    if (i >= in.size() || in[i] == nullptr) fail(fmt::format("missing input #{}", i));
    return *in[i];
}

std::int64_t normalize_axis(std::int64_t axis, std::size_t rank)
{
    const auto r = static_cast<std::int64_t>(rank);
    if (axis < 0) axis += r;
    if (axis < 0 || axis >= std::max<std::int64_t>(r, 1)) fail(fmt::format("axis {} out of range for rank {}", axis, rank));
    return axis;
}

std::vector<std::int64_t> strides_of(const Shape& shape)
{
    std::vector<std::int64_t> strides(shape.size(), 1);
    for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
    return strides;
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor unary(const Tensor& x, const std::function<double(double)>& fn)
{
    Tensor out = x;
    for (double& v : out.data) v = fn(v);
    return out;
}

Shape broadcast_shape(const Shape& a, const Shape& b)
{
    const std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank, 1);
    for (std::size_t i = 0; i < rank; ++i) {
        const std::int64_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
        const std::int64_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
        if (da != db && da != 1 && db != 1) {
            fail(fmt::format("cannot broadcast {} with {}", shape_string(a), shape_string(b)));
        }
        out[i] = std::max(da, db);
    }
    return out;
}

// Strides of `shape` aligned to `target`, zero along broadcast axes.
std::vector<std::int64_t> broadcast_strides(const Shape& shape, const Shape& target)
{
    const auto own = strides_of(shape);
    std::vector<std::int64_t> out(target.size(), 0);
    const std::size_t offset = target.size() - shape.size();
    for (std::size_t i = 0; i < shape.size(); ++i) out[i + offset] = shape[i] == 1 ? 0 : own[i];
    return out;
}

Tensor binary(const Tensor& a, const Tensor& b, const std::function<double(double, double)>& fn)
{
    if (a.shape == b.shape) {
        Tensor out(a.shape);
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = fn(a.data[i], b.data[i]);
        return out;
    }
    const Shape shape = broadcast_shape(a.shape, b.shape);
    Tensor out(shape);
    const auto sa = broadcast_strides(a.shape, shape);
    const auto sb = broadcast_strides(b.shape, shape);
    std::vector<std::int64_t> index(shape.size(), 0);
    std::int64_t ia = 0;
    std::int64_t ib = 0;
    for (std::size_t flat = 0; flat < out.data.size(); ++flat) {
        out.data[flat] = fn(a.data[static_cast<std::size_t>(ia)], b.data[static_cast<std::size_t>(ib)]);
        for (std::size_t d = shape.size(); d-- > 0;) {
            if (++index[d] < shape[d]) {
                ia += sa[d];
                ib += sb[d];
                break;
            }
            ia -= sa[d] * (shape[d] - 1);
            ib -= sb[d] * (shape[d] - 1);
            index[d] = 0;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Convolution and pooling (NCHW, 2-D spatial)

struct Window {
    std::int64_t kh, kw;
    std::int64_t sh, sw;
    std::int64_t dh, dw;
    std::int64_t pad_top, pad_left, pad_bottom, pad_right;
};

Window read_window(const Attributes& attrs, std::int64_t kh, std::int64_t kw, std::int64_t in_h, std::int64_t in_w)
{
    Window w{};
    w.kh = kh;
    w.kw = kw;
    const auto strides = attrs.get_ints("strides", {1, 1});
    const auto dilations = attrs.get_ints("dilations", {1, 1});
    if (strides.size() != 2 || dilations.size() != 2) fail("only 2-D windows are supported");
    w.sh = strides[0];
    w.sw = strides[1];
    w.dh = dilations[0];
    w.dw = dilations[1];
    const std::string auto_pad = attrs.get_string("auto_pad", "NOTSET");
    if (auto_pad == "NOTSET" || auto_pad == "VALID") {
        const auto pads = auto_pad == "VALID" ? std::vector<std::int64_t>{0, 0, 0, 0} : attrs.get_ints("pads", {0, 0, 0, 0});
        if (pads.size() != 4) fail("pads must have 4 entries");
        w.pad_top = pads[0];
        w.pad_left = pads[1];
        w.pad_bottom = pads[2];
        w.pad_right = pads[3];
    } else if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
        const auto same = [&](std::int64_t in, std::int64_t k, std::int64_t s, std::int64_t d, std::int64_t& lo,
                              std::int64_t& hi) {
            const std::int64_t out = (in + s - 1) / s;
            const std::int64_t total = std::max<std::int64_t>(0, (out - 1) * s + (k - 1) * d + 1 - in);
            lo = auto_pad == "SAME_UPPER" ? total / 2 : total - total / 2;
            hi = total - lo;
        };
        same(in_h, kh, w.sh, w.dh, w.pad_top, w.pad_bottom);
        same(in_w, kw, w.sw, w.dw, w.pad_left, w.pad_right);
    } else {
        fail("unsupported auto_pad " + auto_pad);
    }
    return w;
}

std::int64_t window_out(std::int64_t in, std::int64_t k, std::int64_t s, std::int64_t d, std::int64_t lo,
                        std::int64_t hi, bool ceil_mode)
{
    const std::int64_t span = in + lo + hi - ((k - 1) * d + 1);
    if (span < 0) fail("window larger than padded input");
    std::int64_t out = (ceil_mode ? (span + s - 1) / s : span / s) + 1;
    // A ceil-mode window must start inside the input or left padding.
    if (ceil_mode && (out - 1) * s >= in + lo) --out;
    return out;
}

Tensor conv(const Inputs& in, const Attributes& attrs)
{
    const Tensor& x = require(in, 0);
    const Tensor& w = require(in, 1);
    const Tensor* bias = in.size() > 2 ? in[2] : nullptr;
    if (x.rank() != 4 || w.rank() != 4) fail("Conv supports 4-D NCHW input only");
    const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const std::int64_t m = w.dim(0), cg = w.dim(1);
    const std::int64_t group = attrs.get_int("group", 1);
    if (cg * group != c || m % group != 0) fail("Conv channel/group mismatch");
    const Window win = read_window(attrs, w.dim(2), w.dim(3), h, wd);
    const std::int64_t oh = window_out(h, win.kh, win.sh, win.dh, win.pad_top, win.pad_bottom, false);
    const std::int64_t ow = window_out(wd, win.kw, win.sw, win.dw, win.pad_left, win.pad_right, false);
    const std::int64_t mg = m / group;
    const std::int64_t patch = cg * win.kh * win.kw;

    Tensor out({n, m, oh, ow});
    RowMatrix columns(patch, oh * ow);
    for (std::int64_t b = 0; b < n; ++b) {
        for (std::int64_t g = 0; g < group; ++g) {
            // im2col for this sample and group
            for (std::int64_t ci = 0; ci < cg; ++ci) {
                const double* src = x.data.data() + ((b * c + g * cg + ci) * h) * wd;
                for (std::int64_t ky = 0; ky < win.kh; ++ky) {
                    for (std::int64_t kx = 0; kx < win.kw; ++kx) {
                        double* row = columns.data() + ((ci * win.kh + ky) * win.kw + kx) * oh * ow;
                        for (std::int64_t y = 0; y < oh; ++y) {
                            const std::int64_t sy = y * win.sh - win.pad_top + ky * win.dh;
                            for (std::int64_t xx = 0; xx < ow; ++xx) {
                                const std::int64_t sx = xx * win.sw - win.pad_left + kx * win.dw;
                                row[y * ow + xx] = (sy >= 0 && sy < h && sx >= 0 && sx < wd) ? src[sy * wd + sx] : 0.0;
                            }
                        }
                    }
                }
            }
            Eigen::Map<const RowMatrix> weights(w.data.data() + g * mg * patch, mg, patch);
            Eigen::Map<RowMatrix> dst(out.data.data() + (b * m + g * mg) * oh * ow, mg, oh * ow);
            dst.noalias() = weights * columns;
        }
        if (bias) {
            for (std::int64_t o = 0; o < m; ++o) {
                double* dst = out.data.data() + (b * m + o) * oh * ow;
                for (std::int64_t i = 0; i < oh * ow; ++i) dst[i] += bias->data[static_cast<std::size_t>(o)];
            }
        }
    }
    return out;
}

Tensor pool(const Inputs& in, const Attributes& attrs, bool is_max)
{
    const Tensor& x = require(in, 0);
    if (x.rank() != 4) fail("pooling supports 4-D NCHW input only");
    const auto kernel = attrs.get_ints("kernel_shape", {});
    if (kernel.size() != 2) fail("pooling needs a 2-D kernel_shape");
    const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const Window win = read_window(attrs, kernel[0], kernel[1], h, wd);
    const bool ceil_mode = attrs.get_int("ceil_mode", 0) != 0;
    const bool include_pad = attrs.get_int("count_include_pad", 0) != 0;
    const std::int64_t oh = window_out(h, win.kh, win.sh, win.dh, win.pad_top, win.pad_bottom, ceil_mode);
    const std::int64_t ow = window_out(wd, win.kw, win.sw, win.dw, win.pad_left, win.pad_right, ceil_mode);

    Tensor out({n, c, oh, ow});
    for (std::int64_t plane = 0; plane < n * c; ++plane) {
        const double* src = x.data.data() + plane * h * wd;
        double* dst = out.data.data() + plane * oh * ow;
        for (std::int64_t y = 0; y < oh; ++y) {
            for (std::int64_t xx = 0; xx < ow; ++xx) {
                double acc = is_max ? -std::numeric_limits<double>::infinity() : 0.0;
                std::int64_t count = 0;
                std::int64_t padded = 0;
                for (std::int64_t ky = 0; ky < win.kh; ++ky) {
                    const std::int64_t sy = y * win.sh - win.pad_top + ky * win.dh;
                    for (std::int64_t kx = 0; kx < win.kw; ++kx) {
                        const std::int64_t sx = xx * win.sw - win.pad_left + kx * win.dw;
                        const bool inside = sy >= 0 && sy < h && sx >= 0 && sx < wd;
                        const bool in_padding =
                            sy >= -win.pad_top && sy < h + win.pad_bottom && sx >= -win.pad_left && sx < wd + win.pad_right;
                        if (inside) {
                            const double v = src[sy * wd + sx];
                            acc = is_max ? std::max(acc, v) : acc + v;
                            ++count;
                        } else if (in_padding) {
                            ++padded;
                        }
                    }
                }
                if (!is_max) {
                    const std::int64_t denom = include_pad ? count + padded : count;
                    acc = denom > 0 ? acc / static_cast<double>(denom) : 0.0;
                }
                dst[y * ow + xx] = acc;
            }
        }
    }
    return out;
}

Tensor global_average_pool(const Tensor& x)
{
    if (x.rank() < 3) fail("GlobalAveragePool needs rank >= 3");
    const std::int64_t n = x.dim(0), c = x.dim(1);
    const std::int64_t spatial = x.numel() / (n * c);
    Shape shape = x.shape;
    std::fill(shape.begin() + 2, shape.end(), 1);
    Tensor out(shape);
    for (std::int64_t p = 0; p < n * c; ++p) {
        double acc = 0.0;
        for (std::int64_t i = 0; i < spatial; ++i) acc += x.data[static_cast<std::size_t>(p * spatial + i)];
        out.data[static_cast<std::size_t>(p)] = acc / static_cast<double>(spatial);
    }
    return out;
}

Tensor batch_norm(const Inputs& in, const Attributes& attrs)
{
    const Tensor& x = require(in, 0);
    const Tensor& scale = require(in, 1);
    const Tensor& shift = require(in, 2);
    const Tensor& mean = require(in, 3);
    const Tensor& var = require(in, 4);
    const double eps = attrs.get_float("epsilon", 1e-5);
    if (x.rank() < 2) fail("BatchNormalization needs rank >= 2");
    const std::int64_t n = x.dim(0), c = x.dim(1);
    const std::int64_t spatial = x.numel() / (n * c);
    Tensor out = x;
    for (std::int64_t b = 0; b < n; ++b) {
        for (std::int64_t ch = 0; ch < c; ++ch) {
            const auto k = static_cast<std::size_t>(ch);
            const double a = scale.data[k] / std::sqrt(var.data[k] + eps);
            const double o = shift.data[k] - a * mean.data[k];
            double* p = out.data.data() + (b * c + ch) * spatial;
            for (std::int64_t i = 0; i < spatial; ++i) p[i] = a * p[i] + o;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor gemm(const Inputs& in, const Attributes& attrs)
{
    const Tensor& a = require(in, 0);
    const Tensor& b = require(in, 1);
    const Tensor* c = in.size() > 2 ? in[2] : nullptr;
    if (a.rank() != 2 || b.rank() != 2) fail("Gemm needs 2-D inputs");
    const bool ta = attrs.get_int("transA", 0) != 0;
    const bool tb = attrs.get_int("transB", 0) != 0;
    const double alpha = attrs.get_float("alpha", 1.0);
    const double beta = attrs.get_float("beta", 1.0);
    Eigen::Map<const RowMatrix> ma(a.data.data(), a.dim(0), a.dim(1));
    Eigen::Map<const RowMatrix> mb(b.data.data(), b.dim(0), b.dim(1));
    const std::int64_t rows = ta ? a.dim(1) : a.dim(0);
    const std::int64_t inner = ta ? a.dim(0) : a.dim(1);
    const std::int64_t cols = tb ? b.dim(0) : b.dim(1);
    if ((tb ? b.dim(1) : b.dim(0)) != inner) fail("Gemm inner dimensions differ");

    Tensor out({rows, cols});
    Eigen::Map<RowMatrix> dst(out.data.data(), rows, cols);
    // Row at a time so each sample's result is independent of the batch size.
    for (std::int64_t r = 0; r < rows; ++r) {
        const Eigen::RowVectorXd lhs = ta ? Eigen::RowVectorXd(ma.col(r).transpose()) : Eigen::RowVectorXd(ma.row(r));
        if (tb) {
            dst.row(r).noalias() = alpha * (lhs * mb.transpose());
        } else {
            dst.row(r).noalias() = alpha * (lhs * mb);
        }
    }
    if (c && beta != 0.0) {
        const Tensor scaled = binary(out, *c, [beta](double y, double z) { return y + beta * z; });
        if (scaled.shape != out.shape) fail("Gemm bias does not broadcast to the output");
        return scaled;
    }
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b)
{
    if (a.rank() < 1 || b.rank() < 1) fail("MatMul needs rank >= 1");
    Shape sa = a.shape;
    Shape sb = b.shape;
    const bool a_vec = sa.size() == 1;
    const bool b_vec = sb.size() == 1;
    if (a_vec) sa.insert(sa.begin(), 1);
    if (b_vec) sb.push_back(1);
    const std::int64_t m = sa[sa.size() - 2], k = sa.back();
    const std::int64_t k2 = sb[sb.size() - 2], n = sb.back();
    if (k != k2) fail("MatMul inner dimensions differ");
    const Shape batch_a(sa.begin(), sa.end() - 2);
    const Shape batch_b(sb.begin(), sb.end() - 2);
    const Shape batch = broadcast_shape(batch_a, batch_b);
    const std::int64_t batches = element_count(batch);
    const auto stride_a = broadcast_strides(batch_a, batch);
    const auto stride_b = broadcast_strides(batch_b, batch);
    const auto batch_strides = strides_of(batch);

    Shape out_shape = batch;
    out_shape.push_back(m);
    out_shape.push_back(n);
    Tensor out(out_shape);
    for (std::int64_t bi = 0; bi < batches; ++bi) {
        std::int64_t oa = 0, ob = 0, rem = bi;
        for (std::size_t d = 0; d < batch.size(); ++d) {
            const std::int64_t idx = rem / batch_strides[d];
            rem %= batch_strides[d];
            oa += idx * stride_a[d];
            ob += idx * stride_b[d];
        }
        Eigen::Map<const RowMatrix> ma(a.data.data() + oa * m * k, m, k);
        Eigen::Map<const RowMatrix> mb(b.data.data() + ob * k * n, k, n);
        Eigen::Map<RowMatrix> dst(out.data.data() + bi * m * n, m, n);
        for (std::int64_t r = 0; r < m; ++r) dst.row(r).noalias() = ma.row(r) * mb;
    }
    if (a_vec) out.shape.erase(out.shape.end() - 2);
    if (b_vec) out.shape.pop_back();
    return out;
}

// ---------------------------------------------------------------------------
// Shape manipulation

Tensor reshape(const Tensor& x, const Tensor& target, bool allow_zero)
{
    Shape shape;
    std::int64_t infer = -1;
    std::int64_t known = 1;
    for (std::size_t i = 0; i < target.data.size(); ++i) {
        auto d = static_cast<std::int64_t>(target.data[i]);
        if (d == 0 && !allow_zero) {
            if (i >= x.rank()) fail("Reshape copies a missing dimension");
            d = x.shape[i];
        }
        if (d == -1) {
            if (infer >= 0) fail("Reshape has more than one -1");
            infer = static_cast<std::int64_t>(i);
            shape.push_back(1);
            continue;
        }
        known *= d;
        shape.push_back(d);
    }
    if (infer >= 0) {
        if (known == 0 || x.numel() % known != 0) fail("Reshape cannot infer dimension");
        shape[static_cast<std::size_t>(infer)] = x.numel() / known;
    }
    if (element_count(shape) != x.numel()) {
        fail(fmt::format("Reshape {} -> {} changes element count", shape_string(x.shape), shape_string(shape)));
    }
    return Tensor(shape, x.data);
}

Tensor flatten(const Tensor& x, std::int64_t axis)
{
    axis = axis < 0 ? axis + static_cast<std::int64_t>(x.rank()) : axis;
    if (axis < 0 || axis > static_cast<std::int64_t>(x.rank())) fail("Flatten axis out of range");
    std::int64_t outer = 1;
    for (std::int64_t i = 0; i < axis; ++i) outer *= x.shape[static_cast<std::size_t>(i)];
    return Tensor({outer, x.numel() / std::max<std::int64_t>(outer, 1)}, x.data);
}

Tensor transpose(const Tensor& x, std::vector<std::int64_t> perm)
{
    const std::size_t rank = x.rank();
    if (perm.empty()) {
        for (std::size_t i = rank; i-- > 0;) perm.push_back(static_cast<std::int64_t>(i));
    }
    if (perm.size() != rank) fail("Transpose perm has the wrong length");
    Shape shape(rank);
    for (std::size_t i = 0; i < rank; ++i) shape[i] = x.shape[static_cast<std::size_t>(perm[i])];
    const auto src_strides = strides_of(x.shape);
    Tensor out(shape);
    std::vector<std::int64_t> index(rank, 0);
    for (std::size_t flat = 0; flat < out.data.size(); ++flat) {
        std::int64_t offset = 0;
        for (std::size_t d = 0; d < rank; ++d) offset += index[d] * src_strides[static_cast<std::size_t>(perm[d])];
        out.data[flat] = x.data[static_cast<std::size_t>(offset)];
        for (std::size_t d = rank; d-- > 0;) {
            if (++index[d] < shape[d]) break;
            index[d] = 0;
        }
    }
    return out;
}

Tensor concat(const Inputs& in, std::int64_t axis)
{
    const Tensor& first = require(in, 0);
    axis = normalize_axis(axis, first.rank());
    const auto ax = static_cast<std::size_t>(axis);
    Shape shape = first.shape;
    shape[ax] = 0;
    for (const Tensor* t : in) {
        if (!t) continue;
        if (t->rank() != first.rank()) fail("Concat rank mismatch");
        shape[ax] += t->shape[ax];
    }
    std::int64_t outer = 1;
    for (std::size_t i = 0; i < ax; ++i) outer *= shape[i];
    std::int64_t inner = 1;
    for (std::size_t i = ax + 1; i < shape.size(); ++i) inner *= shape[i];
    Tensor out(shape);
    std::int64_t offset = 0;
    for (const Tensor* t : in) {
        if (!t) continue;
        const std::int64_t chunk = t->shape[ax] * inner;
        for (std::int64_t o = 0; o < outer; ++o) {
            std::copy_n(t->data.begin() + o * chunk, chunk, out.data.begin() + o * shape[ax] * inner + offset);
        }
        offset += chunk;
    }
    return out;
}

// Applies fn to each 1-D lane along `axis`.
template <typename Fn>
Tensor along_axis(const Tensor& x, std::int64_t axis, Fn&& fn)
{
    axis = normalize_axis(axis, x.rank());
    const auto ax = static_cast<std::size_t>(axis);
    std::int64_t outer = 1;
    for (std::size_t i = 0; i < ax; ++i) outer *= x.shape[i];
    std::int64_t inner = 1;
    for (std::size_t i = ax + 1; i < x.rank(); ++i) inner *= x.shape[i];
    const std::int64_t len = x.shape[ax];
    Tensor out = x;
    std::vector<double> lane(static_cast<std::size_t>(len));
    for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t i = 0; i < inner; ++i) {
            for (std::int64_t j = 0; j < len; ++j) lane[static_cast<std::size_t>(j)] = x.data[static_cast<std::size_t>((o * len + j) * inner + i)];
            fn(lane);
            for (std::int64_t j = 0; j < len; ++j) out.data[static_cast<std::size_t>((o * len + j) * inner + i)] = lane[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

Tensor softmax(const Tensor& x, std::int64_t axis)
{
    return along_axis(x, axis, [](std::vector<double>& lane) {
        const double mx = *std::max_element(lane.begin(), lane.end());
        double sum = 0.0;
        for (double& v : lane) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : lane) v /= sum;
    });
}

Tensor reduce_mean(const Tensor& x, std::vector<std::int64_t> axes, bool keepdims)
{
    if (axes.empty()) {
        for (std::size_t i = 0; i < x.rank(); ++i) axes.push_back(static_cast<std::int64_t>(i));
    }
    std::vector<char> reduce(x.rank(), 0);
    for (auto a : axes) reduce[static_cast<std::size_t>(normalize_axis(a, x.rank()))] = 1;
    Shape kept = x.shape;
    for (std::size_t i = 0; i < x.rank(); ++i) {
        if (reduce[i]) kept[i] = 1;
    }
    Tensor out(kept);
    const auto out_strides = strides_of(kept);
    std::vector<std::int64_t> index(x.rank(), 0);
    for (std::size_t flat = 0; flat < x.data.size(); ++flat) {
        std::int64_t o = 0;
        for (std::size_t d = 0; d < x.rank(); ++d) o += (reduce[d] ? 0 : index[d]) * out_strides[d];
        out.data[static_cast<std::size_t>(o)] += x.data[flat];
        for (std::size_t d = x.rank(); d-- > 0;) {
            if (++index[d] < x.shape[d]) break;
            index[d] = 0;
        }
    }
    const double count = static_cast<double>(x.numel()) / static_cast<double>(out.numel());
    for (double& v : out.data) v /= count;
    if (!keepdims) {
        Shape squeezed;
        for (std::size_t i = 0; i < x.rank(); ++i) {
            if (!reduce[i]) squeezed.push_back(x.shape[i]);
        }
        out.shape = squeezed;
    }
    return out;
}

Tensor layer_norm(const Inputs& in, const Attributes& attrs)
{
    const Tensor& x = require(in, 0);
    const Tensor& scale = require(in, 1);
    const Tensor* bias = in.size() > 2 ? in[2] : nullptr;
    const double eps = attrs.get_float("epsilon", 1e-5);
    const std::int64_t axis = normalize_axis(attrs.get_int("axis", -1), x.rank());
    std::int64_t outer = 1;
    for (std::int64_t i = 0; i < axis; ++i) outer *= x.shape[static_cast<std::size_t>(i)];
    const std::int64_t len = x.numel() / outer;
    if (scale.numel() != len || (bias && bias->numel() != len)) fail("LayerNormalization scale/bias size mismatch");
    Tensor out = x;
    for (std::int64_t o = 0; o < outer; ++o) {
        double* p = out.data.data() + o * len;
        double mean = 0.0;
        for (std::int64_t i = 0; i < len; ++i) mean += p[i];
        mean /= static_cast<double>(len);
        double var = 0.0;
        for (std::int64_t i = 0; i < len; ++i) var += (p[i] - mean) * (p[i] - mean);
        var /= static_cast<double>(len);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::int64_t i = 0; i < len; ++i) {
            const auto k = static_cast<std::size_t>(i);
            p[i] = (p[i] - mean) * inv * scale.data[k] + (bias ? bias->data[k] : 0.0);
        }
    }
    return out;
}

Tensor clip(const Inputs& in, const Attributes& attrs)
{
    const Tensor& x = require(in, 0);
    double lo = attrs.get_float("min", -std::numeric_limits<double>::infinity());
    double hi = attrs.get_float("max", std::numeric_limits<double>::infinity());
    if (in.size() > 1 && in[1]) lo = in[1]->data.at(0);
    if (in.size() > 2 && in[2]) hi = in[2]->data.at(0);
    return unary(x, [=](double v) { return std::clamp(v, lo, hi); });
}

using Kernel = std::function<std::vector<Tensor>(const Node&, const Inputs&)>;

const std::unordered_map<std::string, Kernel>& kernels()
{
    static const std::unordered_map<std::string, Kernel> table = [] {
        std::unordered_map<std::string, Kernel> t;
        const auto one = [](Tensor x) { return std::vector<Tensor>{std::move(x)}; };
        t["Identity"] = [=](const Node&, const Inputs& in) { return one(require(in, 0)); };
        t["Dropout"] = t["Identity"];
        t["Relu"] = [=](const Node&, const Inputs& in) {
            return one(unary(require(in, 0), [](double v) { return v > 0.0 ? v : 0.0; }));
        };
        t["Sigmoid"] = [=](const Node&, const Inputs& in) {
            return one(unary(require(in, 0), [](double v) { return 1.0 / (1.0 + std::exp(-v)); }));
        };
        t["Tanh"] = [=](const Node&, const Inputs& in) { return one(unary(require(in, 0), [](double v) { return std::tanh(v); })); };
        t["Erf"] = [=](const Node&, const Inputs& in) { return one(unary(require(in, 0), [](double v) { return std::erf(v); })); };
        t["Sqrt"] = [=](const Node&, const Inputs& in) { return one(unary(require(in, 0), [](double v) { return std::sqrt(v); })); };
        t["Add"] = [=](const Node&, const Inputs& in) { return one(binary(require(in, 0), require(in, 1), std::plus<>())); };
        t["Sub"] = [=](const Node&, const Inputs& in) { return one(binary(require(in, 0), require(in, 1), std::minus<>())); };
        t["Mul"] = [=](const Node&, const Inputs& in) { return one(binary(require(in, 0), require(in, 1), std::multiplies<>())); };
        t["Div"] = [=](const Node&, const Inputs& in) { return one(binary(require(in, 0), require(in, 1), std::divides<>())); };
        t["Pow"] = [=](const Node&, const Inputs& in) {
            return one(binary(require(in, 0), require(in, 1), [](double a, double b) { return std::pow(a, b); }));
        };
        t["Conv"] = [=](const Node& n, const Inputs& in) { return one(conv(in, n.attributes)); };
        t["MaxPool"] = [=](const Node& n, const Inputs& in) { return one(pool(in, n.attributes, true)); };
        t["AveragePool"] = [=](const Node& n, const Inputs& in) { return one(pool(in, n.attributes, false)); };
        t["GlobalAveragePool"] = [=](const Node&, const Inputs& in) { return one(global_average_pool(require(in, 0))); };
        t["BatchNormalization"] = [=](const Node& n, const Inputs& in) { return one(batch_norm(in, n.attributes)); };
        t["LayerNormalization"] = [=](const Node& n, const Inputs& in) { return one(layer_norm(in, n.attributes)); };
        t["Gemm"] = [=](const Node& n, const Inputs& in) { return one(gemm(in, n.attributes)); };
        t["MatMul"] = [=](const Node&, const Inputs& in) { return one(matmul(require(in, 0), require(in, 1))); };
        t["Flatten"] = [=](const Node& n, const Inputs& in) {
            return one(flatten(require(in, 0), n.attributes.get_int("axis", 1)));
        };
        t["Reshape"] = [=](const Node& n, const Inputs& in) {
            return one(reshape(require(in, 0), require(in, 1), n.attributes.get_int("allowzero", 0) != 0));
        };
        t["Transpose"] = [=](const Node& n, const Inputs& in) {
            return one(transpose(require(in, 0), n.attributes.get_ints("perm", {})));
        };
        t["Concat"] = [=](const Node& n, const Inputs& in) { return one(concat(in, n.attributes.get_int("axis", 0))); };
        t["Softmax"] = [=](const Node& n, const Inputs& in) { return one(softmax(require(in, 0), n.attributes.get_int("axis", -1))); };
        t["ReduceMean"] = [=](const Node& n, const Inputs& in) {
            auto axes = n.attributes.get_ints("axes", {});
            if (in.size() > 1 && in[1]) {
                axes.clear();
                for (double v : in[1]->data) axes.push_back(static_cast<std::int64_t>(v));
            }
            return one(reduce_mean(require(in, 0), axes, n.attributes.get_int("keepdims", 1) != 0));
        };
        t["Clip"] = [=](const Node& n, const Inputs& in) { return one(clip(in, n.attributes)); };
        t["Constant"] = [=](const Node& n, const Inputs&) {
            if (const Tensor* v = n.attributes.get_tensor("value")) return one(*v);
            if (n.attributes.has("value_float")) return one(Tensor({}, {n.attributes.get_float("value_float", 0.0)}));
            if (n.attributes.has("value_int")) {
                return one(Tensor({}, {static_cast<double>(n.attributes.get_int("value_int", 0))}));
            }
            fail("Constant node without a supported value attribute");
        };
        return t;
    }();
    return table;
}

}  // namespace

bool is_supported_operator(std::string_view op_type)
{
    return kernels().count(std::string(op_type)) > 0;
}

std::vector<Tensor> run_operator(const Node& node, const std::vector<const Tensor*>& inputs)
{
    const auto& table = kernels();
    auto it = table.find(node.op_type);
    if (it == table.end()) fail("unsupported operator " + node.op_type);
    return it->second(node, inputs);
}

}  // namespace nframe::onnx_rt
