#pragma once

// Shared helpers and reference implementations for the test binaries.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nframe/fixture.hpp"
#include "nframe/onnx_graph.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using Matrix = Eigen::MatrixXd;

inline fs::path data_dir()
{
    return NFRAME_TEST_DATA;
}

inline fs::path natural_dir()
{
    return data_dir() / "natural";
}

inline fs::path cli_path()
{
    return NFRAME_CLI_PATH;
}

// Fresh, empty scratch directory under the build tree.
inline fs::path scratch(const std::string& name)
{
    const fs::path p = fs::path(NFRAME_TEST_TMP) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

inline std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct RunResult {
    int status = -1;
    std::string out;
    std::string err;
};

// Runs the CLI with `args` (already shell-quoted where needed).
inline RunResult run_cli(const std::string& args, const fs::path& workdir)
{
    const fs::path out = workdir / "stdout.txt";
    const fs::path err = workdir / "stderr.txt";
    const std::string cmd = "\"" + cli_path().string() + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                            err.string() + "\"";
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

// Largest singular value by power iteration on AᵀA.
inline double power_sigma1(const Matrix& a, int iterations = 2000)
{
    Eigen::VectorXd v = Eigen::VectorXd::Ones(a.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += 0.01 * static_cast<double>(i % 7);
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Eigen::VectorXd w = a.transpose() * (a * v);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        const double next = v.dot(w);
        v = w / norm;
        if (std::abs(next - lambda) <= 1e-15 * std::abs(next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return std::sqrt(lambda);
}

// All singular values by power iteration with deflation on AᵀA.
inline std::vector<double> power_singular_values(const Matrix& a)
{
    Matrix g = a.transpose() * a;
    std::vector<double> out;
    for (Eigen::Index k = 0; k < std::min(a.rows(), a.cols()); ++k) {
        Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(g.cols(), 1.0, 2.0);
        v.normalize();
        double lambda = 0.0;
        for (int it = 0; it < 20000; ++it) {
            Eigen::VectorXd w = g * v;
            const double norm = w.norm();
            if (norm == 0.0) {
                lambda = 0.0;
                break;
            }
            const double next = v.dot(w);
            v = w / norm;
            if (std::abs(next - lambda) <= 1e-14 * std::abs(next)) {
                lambda = next;
                break;
            }
            lambda = next;
        }
        out.push_back(std::sqrt(std::max(lambda, 0.0)));
        g -= lambda * v * v.transpose();
    }
    return out;
}

inline double oracle_stable_rank(const Matrix& a)
{
    double fro = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) fro += a(i, j) * a(i, j);
    }
    const double s1 = power_sigma1(a);
    return fro / (s1 * s1);
}

// Linear CKA in feature space: ‖XcᵀYc‖² / (‖XcᵀXc‖ ‖YcᵀYc‖), rows are samples.
inline double oracle_cka(const Matrix& x, const Matrix& y)
{
    const Matrix xc = x.rowwise() - x.colwise().mean();
    const Matrix yc = y.rowwise() - y.colwise().mean();
    const double cross = (xc.transpose() * yc).squaredNorm();
    return cross / ((xc.transpose() * xc).norm() * (yc.transpose() * yc).norm());
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
    }
    return m;
}

inline Matrix random_orthogonal(Eigen::Index n, std::mt19937_64& rng)
{
    Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, rng));
    return qr.householderQ();
}

// Jacobian action of the affine fixture graph (Sub/Div, 3x3 conv pad 1,
// 2x2 average pool, dense) written as plain loops over the stored weights.
// Taps: 1 conv output, 2 pooled map, 3 dense output. `v` is C×H×W planar.
struct LinearFixtureOracle {
    const nframe::onnx_rt::Graph& graph;
    int side = 64;
    int channels = 8;

    std::vector<Eigen::VectorXd> apply(const Eigen::VectorXd& v) const
    {
        const auto& stdv = *graph.initializer("norm.std");
        const auto& w = *graph.initializer("conv1.weight");
        const auto& fc = *graph.initializer("fc.weight");
        const int s = side;
        std::vector<double> normalized(static_cast<std::size_t>(3 * s * s));
        for (int c = 0; c < 3; ++c) {
            for (int i = 0; i < s * s; ++i) normalized[c * s * s + i] = v(c * s * s + i) / stdv.data[c];
        }
        Eigen::VectorXd conv = Eigen::VectorXd::Zero(channels * s * s);
        for (int o = 0; o < channels; ++o) {
            for (int y = 0; y < s; ++y) {
                for (int x = 0; x < s; ++x) {
                    double acc = 0.0;
                    for (int c = 0; c < 3; ++c) {
                        for (int ky = 0; ky < 3; ++ky) {
                            for (int kx = 0; kx < 3; ++kx) {
                                const int yy = y + ky - 1;
                                const int xx = x + kx - 1;
                                if (yy < 0 || yy >= s || xx < 0 || xx >= s) continue;
                                acc += w.data[((o * 3 + c) * 3 + ky) * 3 + kx] * normalized[(c * s + yy) * s + xx];
                            }
                        }
                    }
                    conv(o * s * s + y * s + x) = acc;
                }
            }
        }
        const int h = s / 2;
        Eigen::VectorXd pooled(channels * h * h);
        for (int o = 0; o < channels; ++o) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < h; ++x) {
                    double acc = 0.0;
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) acc += conv(o * s * s + (2 * y + dy) * s + 2 * x + dx);
                    }
                    pooled(o * h * h + y * h + x) = acc / 4.0;
                }
            }
        }
        const auto latent = fc.shape[0];
        const auto in = fc.shape[1];
        Eigen::VectorXd dense(latent);
        for (std::int64_t r = 0; r < latent; ++r) {
            double acc = 0.0;
            for (std::int64_t c = 0; c < in; ++c) acc += fc.data[static_cast<std::size_t>(r * in + c)] * pooled(c);
            dense(r) = acc;
        }
        return {conv, pooled, dense};
    }
};

}  // namespace testsupport
