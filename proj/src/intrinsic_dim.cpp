#include "nframe/intrinsic_dim.hpp"

#include "nframe/error.hpp"
#include "nframe/parallel.hpp"
#include "nframe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace nframe::idim {

using linalg::Matrix;

std::string to_string(Estimator e)
{
    return e == Estimator::TwoNN ? "twonn" : "mle";
}

Estimator parse_estimator(const std::string& name)
{
    if (name == "twonn") return Estimator::TwoNN;
    if (name == "mle") return Estimator::Mle;
    throw Error(ErrorKind::Config, "unknown intrinsic-dimension estimator '" + name + "' (twonn, mle)");
}

Matrix unique_rows(const Matrix& points, std::size_t* removed)
{
    const Eigen::Index n = points.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto less = [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index c = 0; c < points.cols(); ++c) {
            if (points(a, c) != points(b, c)) return points(a, c) < points(b, c);
        }
        return a < b;
    };
    std::sort(order.begin(), order.end(), less);
    std::vector<char> keep(static_cast<std::size_t>(n), 1);
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (points.row(order[i]) == points.row(order[i - 1])) keep[static_cast<std::size_t>(order[i])] = 0;
    }
    const auto kept = static_cast<Eigen::Index>(std::count(keep.begin(), keep.end(), 1));
    if (removed) *removed = static_cast<std::size_t>(n - kept);
    Matrix out(kept, points.cols());
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (keep[static_cast<std::size_t>(i)]) out.row(r++) = points.row(i);
    }
    return out;
}

Matrix knn_distances(const Matrix& points, int k, int jobs)
{
    const Eigen::Index n = points.rows();
    if (k < 1 || k >= n) {
        throw Error(ErrorKind::Config, fmt::format("need more than {} points for {} neighbours, got {}", k, k, n));
    }
    const Matrix pts = points.transpose();  // column access per point
    Matrix out(n, k);
    parallel_for(static_cast<std::size_t>(n), jobs, [&](std::size_t ui) {
        const auto i = static_cast<Eigen::Index>(ui);
        std::vector<double> d2;
        d2.reserve(static_cast<std::size_t>(n - 1));
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i) d2.push_back((pts.col(j) - pts.col(i)).squaredNorm());
        }
        std::partial_sort(d2.begin(), d2.begin() + k, d2.end());
        for (int j = 0; j < k; ++j) out(i, j) = std::sqrt(d2[static_cast<std::size_t>(j)]);
    });
    return out;
}

namespace {

Matrix prepare(const Matrix& points, IdEstimate& est)
{
    linalg::require_finite(points, "intrinsic-dimension points");
    Matrix unique = unique_rows(points, &est.duplicates_removed);
    if (est.duplicates_removed > 0) {
        est.warnings.push_back(fmt::format("removed {} duplicate points", est.duplicates_removed));
    }
    if (unique.rows() < 2) {
        throw Error(ErrorKind::Degenerate, "all points are identical");
    }
    est.points = static_cast<std::size_t>(unique.rows());
    return unique;
}

}  // namespace

IdEstimate twonn_id(const Matrix& points, double discard_fraction, int jobs)
{
    if (!(discard_fraction >= 0.0 && discard_fraction < 1.0)) {
        throw Error(ErrorKind::Config, "discard fraction must lie in [0, 1)");
    }
    IdEstimate est;
    est.estimator = Estimator::TwoNN;
    est.discard_fraction = discard_fraction;
    if (points.rows() < 100) {
        throw Error(ErrorKind::Config, fmt::format("TwoNN needs at least 100 points, got {}", points.rows()));
    }
    const Matrix pts = prepare(points, est);
    if (pts.rows() < 3) throw Error(ErrorKind::Degenerate, "TwoNN needs at least 3 distinct points");
    const Matrix nn = knn_distances(pts, 2, jobs);

    std::vector<double> mu(static_cast<std::size_t>(pts.rows()));
    for (Eigen::Index i = 0; i < pts.rows(); ++i) mu[static_cast<std::size_t>(i)] = nn(i, 1) / nn(i, 0);
    std::sort(mu.begin(), mu.end());

    const double n = static_cast<double>(mu.size());
    const auto kept = static_cast<std::size_t>(std::floor(n * (1.0 - discard_fraction)));
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < kept; ++i) {
        const double x = std::log(mu[i]);
        const double y = -std::log(1.0 - static_cast<double>(i + 1) / n);
        sxy += x * y;
        sxx += x * x;
    }
    if (!(sxx > 0.0)) throw Error(ErrorKind::Degenerate, "TwoNN: all neighbour ratios are 1");
    est.value = sxy / sxx;
    return est;
}

IdEstimate mle_id(const Matrix& points, int k_neighbors, int jobs)
{
    if (k_neighbors < 2) throw Error(ErrorKind::Config, "MLE needs k_neighbors >= 2");
    IdEstimate est;
    est.estimator = Estimator::Mle;
    est.k_neighbors = k_neighbors;
    if (points.rows() <= k_neighbors) {
        throw Error(ErrorKind::Config,
                    fmt::format("MLE needs more than {} points, got {}", k_neighbors, points.rows()));
    }
    const Matrix pts = prepare(points, est);
    if (pts.rows() <= k_neighbors) {
        throw Error(ErrorKind::Config, fmt::format("only {} distinct points for k = {}", pts.rows(), k_neighbors));
    }
    const Matrix nn = knn_distances(pts, k_neighbors, jobs);
    double total = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        const double tk = nn(i, k_neighbors - 1);
        double s = 0.0;
        for (int j = 0; j < k_neighbors - 1; ++j) s += std::log(tk / nn(i, j));
        s /= static_cast<double>(k_neighbors - 1);
        if (!(s > 0.0)) throw Error(ErrorKind::Degenerate, "MLE: equal neighbour distances at a point");
        total += 1.0 / s;
    }
    est.value = total / static_cast<double>(pts.rows());
    return est;
}

namespace {

Matrix uniform_matrix(std::size_t rows, int cols, GaussianStream& rng)
{
    Matrix m(static_cast<Eigen::Index>(rows), cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform();
    }
    return m;
}

Matrix orthonormal_frame(int ambient, int dim, GaussianStream& rng)
{
    Matrix g(ambient, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        for (Eigen::Index i = 0; i < ambient; ++i) g(i, j) = rng.next();
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ() * Matrix::Identity(ambient, dim);
}

Matrix embedded(std::size_t count, int dim, int ambient, std::uint64_t seed, const char* purpose)
{
    if (ambient < dim) throw Error(ErrorKind::Config, "ambient dimension is below the manifold dimension");
    GaussianStream rng(derive_seed(seed, purpose));
    const Matrix basis = orthonormal_frame(ambient, dim, rng);
    return uniform_matrix(count, dim, rng) * basis.transpose();
}

}  // namespace

Matrix sample_plane(std::size_t count, int ambient, std::uint64_t seed)
{
    return embedded(count, 2, ambient, seed, "idim_plane");
}

Matrix sample_line(std::size_t count, int ambient, std::uint64_t seed)
{
    return embedded(count, 1, ambient, seed, "idim_line");
}

Matrix sample_hypercube(std::size_t count, int dim, std::uint64_t seed)
{
    GaussianStream rng(derive_seed(seed, "idim_cube"));
    return uniform_matrix(count, dim, rng);
}

}  // namespace nframe::idim
