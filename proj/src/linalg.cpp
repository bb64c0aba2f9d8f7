#include "nframe/linalg.hpp"

#include "nframe/error.hpp"
#include "nframe/parallel.hpp"
#include "nframe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace nframe::linalg {

bool SingularSpectrum::all_zero() const noexcept
{
    return values.empty() || values.front() == 0.0;
}

double SingularSpectrum::relative(std::size_t i) const noexcept
{
    if (all_zero() || i >= values.size()) return 0.0;
    return values[i] / values.front();
}

void require_finite(const Matrix& m, std::string_view what)
{
    if (m.size() == 0) {
        throw Error(ErrorKind::InvalidInput, std::string(what) + ": empty matrix");
    }
    if (!m.allFinite()) {
        throw Error(ErrorKind::InvalidInput, std::string(what) + ": non-finite entries");
    }
}

SingularSpectrum singular_values(const Matrix& a)
{
    require_finite(a, "singular_values");
    const Matrix gram = a.rows() >= a.cols() ? Matrix(a.transpose() * a) : Matrix(a * a.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw Error(ErrorKind::InvalidInput, "singular_values: eigendecomposition failed");
    }
    const Vector& lambda = eig.eigenvalues();  // ascending
    SingularSpectrum out;
    out.values.reserve(static_cast<std::size_t>(lambda.size()));
    for (Eigen::Index i = lambda.size() - 1; i >= 0; --i) {
        out.values.push_back(std::sqrt(std::max(0.0, lambda(i))));
    }
    return out;
}

double spectral_norm(const Matrix& a)
{
    return singular_values(a).values.front();
}

double stable_rank(const Matrix& a)
{
    const double sigma1 = spectral_norm(a);
    if (sigma1 == 0.0) {
        throw Error(ErrorKind::UndefinedStableRank, "stable_rank: zero matrix has no stable rank");
    }
    const double ratio = a.squaredNorm() / (sigma1 * sigma1);
    // The Gram route can put σ1² a few ulps above ‖A‖_F² for rank-1 input.
    return std::max(1.0, ratio);
}

Matrix centered_gram(const Matrix& x)
{
    require_finite(x, "centered_gram");
    const Matrix centered = x.rowwise() - x.colwise().mean();
    return centered * centered.transpose();
}

namespace {

void require_variance(const Matrix& x, const Matrix& gram, std::string_view side)
{
    // Constant columns centre to rounding noise, not exact zeros.
    const double scale = x.squaredNorm();
    if (gram.trace() <= 1e-24 * scale || gram.trace() == 0.0) {
        throw Error(ErrorKind::Degenerate,
                    "linear_cka: " + std::string(side) + " has zero covariance after centering");
    }
}

}  // namespace

double linear_cka_from_grams(const Matrix& gram_x, const Matrix& gram_y)
{
    if (gram_x.rows() != gram_y.rows() || gram_x.cols() != gram_y.cols()) {
        throw Error(ErrorKind::Shape, "linear_cka: Gram shapes differ");
    }
    const double norm_x = gram_x.norm();
    const double norm_y = gram_y.norm();
    if (norm_x == 0.0 || norm_y == 0.0) {
        throw Error(ErrorKind::Degenerate, "linear_cka: zero covariance");
    }
    // ‖XcᵀYc‖_F² = tr(Xc Xcᵀ Yc Ycᵀ), ‖XcᵀXc‖_F = ‖Xc Xcᵀ‖_F
    const double cross = (gram_x.array() * gram_y.array()).sum();
    return cross / (norm_x * norm_y);
}

double linear_cka(const Matrix& x, const Matrix& y)
{
    if (x.rows() != y.rows()) {
        throw Error(ErrorKind::Shape, "linear_cka: row counts differ (" + std::to_string(x.rows()) + " vs " +
                                          std::to_string(y.rows()) + ")");
    }
    if (x.rows() < 2) {
        throw Error(ErrorKind::Shape, "linear_cka: need at least two rows");
    }
    const Matrix gx = centered_gram(x);
    const Matrix gy = centered_gram(y);
    require_variance(x, gx, "X");
    require_variance(y, gy, "Y");
    return linear_cka_from_grams(gx, gy);
}

RandomSubspaceIsometry::RandomSubspaceIsometry(Eigen::Index ambient_dim, Eigen::Index frame_size,
                                               std::uint64_t seed)
{
    if (frame_size < 1 || frame_size > ambient_dim) {
        throw Error(ErrorKind::InvalidInput, "random_subspace_isometry: need 1 <= k <= n");
    }
    GaussianStream stream(derive_seed(seed, "subspace_isometry"));
    Matrix sample(ambient_dim, frame_size);
    for (Eigen::Index j = 0; j < frame_size; ++j) {
        for (Eigen::Index i = 0; i < ambient_dim; ++i) sample(i, j) = stream.next();
    }
    Eigen::HouseholderQR<Matrix> qr(sample);
    target_ = qr.householderQ() * Matrix::Identity(ambient_dim, frame_size);
}

MappedFrame RandomSubspaceIsometry::map_frame(const Matrix& v) const
{
    require_finite(v, "random_subspace_isometry");
    if (v.rows() != target_.rows() || v.cols() != target_.cols()) {
        throw Error(ErrorKind::Shape, "random_subspace_isometry: frame must be " + std::to_string(target_.rows()) +
                                          "x" + std::to_string(target_.cols()));
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(v);
    // Columns of Q beyond rank(V) complete span(V) to k dimensions.
    const Matrix source = qr.householderQ() * Matrix::Identity(v.rows(), v.cols());
    MappedFrame out;
    out.vectors = target_ * (source.transpose() * v);
    out.input_rank = qr.rank();
    out.rank_deficient = out.input_rank < v.cols();
    return out;
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tolerance, int depth)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tolerance) {
        return left + right + delta / 15.0;
    }
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tolerance, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tolerance, depth - 1);
}

constexpr double kQuarterCircleEdge = 2.0 * std::numbers::sqrt2;

// Quarter-circle density of singular values of an n×n matrix with N(0, 2/n) entries.
double quarter_circle(double y)
{
    return std::sqrt(std::max(0.0, 8.0 - y * y)) / (2.0 * std::numbers::pi);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tolerance, int max_depth)
{
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, tolerance, max_depth);
}

double mp_residual_coefficient()
{
    const double integral = adaptive_simpson(
        [](double y) { return (1.0 + y) * (1.0 + y) * quarter_circle(y); }, 0.0, kQuarterCircleEdge, 1e-8);
    const double top = 1.0 + kQuarterCircleEdge;
    return integral / (top * top);
}

double mp_weight_coefficient()
{
    const double integral =
        adaptive_simpson([](double y) { return y * y * quarter_circle(y); }, 0.0, kQuarterCircleEdge, 1e-8);
    return integral / (kQuarterCircleEdge * kQuarterCircleEdge);
}

ResidualStableRank mc_residual_stable_rank(int n, int trials, std::uint64_t seed, int jobs)
{
    if (n < 1 || trials < 1) {
        throw Error(ErrorKind::InvalidInput, "mc_residual_stable_rank: n and trials must be positive");
    }
    ResidualStableRank out;
    out.residual_trials.assign(static_cast<std::size_t>(trials), 0.0);
    out.weight_trials.assign(static_cast<std::size_t>(trials), 0.0);
    const double stddev = std::sqrt(2.0 / n);

    parallel_for(static_cast<std::size_t>(trials), jobs, [&](std::size_t t) {
        GaussianStream stream(derive_seed(seed, "mc_residual", t));
        Matrix w(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) w(i, j) = stddev * stream.next();
        }
        const auto sigma = singular_values(w).values;
        const double top = 1.0 + sigma.front();
        double shifted = 0.0;
        double plain = 0.0;
        for (double s : sigma) {
            shifted += (1.0 + s) * (1.0 + s);
            plain += s * s;
        }
        out.residual_trials[t] = shifted / (top * top) / n;
        out.weight_trials[t] = plain / (sigma.front() * sigma.front()) / n;
    });

    for (int t = 0; t < trials; ++t) {
        out.residual_mean += out.residual_trials[static_cast<std::size_t>(t)];
        out.weight_mean += out.weight_trials[static_cast<std::size_t>(t)];
    }
    out.residual_mean /= trials;
    out.weight_mean /= trials;
    return out;
}

}  // namespace nframe::linalg
