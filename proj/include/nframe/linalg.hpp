#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace nframe::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Singular values sorted non-increasing; length min(rows, cols) of the source.
struct SingularSpectrum {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    bool all_zero() const noexcept;
    // values[i] / values[0]; 0 when the spectrum is all zero.
    double relative(std::size_t i) const noexcept;
};

// Throws Error(InvalidInput) if `m` is empty or holds NaN/Inf.
void require_finite(const Matrix& m, std::string_view what);

// Computed from the eigenvalues of the smaller Gram matrix (AᵀA or AAᵀ), which
// is cheap for the tall-skinny frame matrices this library works with.
SingularSpectrum singular_values(const Matrix& a);

double spectral_norm(const Matrix& a);

// ‖A‖_F² / ‖A‖_2². Throws Error(UndefinedStableRank) for the zero matrix.
double stable_rank(const Matrix& a);

// Xc·Xcᵀ where Xc has each column centered over the rows. Rows are samples
// (frame vectors); the result is rows×rows regardless of feature count.
Matrix centered_gram(const Matrix& x);

// Linear CKA between X (k×p) and Y (k×q): ‖Cov(X,Y)‖_F² / (‖Cov(X,X)‖_F ‖Cov(Y,Y)‖_F)
// with columns centered over the k rows. Throws Error(Shape) on row mismatch and
// Error(Degenerate) when either side has no variance.
double linear_cka(const Matrix& x, const Matrix& y);

// Same statistic from precomputed centered_gram() outputs; lets callers reuse a
// Gram across many tap pairs.
double linear_cka_from_grams(const Matrix& gram_x, const Matrix& gram_y);

struct MappedFrame {
    Matrix vectors;
    Eigen::Index input_rank = 0;
    bool rank_deficient = false;
};

// Maps span(V) isometrically onto a random k-dimensional subspace of R^n. The
// target basis W comes from the QR factorisation of a seeded n×k Gaussian; the
// source basis U from a pivoted QR of V (padded by the QR's own completion when
// V is rank deficient). map_frame returns W·UᵀV, which has the same Gram as V.
class RandomSubspaceIsometry {
public:
    RandomSubspaceIsometry(Eigen::Index ambient_dim, Eigen::Index frame_size, std::uint64_t seed);

    MappedFrame map_frame(const Matrix& v) const;

    const Matrix& target_basis() const noexcept { return target_; }

private:
    Matrix target_;
};

// Adaptive Simpson quadrature with interval halving to the given local tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tolerance,
                        int max_depth = 50);

// Large-n coefficient c in E[r(I_n + W)] ≈ c·n for W with i.i.d. N(0, 2/n)
// entries, modelling the residual layer's singular values as 1 + σ_i(W) with
// σ following the quarter-circle law on [0, 2√2]. ≈ 0.36849.
double mp_residual_coefficient();

// Same limit for W alone: ∫ y² ρ(y) dy / (2√2)² = 1/4.
double mp_weight_coefficient();

struct ResidualStableRank {
    double residual_mean = 0.0;  // mean of r(I+W)/n
    double weight_mean = 0.0;    // mean of r(W)/n
    std::vector<double> residual_trials;
    std::vector<double> weight_trials;
};

// Monte Carlo estimate of the two coefficients above. Each trial draws from its
// own stream derived from (seed, trial) so `jobs` has no effect on the result.
ResidualStableRank mc_residual_stable_rank(int n, int trials, std::uint64_t seed, int jobs = 1);

}  // namespace nframe::linalg
