#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "nframe/error.hpp"
#include "nframe/linalg.hpp"
#include "nframe/rng.hpp"
#include "support.hpp"

using namespace nframe;
using linalg::Matrix;
using testsupport::random_matrix;

TEST_SUITE("linalg")
{
    TEST_CASE("stable rank of simple matrices")
    {
        for (int k = 1; k <= 12; ++k) CHECK(linalg::stable_rank(Matrix::Identity(k, k)) == doctest::Approx(k).epsilon(1e-12));

        Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(30, -1.0, 2.0);
        Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(5, 0.5, 3.0);
        CHECK(linalg::stable_rank(u * v.transpose()) == doctest::Approx(1.0).epsilon(1e-12));

        Matrix d = Matrix::Zero(2, 2);
        d(0, 0) = 2.0;
        d(1, 1) = 1.0;
        CHECK(linalg::stable_rank(d) == doctest::Approx(1.25).epsilon(1e-12));
    }

    TEST_CASE("stable rank agrees with a power-iteration oracle")
    {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 40; ++trial) {
            const auto rows = 1 + static_cast<Eigen::Index>(rng() % 60);
            const auto cols = 1 + static_cast<Eigen::Index>(rng() % 20);
            const Matrix a = random_matrix(rows, cols, rng);
            CHECK(linalg::stable_rank(a) == doctest::Approx(testsupport::oracle_stable_rank(a)).epsilon(1e-8));
        }
    }

    TEST_CASE("singular values match deflated power iteration")
    {
        std::mt19937_64 rng(5);
        // Well separated spectrum so the oracle converges quickly.
        const Matrix u = testsupport::random_orthogonal(12, rng).leftCols(4);
        const Matrix v = testsupport::random_orthogonal(4, rng);
        const Eigen::Vector4d s(9.0, 4.0, 2.0, 0.5);
        const Matrix a = u * s.asDiagonal() * v.transpose();
        const auto spec = linalg::singular_values(a);
        const auto oracle = testsupport::power_singular_values(a);
        REQUIRE(spec.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(spec.values[i] == doctest::Approx(oracle[i]).epsilon(1e-8));
            CHECK(spec.values[i] == doctest::Approx(s(static_cast<Eigen::Index>(i))).epsilon(1e-10));
        }
        CHECK(spec.relative(1) == doctest::Approx(4.0 / 9.0));
        CHECK(linalg::spectral_norm(a) == doctest::Approx(9.0));
    }

    TEST_CASE("stable rank is scale invariant and bounded")
    {
        std::mt19937_64 rng(3);
        const Matrix a = random_matrix(50, 8, rng);
        const double r = linalg::stable_rank(a);
        for (double c : {1e-6, 0.37, 3.0, 1e5}) {
            CHECK(std::abs(linalg::stable_rank(c * a) - r) <= 1e-12 * r);
        }
        CHECK(r >= 1.0);
        CHECK(r <= 8.0 + 1e-12);
    }

    TEST_CASE("stable rank errors")
    {
        CHECK_THROWS_AS(linalg::stable_rank(Matrix::Zero(4, 3)), Error);
        try {
            linalg::stable_rank(Matrix::Zero(4, 3));
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::UndefinedStableRank);
        }
        Matrix bad = Matrix::Ones(3, 3);
        bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
        try {
            linalg::stable_rank(bad);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::InvalidInput);
        }
        CHECK_THROWS_AS(linalg::stable_rank(Matrix(0, 0)), Error);
    }

    TEST_CASE("stable rank of a product obeys the spectral bound")
    {
        std::mt19937_64 rng(99);
        for (int trial = 0; trial < 200; ++trial) {
            const auto l = 1 + static_cast<Eigen::Index>(rng() % 20);
            const auto m = 1 + static_cast<Eigen::Index>(rng() % 20);
            const auto n = 1 + static_cast<Eigen::Index>(rng() % 20);
            const Matrix a = random_matrix(l, m, rng);
            const Matrix b = random_matrix(m, n, rng);
            const Matrix ab = a * b;
            const double factor = linalg::spectral_norm(a) * linalg::spectral_norm(b) / linalg::spectral_norm(ab);
            const double bound = factor * factor * std::min(linalg::stable_rank(a), linalg::stable_rank(b));
            CHECK(linalg::stable_rank(ab) <= bound + 1e-9);
        }
    }

    TEST_CASE("linear CKA matches the feature-space formula")
    {
        std::mt19937_64 rng(21);
        for (int trial = 0; trial < 20; ++trial) {
            const auto k = 3 + static_cast<Eigen::Index>(rng() % 20);
            const Matrix x = random_matrix(k, 1 + static_cast<Eigen::Index>(rng() % 40), rng);
            const Matrix y = random_matrix(k, 1 + static_cast<Eigen::Index>(rng() % 40), rng);
            CHECK(linalg::linear_cka(x, y) == doctest::Approx(testsupport::oracle_cka(x, y)).epsilon(1e-10));
            const double v = linalg::linear_cka(x, y);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0 + 1e-12);
        }
    }

    TEST_CASE("linear CKA invariances")
    {
        std::mt19937_64 rng(8);
        const Matrix x = random_matrix(19, 30, rng);
        const Matrix y = random_matrix(19, 12, rng);
        CHECK(std::abs(linalg::linear_cka(x, x) - 1.0) <= 1e-9);
        CHECK(std::abs(linalg::linear_cka(x, y) - linalg::linear_cka(y, x)) <= 1e-12);
        const Matrix q = testsupport::random_orthogonal(30, rng);
        CHECK(std::abs(linalg::linear_cka(x * q, y) - linalg::linear_cka(x, y)) <= 1e-9);
        CHECK(std::abs(linalg::linear_cka(7.5 * x, y) - linalg::linear_cka(x, y)) <= 1e-12);
        // Adding a constant row offset is removed by centring.
        Matrix shifted = x;
        shifted.rowwise() += Eigen::RowVectorXd::Constant(30, 4.0);
        CHECK(std::abs(linalg::linear_cka(shifted, y) - linalg::linear_cka(x, y)) <= 1e-9);

        const Matrix g = linalg::centered_gram(x);
        CHECK(g.rows() == 19);
        CHECK((g - g.transpose()).norm() <= 1e-12 * g.norm());
        CHECK(linalg::linear_cka_from_grams(g, linalg::centered_gram(y)) ==
              doctest::Approx(linalg::linear_cka(x, y)).epsilon(1e-12));
    }

    TEST_CASE("linear CKA errors")
    {
        std::mt19937_64 rng(1);
        const Matrix x = random_matrix(5, 3, rng);
        try {
            linalg::linear_cka(x, random_matrix(6, 3, rng));
            FAIL("expected shape error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Shape);
        }
        const Matrix constant = Matrix::Constant(5, 3, 2.0);
        try {
            linalg::linear_cka(x, constant);
            FAIL("expected degenerate error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Degenerate);
        }
    }

    TEST_CASE("random subspace isometry preserves the Gram matrix")
    {
        std::mt19937_64 rng(4);
        const Matrix v = random_matrix(300, 7, rng);
        const linalg::RandomSubspaceIsometry iso(300, 7, 1234);
        const auto mapped = iso.map_frame(v);
        const Matrix g0 = v.transpose() * v;
        const Matrix g1 = mapped.vectors.transpose() * mapped.vectors;
        CHECK((g1 - g0).norm() <= 1e-10 * g0.norm());
        CHECK(mapped.input_rank == 7);
        CHECK_FALSE(mapped.rank_deficient);
        CHECK(std::abs(linalg::stable_rank(mapped.vectors) - linalg::stable_rank(v)) <= 1e-9);
        // The image lies in the target subspace.
        const Matrix& w = iso.target_basis();
        CHECK((w.transpose() * w - Matrix::Identity(7, 7)).norm() <= 1e-12);
        CHECK((mapped.vectors - w * (w.transpose() * mapped.vectors)).norm() <= 1e-10 * mapped.vectors.norm());
        // A different seed gives a different subspace.
        const linalg::RandomSubspaceIsometry other(300, 7, 1235);
        CHECK((other.map_frame(v).vectors - mapped.vectors).norm() > 1e-3);
    }

    TEST_CASE("random subspace isometry handles rank deficient frames")
    {
        std::mt19937_64 rng(6);
        Matrix v = random_matrix(100, 5, rng);
        v.col(3) = v.col(0) * 2.0 - v.col(1);
        v.col(4).setZero();
        const auto mapped = linalg::RandomSubspaceIsometry(100, 5, 9).map_frame(v);
        CHECK(mapped.rank_deficient);
        CHECK(mapped.input_rank == 3);
        const Matrix g0 = v.transpose() * v;
        CHECK((mapped.vectors.transpose() * mapped.vectors - g0).norm() <= 1e-10 * g0.norm());
        CHECK_THROWS_AS(linalg::RandomSubspaceIsometry(4, 5, 0), Error);
    }

    TEST_CASE("adaptive Simpson integrates known functions")
    {
        CHECK(linalg::adaptive_simpson([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 1e-12) ==
              doctest::Approx(2.0).epsilon(1e-10));
        CHECK(linalg::adaptive_simpson([](double x) { return std::sqrt(1 - x * x); }, -1.0, 1.0, 1e-12) ==
              doctest::Approx(std::numbers::pi / 2).epsilon(1e-8));
    }

    TEST_CASE("residual coefficient matches the closed form")
    {
        // ∫ (1+y)² √(8−y²)/(2π) dy over [0, 2√2], moment by moment:
        //   ∫ρ = 1, ∫yρ = 8^{3/2}/(6π), ∫y²ρ = 2.
        const double pi = std::numbers::pi;
        const double closed = (3.0 + 2.0 * std::pow(8.0, 1.5) / (6.0 * pi)) / std::pow(1.0 + 2.0 * std::sqrt(2.0), 2);
        CHECK(linalg::mp_residual_coefficient() == doctest::Approx(closed).epsilon(1e-9));
        CHECK(std::abs(linalg::mp_residual_coefficient() - 0.36849) <= 5e-4);
        CHECK(linalg::mp_weight_coefficient() == doctest::Approx(0.25).epsilon(1e-9));
    }

    TEST_CASE("Monte Carlo residual stable rank is reproducible and near the limit")
    {
        const auto a = linalg::mc_residual_stable_rank(128, 6, 42, 1);
        const auto b = linalg::mc_residual_stable_rank(128, 6, 42, 3);
        CHECK(a.residual_trials == b.residual_trials);
        CHECK(a.weight_trials == b.weight_trials);
        CHECK(a.residual_mean == b.residual_mean);
        CHECK(a.residual_mean == doctest::Approx(0.3685).epsilon(0.06));
        CHECK(a.weight_mean == doctest::Approx(0.25).epsilon(0.08));
        const auto c = linalg::mc_residual_stable_rank(128, 6, 43, 1);
        CHECK(c.residual_trials != a.residual_trials);
    }

    TEST_CASE("seed derivation")
    {
        CHECK(derive_seed(0, "noise", 0) != derive_seed(0, "noise", 1));
        CHECK(derive_seed(0, "noise", 0) != derive_seed(0, "rotated", 0));
        CHECK(derive_seed(0, "noise", 0) != derive_seed(1, "noise", 0));
        CHECK(derive_seed(7, "x", 3) == derive_seed(7, "x", 3));

        GaussianStream g(derive_seed(5, "moments"));
        double sum = 0.0;
        double sq = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const double z = g.next();
            sum += z;
            sq += z * z;
        }
        CHECK(std::abs(sum / n) < 0.01);
        CHECK(std::abs(sq / n - 1.0) < 0.02);
    }
}
