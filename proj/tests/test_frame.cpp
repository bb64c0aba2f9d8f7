#include <doctest.h>

#include <cmath>

#include "nframe/error.hpp"
#include "nframe/frame.hpp"
#include "nframe/image_io.hpp"
#include "support.hpp"

using namespace nframe;

namespace {

const Image& small_image()
{
    static const Image img = resize(read_image(testsupport::natural_dir() / "astronaut.png"), 64, 64, Interpolation::Bilinear);
    return img;
}

const Frame& small_frame()
{
    static const Frame f = build_augmentation_frame(small_image());
    return f;
}

ErrorKind kind_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an nframe::Error");
    return ErrorKind::InvalidInput;
}

}  // namespace

TEST_SUITE("frame")
{
    TEST_CASE("augmentation frame shape and labels")
    {
        const Frame& f = small_frame();
        CHECK(f.kind == FrameKind::Augmentation);
        CHECK(f.size() == 19);
        CHECK(f.labels.front() == "jpeg");
        const auto v = f.tangent_matrix();
        CHECK(v.rows() == 3 * 64 * 64);
        CHECK(v.cols() == 19);
        for (Eigen::Index j = 0; j < v.cols(); ++j) CHECK(v.col(j).norm() > 0.0);
        // Column j is perturbed_j − base.
        CHECK(v(100, 4) == doctest::Approx(f.perturbed[4].flat()(100) - f.base.flat()(100)));
        CHECK(f.warnings.empty());
    }

    TEST_CASE("augmentation frame rejects bad configurations")
    {
        auto specs = default_augmentation_specs();
        specs.push_back(specs[1]);
        CHECK(kind_of([&] { build_augmentation_frame(small_image(), specs); }) == ErrorKind::Config);
        const std::vector<AugmentationSpec> one{AugmentationSpec::defaults(AugmentationKind::Brightness)};
        CHECK(kind_of([&] { build_augmentation_frame(small_image(), one); }) == ErrorKind::Config);
        auto bad = default_augmentation_specs();
        bad[1].amount = -1.0;
        CHECK(kind_of([&] { build_augmentation_frame(small_image(), bad); }) == ErrorKind::InvalidSpec);
    }

    TEST_CASE("augmentation frame is deterministic")
    {
        const Frame again = build_augmentation_frame(small_image());
        for (std::size_t j = 0; j < again.size(); ++j) CHECK(again.perturbed[j] == small_frame().perturbed[j]);
    }

    TEST_CASE("rotations in one frame share a crop")
    {
        std::vector<AugmentationSpec> specs;
        for (PixelOffset c : {PixelOffset{0, 0}, PixelOffset{20, 20}}) {
            auto s = AugmentationSpec::defaults(AugmentationKind::RotateTranslate);
            s.center = c;
            specs.push_back(s);
        }
        const Frame f = build_augmentation_frame(small_image(), specs);
        const int shared = std::max(minimal_rotation_crop(256, 256, 2.0, 127.5, 127.5),
                                    minimal_rotation_crop(256, 256, 2.0, 127.5 + 80, 127.5 + 80));
        auto first = specs[0];
        first.border_crop = shared;
        CHECK(f.perturbed[0] == apply_augmentation(small_image(), first).raster());
    }

    TEST_CASE("noise frame matches the mean reference norm")
    {
        const Frame n = build_noise_frame(small_image(), 19, 7, small_frame());
        const auto ref = small_frame().tangent_matrix();
        double mean = 0.0;
        for (Eigen::Index j = 0; j < ref.cols(); ++j) mean += ref.col(j).norm();
        mean /= 19.0;
        CHECK(n.matched_norm == doctest::Approx(mean).epsilon(1e-12));
        const auto v = n.tangent_matrix();
        for (Eigen::Index j = 0; j < v.cols(); ++j) CHECK(v.col(j).norm() == doctest::Approx(mean).epsilon(1e-9));
        // Near-orthogonal at this dimension.
        CHECK(linalg::stable_rank(v) > 17.0);
        CHECK(n.kind == FrameKind::Noise);
    }

    TEST_CASE("noise frame depends only on its seed")
    {
        const Frame a = build_noise_frame(small_image(), 5, 1, small_frame());
        const Frame b = build_noise_frame(small_image(), 5, 1, small_frame());
        const Frame c = build_noise_frame(small_image(), 5, 2, small_frame());
        CHECK(a.perturbed == b.perturbed);
        CHECK(a.perturbed != c.perturbed);
        // Prefix property: a longer frame starts with the same directions.
        const Frame longer = build_noise_frame(small_image(), 8, 1, small_frame());
        for (std::size_t j = 0; j < 5; ++j) CHECK(longer.perturbed[j] == a.perturbed[j]);
        CHECK(kind_of([&] { build_noise_frame(small_image(), 1, 1, small_frame()); }) == ErrorKind::Config);
    }

    TEST_CASE("noise frame needs a non-zero reference")
    {
        Frame zero = small_frame();
        for (auto& p : zero.perturbed) p = zero.base.raster();
        CHECK(kind_of([&] { build_noise_frame(small_image(), 4, 1, zero); }) == ErrorKind::Degenerate);
        CHECK(kind_of([&] { build_rotated_frame(zero, 1); }) == ErrorKind::Degenerate);
    }

    TEST_CASE("rotated frame keeps the Gram matrix and changes directions")
    {
        const Frame r = build_rotated_frame(small_frame(), 3);
        const auto v0 = small_frame().tangent_matrix();
        const auto v1 = r.tangent_matrix();
        const linalg::Matrix g0 = v0.transpose() * v0;
        const linalg::Matrix g1 = v1.transpose() * v1;
        CHECK((g1 - g0).norm() <= 1e-6 * g0.norm());
        CHECK(std::abs(linalg::stable_rank(v1) - linalg::stable_rank(v0)) <= 1e-9 * linalg::stable_rank(v0));
        // The new directions are nearly orthogonal to the old span.
        const linalg::Matrix q = Eigen::HouseholderQR<linalg::Matrix>(v0).householderQ() * linalg::Matrix::Identity(v0.rows(), 19);
        CHECK((q.transpose() * v1).norm() < 0.2 * v1.norm());
        CHECK(r.labels[0] == "rotated:jpeg");
        CHECK(r.base == small_frame().base);
    }

    TEST_CASE("external frames are read from a directory")
    {
        const auto dir = testsupport::scratch("external_frame");
        auto a = AugmentationSpec::defaults(AugmentationKind::Brightness);
        write_png(dir / "01.png", apply_augmentation(small_image(), a));
        a.amount = 0.9;
        write_png(dir / "02.png", apply_augmentation(small_image(), a));
        const Frame f = load_external_frame(small_image(), dir);
        CHECK(f.kind == FrameKind::External);
        CHECK(f.size() == 2);
        CHECK(f.labels[0] == "01.png");

        CHECK(kind_of([&] { load_external_frame(small_image(), dir / "missing"); }) == ErrorKind::Ingest);
        write_png(dir / "03.png", Image(32, 32, 0.5));
        CHECK(kind_of([&] { load_external_frame(small_image(), dir); }) == ErrorKind::Ingest);
        const auto lone = testsupport::scratch("external_single");
        write_png(lone / "x.png", small_image());
        CHECK(kind_of([&] { load_external_frame(small_image(), lone); }) == ErrorKind::Ingest);
    }

    TEST_CASE("frame kind names")
    {
        for (auto k : {FrameKind::Augmentation, FrameKind::Noise, FrameKind::RotatedAugmentation, FrameKind::External}) {
            CHECK(parse_frame_kind(to_string(k)) == k);
        }
        CHECK(kind_of([] { parse_frame_kind("sideways"); }) == ErrorKind::Config);
    }

    TEST_CASE("rotation span spectrum")
    {
        const Image blob = gaussian_blob_image(96, 96);
        const auto three = rotation_span_spectrum(blob, spread_rotation_centers(3, 15.0), 2.0, 2);
        CHECK(three.spectrum.size() == 3);
        CHECK_FALSE(three.degenerate);
        CHECK(three.border_crop > 0);
        const auto flat = rotation_span_spectrum(Image(64, 64, 0.3), spread_rotation_centers(3, 10.0), 2.0, 2);
        CHECK(flat.degenerate);
        CHECK_THROWS_AS(rotation_span_spectrum(blob, {}, 2.0, 2), Error);
    }

    TEST_CASE("rotation centre sets")
    {
        const auto c = spread_rotation_centers(3);
        REQUIRE(c.size() == 3);
        CHECK(c[0] == PixelOffset{0, 0});
        CHECK(c[1] == PixelOffset{50, 50});
        CHECK(c[2] == PixelOffset{-50, 50});
        CHECK(spread_rotation_centers(9).size() == 9);
        CHECK_THROWS_AS(spread_rotation_centers(10), Error);
    }

    TEST_CASE("frame validation")
    {
        Frame f = small_frame();
        f.steps[2] = 0.0;
        CHECK(kind_of([&] { f.validate(); }) == ErrorKind::Config);
        f = small_frame();
        f.labels[3] = f.labels[4];
        CHECK(kind_of([&] { f.validate(); }) == ErrorKind::Config);
    }
}
