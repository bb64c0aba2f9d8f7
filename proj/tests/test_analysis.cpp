#include <doctest.h>

#include <cmath>
#include <set>

#include "nframe/analysis.hpp"
#include "nframe/error.hpp"
#include "nframe/fixture.hpp"
#include "nframe/image_io.hpp"
#include "nframe/report.hpp"
#include "nframe/rng.hpp"
#include "nframe/stats.hpp"
#include "support.hpp"

using namespace nframe;
namespace fs = std::filesystem;

namespace {

const fs::path& fixture_dir(std::uint64_t seed)
{
    static std::map<std::uint64_t, fs::path> dirs;
    auto it = dirs.find(seed);
    if (it == dirs.end()) {
        const auto d = testsupport::scratch("analysis_fixture_" + std::to_string(seed));
        make_fixture_bundle(d, seed);
        it = dirs.emplace(seed, d).first;
    }
    return it->second;
}

const ModelBundle& fixture(std::uint64_t seed = 0)
{
    static std::map<std::uint64_t, ModelBundle> bundles;
    auto it = bundles.find(seed);
    if (it == bundles.end()) it = bundles.emplace(seed, load_bundle(fixture_dir(seed))).first;
    return it->second;
}

const std::vector<ImageEntry>& images()
{
    static const auto all = load_image_set(testsupport::natural_dir(), fixture().manifest.input);
    return all;
}

std::vector<ImageEntry> first_images(std::size_t n)
{
    return {images().begin(), images().begin() + static_cast<std::ptrdiff_t>(n)};
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

StableRankCurve synthetic_curve(const std::string& model, std::vector<double> per_tap_mean)
{
    StableRankCurve c;
    c.model = model;
    for (std::size_t t = 0; t < per_tap_mean.size(); ++t) {
        TapCurvePoint p;
        p.tap_id = static_cast<int>(t);
        p.name = "t" + std::to_string(t);
        p.mean = per_tap_mean[t];
        p.n = 1;
        c.taps.push_back(p);
    }
    return c;
}

double naive_pearson(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_SUITE("analysis")
{
    TEST_CASE("t interval against tabulated quantiles")
    {
        const std::vector<double> v{1, 2, 3, 4, 5};
        const auto ci = stats::t_interval(v);
        const double s = std::sqrt(2.5);
        // t_{0.975, 4} = 2.7764451051977944
        const double half = 2.7764451051977944 * s / std::sqrt(5.0);
        CHECK(ci.mean == doctest::Approx(3.0));
        CHECK(ci.low == doctest::Approx(3.0 - half).epsilon(1e-12));
        CHECK(ci.high == doctest::Approx(3.0 + half).epsilon(1e-12));
        CHECK(stats::sample_stddev(v) == doctest::Approx(s));
        // t_{0.95, 9} = 1.8331129326562372
        std::vector<double> w(10);
        for (int i = 0; i < 10; ++i) w[i] = i * i;
        const auto ci90 = stats::t_interval(w, 0.90);
        CHECK(ci90.high - ci90.mean ==
              doctest::Approx(1.8331129326562372 * stats::sample_stddev(w) / std::sqrt(10.0)).epsilon(1e-12));

        const std::vector<double> same{2.5, 2.5};
        const auto zero = stats::t_interval(same);
        CHECK(zero.low == 2.5);
        CHECK(zero.high == 2.5);
        CHECK_THROWS_AS(stats::t_interval(std::vector<double>{1.0}), Error);
    }

    TEST_CASE("t interval coverage on normal samples")
    {
        GaussianStream g(derive_seed(17, "coverage"));
        int covered = 0;
        const int sims = 1000;
        for (int s = 0; s < sims; ++s) {
            std::vector<double> v(12);
            for (auto& x : v) x = 3.0 + 2.0 * g.next();
            const auto ci = stats::t_interval(v);
            if (ci.low <= 3.0 && 3.0 <= ci.high) ++covered;
        }
        CHECK(covered >= 930);
        CHECK(covered <= 970);
    }

    TEST_CASE("correlation coefficients")
    {
        const std::vector<double> x{1, 2, 2, 3, 7};
        const std::vector<double> y{1, 3, 2, 4, 5};
        CHECK(*stats::pearson(x, y) == doctest::Approx(naive_pearson(x, y)).epsilon(1e-12));
        // Average ranks: x -> 1, 2.5, 2.5, 4, 5
        CHECK(*stats::spearman(x, y) == doctest::Approx(naive_pearson({1, 2.5, 2.5, 4, 5}, {1, 3, 2, 4, 5})).epsilon(1e-12));
        CHECK_FALSE(stats::pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}));
        CHECK_FALSE(stats::spearman(std::vector<double>{1, 2, 3}, std::vector<double>{4, 4, 4}));
        CHECK_THROWS_AS(stats::pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), Error);
    }

    TEST_CASE("image sets")
    {
        REQUIRE(images().size() == 10);
        CHECK(images().front().id == "astronaut");
        for (const auto& e : images()) {
            CHECK(e.image.height() == 64);
            CHECK(e.image.width() == 64);
        }
        const auto dir = testsupport::scratch("analysis_dupes");
        write_png(dir / "a.png", Image(40, 40, 0.2));
        const auto jpg = encode_jpeg(Image(40, 40, 0.3), 90);
        {
            std::ofstream out(dir / "a.jpg", std::ios::binary);
            out.write(reinterpret_cast<const char*>(jpg.data()), static_cast<std::streamsize>(jpg.size()));
        }
        CHECK(kind_of([&] { load_image_set(dir); }) == ErrorKind::Config);
    }

    TEST_CASE("stable rank curve structure and invariants")
    {
        const auto imgs = first_images(4);
        FrameConfig cfg;
        const auto curve = stable_rank_curve(fixture(), imgs, cfg, 3);
        CHECK(curve.model == "fixture");
        CHECK(curve.k == 19);
        CHECK(curve.image_ids.size() == 4);
        REQUIRE(curve.taps.size() == 4);
        CHECK(curve.taps[0].name == "input");
        for (const auto& t : curve.taps) {
            REQUIRE(t.mean);
            CHECK(*t.ci_low <= *t.mean);
            CHECK(*t.mean <= *t.ci_high);
            CHECK(t.n == 4);
            for (const auto& v : t.per_image) {
                REQUIRE(v);
                CHECK(*v >= 1.0);
                CHECK(*v <= 19.0);
            }
        }
        // Tap 0 is the frame itself.
        const Frame f = build_frame(imgs[1], 1, cfg, 3);
        CHECK(*curve.taps[0].per_image[1] == linalg::stable_rank(f.tangent_matrix()));
    }

    TEST_CASE("curves do not depend on the number of jobs")
    {
        const auto imgs = first_images(5);
        FrameConfig cfg;
        const std::vector<FrameKind> kinds{FrameKind::Augmentation, FrameKind::Noise, FrameKind::RotatedAugmentation};
        const auto one = stable_rank_curves(fixture(), imgs, kinds, cfg, 9, 1);
        const auto four = stable_rank_curves(fixture(), imgs, kinds, cfg, 9, 4);
        CHECK(report::results_csv(one) == report::results_csv(four));
        CHECK(report::summary_json(one) == report::summary_json(four));
        const auto other_seed = stable_rank_curves(fixture(), imgs, kinds, cfg, 10, 1);
        CHECK(report::results_csv(one) != report::results_csv(other_seed));
        // The augmentation curve is not stochastic.
        CHECK(report::results_csv({one[0]}) == report::results_csv({other_seed[0]}));
    }

    TEST_CASE("identical images give a zero-width interval")
    {
        std::vector<ImageEntry> twins{images()[2], images()[2]};
        twins[1].id = "twin";
        const auto c = stable_rank_curve(fixture(), twins, FrameConfig{}, 0);
        for (const auto& t : c.taps) CHECK(*t.ci_low == *t.ci_high);
        CHECK(kind_of([&] { stable_rank_curve(fixture(), first_images(1), FrameConfig{}, 0); }) == ErrorKind::Config);
    }

    TEST_CASE("rotated frames agree with augmentation frames at layer 0")
    {
        const auto imgs = first_images(3);
        const auto curves = stable_rank_curves(fixture(), imgs, {FrameKind::Augmentation, FrameKind::RotatedAugmentation},
                                               FrameConfig{}, 4);
        for (std::size_t i = 0; i < imgs.size(); ++i) {
            CHECK(std::abs(*curves[0].taps[0].per_image[i] - *curves[1].taps[0].per_image[i]) <= 1e-6);
        }
    }

    TEST_CASE("failing images are skipped with a reason")
    {
        const auto dir = testsupport::scratch("analysis_external");
        const auto imgs = first_images(3);
        for (std::size_t i = 0; i < 2; ++i) {
            fs::create_directories(dir / imgs[i].id);
            for (double a : {0.9, 1.1}) {
                auto s = AugmentationSpec::defaults(AugmentationKind::Brightness);
                s.amount = a;
                write_png(dir / imgs[i].id / ("b" + std::to_string(a) + ".png"), apply_augmentation(imgs[i].image, s));
            }
        }
        FrameConfig cfg;
        cfg.kind = FrameKind::External;
        cfg.external_dir = dir;
        const auto c = stable_rank_curve(fixture(), imgs, cfg, 0);
        CHECK(c.image_ids.size() == 2);
        REQUIRE(c.skipped.size() == 1);
        CHECK(c.skipped[0].image_id == imgs[2].id);
        CHECK(c.skipped[0].reason.find("ingest") != std::string::npos);
        CHECK(c.k == 2);

        fs::remove_all(dir / imgs[1].id);
        CHECK(kind_of([&] { stable_rank_curve(fixture(), imgs, cfg, 0); }) == ErrorKind::Degenerate);
    }

    TEST_CASE("frame CKA of a model with itself")
    {
        const auto imgs = first_images(3);
        const auto rep = frame_cka(fixture(), fixture(), imgs, FrameConfig{}, 0);
        REQUIRE(rep.mean.rows() == 4);
        REQUIRE(rep.mean.cols() == 4);
        CHECK(rep.images == 3);
        for (Eigen::Index i = 0; i < 4; ++i) {
            CHECK(std::abs(rep.mean(i, i) - 1.0) <= 1e-9);
            for (Eigen::Index j = 0; j < 4; ++j) {
                CHECK(rep.mean(i, j) >= -1e-12);
                CHECK(rep.mean(i, j) <= 1.0 + 1e-9);
                CHECK(rep.counts(i, j) == 3);
            }
        }
    }

    TEST_CASE("frame CKA is symmetric in the model pair")
    {
        const auto imgs = first_images(3);
        const auto ab = frame_cka(fixture(0), fixture(1), imgs, FrameConfig{}, 0);
        const auto ba = frame_cka(fixture(1), fixture(0), imgs, FrameConfig{}, 0);
        for (Eigen::Index i = 0; i < 4; ++i) {
            for (Eigen::Index j = 0; j < 4; ++j) CHECK(std::abs(ab.mean(i, j) - ba.mean(j, i)) <= 1e-9);
        }
        // Tap 0 is the same frame for both models.
        CHECK(std::abs(ab.mean(0, 0) - 1.0) <= 1e-9);
        CHECK(ab.mean(3, 3) < 1.0 - 1e-6);
    }

    TEST_CASE("frame CKA counts degenerate taps")
    {
        const auto dir = testsupport::scratch("analysis_zero");
        FixtureOptions o;
        o.weight_scale = 0.0;
        o.name = "zero";
        make_fixture_bundle(dir, 0, o);
        const ModelBundle zero = load_bundle(dir);
        const auto rep = frame_cka(fixture(), zero, first_images(2), FrameConfig{}, 0);
        CHECK(rep.degenerate_pairs == 2 * 4 * 3);
        CHECK(std::isnan(rep.mean(0, 1)));
        CHECK(rep.counts(0, 0) == 2);
    }

    TEST_CASE("augmentation order")
    {
        const auto a = augmentation_order(19, 5);
        CHECK(a == augmentation_order(19, 5));
        CHECK(a != augmentation_order(19, 6));
        std::set<std::size_t> uniq(a.begin(), a.end());
        CHECK(uniq.size() == 19);
        CHECK(*uniq.rbegin() == 18);
    }

    TEST_CASE("vary-k sweep")
    {
        const auto imgs = first_images(3);
        FrameConfig cfg;
        const auto curves = vary_k_sweep(fixture(), imgs, {2, 7, 19}, cfg, 11);
        REQUIRE(curves.size() == 3);
        CHECK(curves[0].k == 2);
        CHECK(curves[1].k == 7);
        const auto full = stable_rank_curve(fixture(), imgs, cfg, 11);
        CHECK(report::results_csv({curves[2]}) == report::results_csv({full}));

        // The 7-curve uses the first 7 entries of the order, in table order.
        auto order = augmentation_order(19, 11);
        std::vector<std::size_t> chosen(order.begin(), order.begin() + 7);
        std::sort(chosen.begin(), chosen.end());
        FrameConfig sub;
        sub.augmentations.clear();
        for (auto i : chosen) sub.augmentations.push_back(cfg.augmentations[i]);
        CHECK(report::results_csv({curves[1]}) == report::results_csv({stable_rank_curve(fixture(), imgs, sub, 11)}));

        CHECK(kind_of([&] { vary_k_sweep(fixture(), imgs, {1}, cfg, 0); }) == ErrorKind::Config);
        CHECK(kind_of([&] { vary_k_sweep(fixture(), imgs, {20}, cfg, 0); }) == ErrorKind::Config);
        FrameConfig noise;
        noise.kind = FrameKind::Noise;
        const auto n = vary_k_sweep(fixture(), first_images(2), {25}, noise, 0);
        CHECK(n[0].k == 25);
    }

    TEST_CASE("accuracy correlation")
    {
        GaussianStream g(derive_seed(3, "corr"));
        std::vector<StableRankCurve> curves;
        std::vector<std::optional<double>> acc;
        for (int m = 0; m < 8; ++m) {
            const double a = 0.5 + 0.05 * m;
            curves.push_back(synthetic_curve("m" + std::to_string(m), {2 * a + 0.01 * g.next(), 3.0}));
            acc.push_back(a);
        }
        curves.push_back(synthetic_curve("no_acc", {1.0, 3.0}));
        acc.push_back(std::nullopt);
        const auto rep = accuracy_correlation(curves, acc);
        REQUIRE(rep.taps.size() == 2);
        CHECK(*rep.taps[0].pearson > 0.95);
        CHECK(rep.taps[0].models == 8);
        CHECK_FALSE(rep.taps[1].pearson);
        CHECK_FALSE(rep.taps[1].spearman);
        CHECK(rep.warnings.size() == 1);
        CHECK(rep.models.size() == 8);

        std::vector<StableRankCurve> two(curves.begin(), curves.begin() + 2);
        CHECK(kind_of([&] { accuracy_correlation(two, {0.1, 0.2}); }) == ErrorKind::Config);
    }

    TEST_CASE("checkpoint series")
    {
        const auto imgs = first_images(2);
        const ModelBundle copy = load_bundle(fixture_dir(0));
        const auto same = checkpoint_series({&fixture(), &copy}, imgs, FrameConfig{}, 0);
        CHECK(report::results_csv({same[0]}) == report::results_csv({same[1]}));

        const auto dir = testsupport::scratch("analysis_series_zero");
        FixtureOptions o;
        o.weight_scale = 0.0;
        make_fixture_bundle(dir, 0, o);
        const ModelBundle zero = load_bundle(dir);
        const auto series = checkpoint_series({&fixture(), &zero}, imgs, FrameConfig{}, 0);
        CHECK(series[1].taps[1].degenerate == 2);
        CHECK_FALSE(series[1].taps[1].mean);
        CHECK(series[1].taps[0].mean);

        ModelBundle fewer = load_bundle(fixture_dir(0));
        fewer.manifest.taps.pop_back();
        CHECK(kind_of([&] { checkpoint_series({&fixture(), &fewer}, imgs, FrameConfig{}, 0); }) == ErrorKind::Config);
        CHECK(kind_of([&] { checkpoint_series({&fixture()}, imgs, FrameConfig{}, 0); }) == ErrorKind::Config);
    }

    TEST_CASE("report formats")
    {
        const auto imgs = first_images(2);
        const auto curves = stable_rank_curves(fixture(), imgs, {FrameKind::Augmentation, FrameKind::Noise}, FrameConfig{}, 1);
        const std::string csv = report::results_csv(curves);
        CHECK(csv.rfind("model,image,frame,layer_index,layer_name,stable_rank\n", 0) == 0);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 2 * 4);
        const auto j = report::summary_json(curves);
        CHECK(j["curves"].size() == 2);
        CHECK(j["curves"][0]["layers"][0].contains("ci_low"));
        CHECK(j["curves"][1]["frame"] == "noise");
        CHECK(report::number(0.1) == "0.10000000000000001");
        CHECK(report::csv_field("a,b") == "\"a,b\"");
        CHECK(report::csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");

        const auto rep = frame_cka(fixture(), fixture(), imgs, FrameConfig{}, 0);
        const std::string cka = report::cka_csv(rep);
        CHECK(cka.rfind("model_a,model_b,tap_a,tap_b,cka,n_images\n", 0) == 0);
        CHECK(std::count(cka.begin(), cka.end(), '\n') == 1 + 16);
    }
}
