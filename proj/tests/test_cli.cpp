#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "nframe/error.hpp"
#include "run_config.hpp"
#include "support.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;
using testsupport::run_cli;
using testsupport::slurp;

namespace {

// Fixture bundle and a five-image folder shared by the CLI tests.
struct Workspace {
    fs::path root;
    fs::path model;
    fs::path images;
};

const Workspace& workspace()
{
    static const Workspace ws = [] {
        Workspace w;
        w.root = testsupport::scratch("cli");
        w.model = w.root / "model";
        w.images = w.root / "images";
        fs::create_directories(w.images);
        const auto r = run_cli("fixture --out \"" + w.model.string() + "\" --seed 2", w.root);
        REQUIRE(r.status == 0);
        for (const char* name : {"astronaut", "coffee", "chelsea", "rocket", "camera"}) {
            fs::copy_file(testsupport::natural_dir() / (std::string(name) + ".png"), w.images / (std::string(name) + ".png"));
        }
        return w;
    }();
    return ws;
}

std::string q(const fs::path& p)
{
    return "\"" + p.string() + "\"";
}

std::string base_args()
{
    return "--model " + q(workspace().model) + " --images " + q(workspace().images);
}

json leading_json(const std::string& out)
{
    std::istringstream in(out);
    json j;
    in >> j;
    return j;
}

std::size_t count_of(const std::string& s, const std::string& needle)
{
    std::size_t n = 0;
    for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + needle.size())) ++n;
    return n;
}

std::size_t lines(const std::string& s)
{
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_SUITE("cli")
{
    TEST_CASE("probe writes deterministic results")
    {
        const auto dir = testsupport::scratch("cli_probe");
        std::string csv[3];
        std::string summary[3];
        const char* jobs[] = {"1", "1", "4"};
        for (int i = 0; i < 3; ++i) {
            const fs::path out = dir / ("run" + std::to_string(i));
            const auto r = run_cli("probe " + base_args() + " --frame augmentation,noise --seed 3 --plot --jobs " +
                                       jobs[i] + " --out " + q(out),
                                   dir);
            REQUIRE_MESSAGE(r.status == 0, r.err);
            csv[i] = slurp(out / "results.csv");
            summary[i] = slurp(out / "summary.json");
            CHECK(fs::exists(out / "curve.svg"));
        }
        CHECK(csv[0] == csv[1]);
        CHECK(csv[0] == csv[2]);
        CHECK(summary[0] == summary[2]);
        // 2 frame kinds x 5 images x (input + 3 taps) + header
        CHECK(lines(csv[0]) == 1 + 2 * 5 * 4);
        const json s = json::parse(summary[0]);
        CHECK(s["seed"] == 3);
        CHECK(s["curves"].size() == 2);
        CHECK(s["curves"][0]["layers"].size() == 4);
        CHECK(count_of(slurp(dir / "run0" / "curve.svg"), "class=\"series\"") == 2);
    }

    TEST_CASE("stochastic frames need a seed")
    {
        const auto dir = testsupport::scratch("cli_noseed");
        const auto r = run_cli("probe " + base_args() + " --frame noise --out " + q(dir / "out"), dir);
        CHECK(r.status == 2);
        CHECK(json::parse(r.err)["error"]["kind"] == "config");
        const auto ok = run_cli("probe " + base_args() + " --frame augmentation --out " + q(dir / "out"), dir);
        CHECK(ok.status == 0);
    }

    TEST_CASE("errors are reported as JSON")
    {
        const auto dir = testsupport::scratch("cli_errors");
        fs::create_directories(dir / "empty_model");
        const auto r = run_cli("probe --model " + q(dir / "empty_model") + " --images " + q(workspace().images) +
                                   " --out " + q(dir / "out"),
                               dir);
        CHECK(r.status == 2);
        const json e = json::parse(r.err);
        CHECK(e["error"].contains("kind"));
        CHECK(e["error"].contains("message"));
        CHECK_FALSE(fs::exists(dir / "out" / "results.csv"));

        CHECK(run_cli("no-such-command", dir).status == 64);
        CHECK(run_cli("probe --jobs 0", dir).status == 64);
    }

    TEST_CASE("cka heatmap has one cell per tap pair")
    {
        const auto dir = testsupport::scratch("cli_cka");
        const auto other = dir / "other";
        REQUIRE(run_cli("fixture --out " + q(other) + " --seed 9 --name other", dir).status == 0);
        const auto r = run_cli("cka " + base_args() + " --model " + q(other) + " --out " + q(dir / "out"), dir);
        REQUIRE_MESSAGE(r.status == 0, r.err);
        const std::string svg = slurp(dir / "out" / "cka.svg");
        CHECK(count_of(svg, "class=\"cell\"") == 4 * 4);
        CHECK(lines(slurp(dir / "out" / "cka.csv")) == 1 + 16);
        const json j = json::parse(slurp(dir / "out" / "cka.json"));
        CHECK(j["model_b"] == "other");
    }

    TEST_CASE("config files supply defaults and flags override them")
    {
        const auto dir = testsupport::scratch("cli_config");
        {
            std::ofstream cfg(dir / "run.toml");
            cfg << "model = \"" << workspace().model.generic_string() << "\"\n"
                << "images = \"" << workspace().images.generic_string() << "\"\n"
                << "frames = [\"noise\"]\n"
                << "seed = 4\n"
                << "out = \"from_config\"\n"
                << "[frame]\n"
                << "noise_k = 6\n";
        }
        auto r = run_cli("probe --config " + q(dir / "run.toml"), dir);
        REQUIRE_MESSAGE(r.status == 0, r.err);
        const json a = json::parse(slurp(dir / "from_config" / "summary.json"));
        CHECK(a["seed"] == 4);
        CHECK(a["curves"][0]["k"] == 6);

        r = run_cli("probe --config " + q(dir / "run.toml") + " --seed 8 --out " + q(dir / "flags"), dir);
        REQUIRE_MESSAGE(r.status == 0, r.err);
        CHECK(json::parse(slurp(dir / "flags" / "summary.json"))["seed"] == 8);

        {
            std::ofstream bad(dir / "bad.toml");
            bad << "seeds = 3\n";
        }
        r = run_cli("probe --config " + q(dir / "bad.toml"), dir);
        CHECK(r.status == 2);
        CHECK(json::parse(r.err)["error"]["kind"] == "config");
    }

    TEST_CASE("config parsing")
    {
        using nframe::cli::parse_run_config;
        const auto c = parse_run_config("models = [\"a\", \"/abs/b\"]\nimages = \"imgs\"\njobs = 3\nplot = true\n"
                                        "[[augmentation]]\nkind = \"rotate_translate\"\namount = 3.0\ncenter = [10, -5]\n"
                                        "[[augmentation]]\nkind = \"brightness\"\n",
                                        "/base");
        REQUIRE(c.models.size() == 2);
        CHECK(c.models[0] == fs::path("/base/a"));
        CHECK(c.models[1] == fs::path("/abs/b"));
        CHECK(*c.images == fs::path("/base/imgs"));
        CHECK(*c.jobs == 3);
        CHECK(*c.plot);
        REQUIRE(c.augmentations);
        REQUIRE(c.augmentations->size() == 2);
        CHECK((*c.augmentations)[0].amount == 3.0);
        CHECK((*c.augmentations)[0].center == nframe::PixelOffset{10, -5});
        CHECK((*c.augmentations)[1].amount ==
              nframe::AugmentationSpec::defaults(nframe::AugmentationKind::Brightness).amount);
        CHECK_THROWS_AS(parse_run_config("[frame]\nbogus = 1\n", "/"), nframe::Error);
        CHECK_THROWS_AS(parse_run_config("[[augmentation]]\nkind = \"posterize\"\n", "/"), nframe::Error);
        CHECK_THROWS_AS(parse_run_config("seed = \"x\"\n", "/"), nframe::Error);
        CHECK_THROWS_AS(parse_run_config("seed = [1\n", "/"), nframe::Error);
    }

    TEST_CASE("mp-check reports both coefficients")
    {
        const auto dir = testsupport::scratch("cli_mp");
        const auto r = run_cli("mp-check --n 64 --trials 4 --seed 1", dir);
        REQUIRE_MESSAGE(r.status == 0, r.err);
        const json j = leading_json(r.out);
        CHECK(j["residual_coefficient"].get<double>() == doctest::Approx(0.368486).epsilon(1e-5));
        CHECK(j["weight_coefficient"].get<double>() == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(j["residual_mean"].get<double>() > 0.3);
        CHECK(run_cli("mp-check --n 64 --trials 4", dir).status == 64);
    }

    TEST_CASE("rank3 spectrum")
    {
        const auto dir = testsupport::scratch("cli_rank3");
        const auto r = run_cli("rank3 --synthetic --size 96 --centers 5 --radius 15 --upscale 2", dir);
        REQUIRE_MESSAGE(r.status == 0, r.err);
        const json j = leading_json(r.out);
        CHECK(j["singular_values"].size() == 5);
        CHECK(j["ratio_4_1"].get<double>() < 0.1);
        CHECK(run_cli("rank3", dir).status == 2);
    }

    TEST_CASE("sweep-k writes one row group per k")
    {
        const auto dir = testsupport::scratch("cli_sweep");
        const auto r = run_cli("sweep-k " + base_args() + " --k 2,5,19 --seed 1 --plot --out " + q(dir / "out"), dir);
        REQUIRE_MESSAGE(r.status == 0, r.err);
        const std::string csv = slurp(dir / "out" / "sweep_k.csv");
        CHECK(csv.rfind("k,layer_index,layer_name,mean,ci_low,ci_high,n\n", 0) == 0);
        CHECK(lines(csv) == 1 + 3 * 4);
        CHECK(fs::exists(dir / "out" / "sweep_k.svg"));
        CHECK(run_cli("sweep-k " + base_args() + " --k 2,5 --out " + q(dir / "x"), dir).status == 2);
    }

    TEST_CASE("idim on synthetic and model data")
    {
        const auto dir = testsupport::scratch("cli_idim");
        auto r = run_cli("idim --synthetic cube --dim 3 --points 600 --estimator both --seed 2", dir);
        REQUIRE_MESSAGE(r.status == 0, r.err);
        const json j = leading_json(r.out);
        REQUIRE(j["estimates"].size() == 2);
        for (const auto& e : j["estimates"]) {
            CHECK(e["value"].get<double>() > 2.4);
            CHECK(e["value"].get<double>() < 3.6);
        }
        r = run_cli("idim --synthetic cube --dim 3 --points 600 --estimator twonn --seed 2 --scale 1000", dir);
        CHECK(leading_json(r.out)["estimates"][0]["value"].get<double>() ==
              doctest::Approx(j["estimates"][0]["value"].get<double>()).epsilon(1e-9));

        {
            std::ofstream csv(dir / "pts.csv");
            for (int i = 0; i < 150; ++i) csv << i * 0.1 << "," << i * 0.2 << "\n";
        }
        r = run_cli("idim --input " + q(dir / "pts.csv") + " --estimator twonn", dir);
        CHECK(r.status == 0);
        r = run_cli("idim " + base_args() + " --tap 3 --estimator twonn", dir);
        CHECK(r.status == 2);  // five images are too few points
    }

    TEST_CASE("activation cache is written when requested")
    {
        const auto dir = testsupport::scratch("cli_cache");
        setenv("NFRAME_CACHE", (dir / "cache").c_str(), 1);
        const auto r = run_cli("probe " + base_args() + " --out " + q(dir / "out"), dir);
        unsetenv("NFRAME_CACHE");
        REQUIRE_MESSAGE(r.status == 0, r.err);
        const json index = json::parse(slurp(dir / "cache" / "fixture.index.json"));
        CHECK(index.size() == 5 * 3);
        const std::uint64_t per_image = 8 * 64 * 64 + 8 * 32 * 32 + 32;
        CHECK(fs::file_size(dir / "cache" / "fixture.bin") == 5 * per_image * 4);
        CHECK(index[1]["tap_id"] == 2);
        CHECK(index[1]["offset"] == 8 * 64 * 64 * 4);
    }
}
