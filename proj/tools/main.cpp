#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "nframe/activation_cache.hpp"
#include "nframe/analysis.hpp"
#include "nframe/error.hpp"
#include "nframe/fixture.hpp"
#include "nframe/image_io.hpp"
#include "nframe/intrinsic_dim.hpp"
#include "nframe/report.hpp"
#include "nframe/stats.hpp"
#include "nframe/svg.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nframe;

namespace {

// Flags shared by the commands that run models over an image set.
struct RunFlags {
    std::vector<std::string> models;
    std::string images;
    std::vector<std::string> frames;
    std::string frame_dir;
    std::uint64_t seed = 0;
    std::string out;
    bool plot = false;
    int jobs = 1;
    std::size_t noise_k = 0;
    std::size_t max_batch = 0;
    std::string config;

    CLI::Option* seed_opt = nullptr;
    CLI::App* app = nullptr;
};

struct Resolved {
    std::vector<fs::path> models;
    fs::path images;
    std::vector<FrameKind> kinds;
    std::optional<std::uint64_t> seed;
    fs::path out;
    bool plot = false;
    int jobs = 1;
    FrameConfig frame;
};

void add_run_flags(CLI::App* app, RunFlags& f, bool many_frames, bool many_models)
{
    f.app = app;
    if (many_models) {
        app->add_option("--model", f.models, "Model bundle directory (repeat for several)");
    } else {
        app->add_option("--model", f.models, "Model bundle directory")->expected(1);
    }
    app->add_option("--images", f.images, "Directory of PNG/JPEG images");
    if (many_frames) {
        app->add_option("--frame", f.frames, "Frame kinds: augmentation, noise, rotated, external")->delimiter(',');
    } else {
        app->add_option("--frame", f.frames, "Frame kind: augmentation, noise, rotated, external")->expected(1);
    }
    app->add_option("--frame-dir", f.frame_dir, "External frames: <dir>/<image id>/*.png");
    f.seed_opt = app->add_option("--seed", f.seed, "Seed for every stochastic step");
    app->add_option("--out", f.out, "Output directory");
    app->add_flag("--plot", f.plot, "Also write SVG plots");
    app->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app->add_option("--noise-k", f.noise_k, "Noise frame size (default: augmentation count)");
    app->add_option("--max-batch", f.max_batch, "Forward-pass chunk size (0 = whole frame)");
    app->add_option("--config", f.config, "TOML run config")->check(CLI::ExistingFile);
}

bool given(const RunFlags& f, const std::string& name)
{
    return f.app->count(name) > 0;
}

Resolved resolve(const RunFlags& f, bool need_images = true)
{
    cli::RunConfig cfg;
    if (!f.config.empty()) cfg = cli::load_run_config(f.config);
    Resolved r;

    if (given(f, "--model")) {
        for (const auto& m : f.models) r.models.emplace_back(m);
    } else {
        r.models = cfg.models;
    }
    if (r.models.empty()) throw Error(ErrorKind::Config, "no model bundle given (--model)");

    if (given(f, "--images")) {
        r.images = f.images;
    } else if (cfg.images) {
        r.images = *cfg.images;
    } else if (need_images) {
        throw Error(ErrorKind::Config, "no image directory given (--images)");
    }

    std::vector<std::string> frames = given(f, "--frame") ? f.frames : cfg.frames;
    if (frames.empty()) frames = {"augmentation"};
    for (const auto& name : frames) {
        const FrameKind k = parse_frame_kind(name);
        if (std::find(r.kinds.begin(), r.kinds.end(), k) != r.kinds.end()) {
            throw Error(ErrorKind::Config, fmt::format("frame kind '{}' requested twice", name));
        }
        r.kinds.push_back(k);
    }

    if (f.seed_opt->count() > 0) {
        r.seed = f.seed;
    } else {
        r.seed = cfg.seed;
    }
    if (given(f, "--out")) {
        r.out = f.out;
    } else if (cfg.out) {
        r.out = *cfg.out;
    }
    r.plot = given(f, "--plot") ? f.plot : cfg.plot.value_or(false);
    r.jobs = given(f, "--jobs") ? f.jobs : cfg.jobs.value_or(1);

    if (cfg.augmentations) r.frame.augmentations = *cfg.augmentations;
    r.frame.noise_k = given(f, "--noise-k") ? f.noise_k : cfg.noise_k.value_or(0);
    r.frame.max_batch = given(f, "--max-batch") ? f.max_batch : cfg.max_batch.value_or(0);
    if (given(f, "--frame-dir")) {
        r.frame.external_dir = f.frame_dir;
    } else if (cfg.frame_dir) {
        r.frame.external_dir = *cfg.frame_dir;
    }
    r.frame.kind = r.kinds.front();
    return r;
}

std::uint64_t require_seed(const Resolved& r, bool stochastic, const std::string& why)
{
    if (stochastic && !r.seed) throw Error(ErrorKind::Config, "--seed is required for " + why);
    return r.seed.value_or(0);
}

bool any_stochastic(const std::vector<FrameKind>& kinds)
{
    return std::any_of(kinds.begin(), kinds.end(), [](FrameKind k) {
        return k == FrameKind::Noise || k == FrameKind::RotatedAugmentation;
    });
}

fs::path require_out(const Resolved& r)
{
    if (r.out.empty()) throw Error(ErrorKind::Config, "no output directory given (--out)");
    std::error_code ec;
    fs::create_directories(r.out, ec);
    if (ec) throw Error(ErrorKind::Io, fmt::format("cannot create output directory {}: {}", r.out.string(), ec.message()));
    return r.out;
}

std::string dump(const json& j)
{
    return j.dump(2) + "\n";
}

std::vector<std::string> tap_labels(const StableRankCurve& c)
{
    std::vector<std::string> out;
    for (const auto& t : c.taps) out.push_back(fmt::format("{}:{}", t.tap_id, t.name));
    return out;
}

void cache_base_activations(const ModelBundle& bundle, const std::vector<ImageEntry>& images, std::size_t max_batch)
{
    const char* dir = std::getenv("NFRAME_CACHE");
    if (!dir || !*dir) return;
    ActivationCache cache(dir, bundle.manifest.name);
    std::vector<Raster> inputs;
    for (const auto& e : images) inputs.push_back(e.image.raster());
    const auto acts = forward_taps(bundle, inputs, max_batch);
    for (std::size_t i = 0; i < images.size(); ++i) {
        for (std::size_t t = 0; t < bundle.manifest.taps.size(); ++t) {
            cache.put(images[i].id, bundle.manifest.taps[t].tap_id, acts[i][t]);
        }
    }
    cache.flush();
}

int cmd_probe(const RunFlags& f)
{
    const Resolved r = resolve(f);
    const std::uint64_t seed = require_seed(r, any_stochastic(r.kinds), "noise and rotated frames");
    const ModelBundle bundle = load_bundle(r.models.front());
    const auto images = load_image_set(r.images, bundle.manifest.input);
    const fs::path out = require_out(r);

    const auto curves = stable_rank_curves(bundle, images, r.kinds, r.frame, seed, r.jobs);
    report::write_file(out / "results.csv", report::results_csv(curves));
    json summary = report::summary_json(curves);
    summary["seed"] = seed;
    report::write_file(out / "summary.json", dump(summary));
    if (r.plot) {
        std::vector<svg::Series> series;
        for (const auto& c : curves) {
            svg::Series s{std::string(to_string(c.frame)), {}};
            for (const auto& t : c.taps) s.values.push_back(t.mean);
            series.push_back(std::move(s));
        }
        report::write_file(out / "curve.svg",
                           svg::line_chart(bundle.manifest.name + " stable rank", "stable rank", tap_labels(curves.front()),
                                           series));
    }
    cache_base_activations(bundle, images, r.frame.max_batch);
    std::cout << report::curve_table(curves);
    for (const auto& c : curves) {
        for (const auto& s : c.skipped) std::cout << fmt::format("skipped {} ({}): {}\n", s.image_id, to_string(c.frame), s.reason);
    }
    return 0;
}

int cmd_cka(const RunFlags& f)
{
    const Resolved r = resolve(f);
    if (r.models.size() > 2) throw Error(ErrorKind::Config, "cka takes one or two --model bundles");
    const std::uint64_t seed = require_seed(r, any_stochastic(r.kinds), "noise and rotated frames");
    const ModelBundle a = load_bundle(r.models.front());
    std::optional<ModelBundle> b;
    if (r.models.size() == 2) b.emplace(load_bundle(r.models.back()));
    const ModelBundle& bb = b ? *b : a;
    const auto images = load_image_set(r.images, a.manifest.input);
    const fs::path out = require_out(r);

    const CkaReport rep = frame_cka(a, bb, images, r.frame, seed, r.jobs);
    report::write_file(out / "cka.csv", report::cka_csv(rep));
    json j = report::cka_json(rep);
    j["frame"] = std::string(to_string(r.frame.kind));
    j["seed"] = seed;
    report::write_file(out / "cka.json", dump(j));
    std::vector<std::string> rows;
    std::vector<std::string> cols;
    for (std::size_t i = 0; i < rep.taps_a.size(); ++i) rows.push_back(fmt::format("{}:{}", rep.taps_a[i], rep.names_a[i]));
    for (std::size_t i = 0; i < rep.taps_b.size(); ++i) cols.push_back(fmt::format("{}:{}", rep.taps_b[i], rep.names_b[i]));
    report::write_file(out / "cka.svg",
                       svg::heatmap(fmt::format("frame CKA: {} vs {}", rep.model_a, rep.model_b), rows, cols, rep.mean));

    std::vector<std::vector<std::string>> table;
    for (Eigen::Index p = 0; p < rep.mean.rows(); ++p) {
        std::vector<std::string> row{rows[static_cast<std::size_t>(p)]};
        for (Eigen::Index q = 0; q < rep.mean.cols(); ++q) {
            row.push_back(std::isnan(rep.mean(p, q)) ? "-" : fmt::format("{:.4f}", rep.mean(p, q)));
        }
        table.push_back(std::move(row));
    }
    std::vector<std::string> header{rep.model_a + " \\ " + rep.model_b};
    header.insert(header.end(), cols.begin(), cols.end());
    std::cout << report::table(header, table);
    return 0;
}

int cmd_mp_check(int n, int trials, std::uint64_t seed, int jobs)
{
    const auto mc = linalg::mc_residual_stable_rank(n, trials, seed, jobs);
    const auto ci_r = stats::t_interval(mc.residual_trials);
    const auto ci_w = stats::t_interval(mc.weight_trials);
    json j{{"n", n},
           {"trials", trials},
           {"seed", seed},
           {"residual_mean", mc.residual_mean},
           {"residual_ci", {ci_r.low, ci_r.high}},
           {"weight_mean", mc.weight_mean},
           {"weight_ci", {ci_w.low, ci_w.high}},
           {"residual_coefficient", linalg::mp_residual_coefficient()},
           {"weight_coefficient", linalg::mp_weight_coefficient()}};
    std::cout << dump(j);
    std::cout << report::table({"quantity", "monte carlo r/n", "limit"},
                               {{"r(I+W)/n", fmt::format("{:.5f}", mc.residual_mean),
                                 fmt::format("{:.5f}", linalg::mp_residual_coefficient())},
                                {"r(W)/n", fmt::format("{:.5f}", mc.weight_mean),
                                 fmt::format("{:.5f}", linalg::mp_weight_coefficient())}});
    return 0;
}

struct Rank3Flags {
    std::string image;
    bool synthetic = false;
    int size = 256;
    std::size_t centers = 3;
    double radius = 50.0;
    double degrees = 2.0;
    int upscale = 4;
    std::string interp = "bilinear";
};

int cmd_rank3(const Rank3Flags& f)
{
    if (f.synthetic == !f.image.empty()) throw Error(ErrorKind::Config, "give exactly one of --image or --synthetic");
    const Image x = f.synthetic ? gaussian_blob_image(f.size, f.size) : read_image(f.image);
    const auto centers = spread_rotation_centers(f.centers, f.radius);
    const auto span = rotation_span_spectrum(x, centers, f.degrees, f.upscale, parse_interpolation(f.interp));
    json j;
    j["centers"] = json::array();
    for (const auto& c : centers) j["centers"].push_back({c.x, c.y});
    j["degrees"] = f.degrees;
    j["upscale"] = f.upscale;
    j["border_crop"] = span.border_crop;
    j["degenerate"] = span.degenerate;
    j["singular_values"] = span.spectrum.values;
    std::vector<double> rel;
    for (std::size_t i = 0; i < span.spectrum.size(); ++i) rel.push_back(span.spectrum.relative(i));
    j["relative"] = rel;
    if (span.spectrum.size() >= 4) j["ratio_4_1"] = span.spectrum.relative(3);
    std::cout << dump(j);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < span.spectrum.size(); ++i) {
        rows.push_back({std::to_string(i + 1), fmt::format("{:.6g}", span.spectrum.values[i]), fmt::format("{:.6f}", rel[i])});
    }
    std::cout << report::table({"i", "sigma_i", "sigma_i/sigma_1"}, rows);
    return 0;
}

int cmd_sweep_k(const RunFlags& f, const std::vector<std::size_t>& ks)
{
    const Resolved r = resolve(f);
    if (ks.empty()) throw Error(ErrorKind::Config, "no k values given (--k)");
    const std::uint64_t seed = require_seed(r, true, "the random augmentation order");
    const ModelBundle bundle = load_bundle(r.models.front());
    const auto images = load_image_set(r.images, bundle.manifest.input);
    const fs::path out = require_out(r);

    const auto curves = vary_k_sweep(bundle, images, ks, r.frame, seed, r.jobs);
    std::vector<std::string> keys;
    for (auto k : ks) keys.push_back(std::to_string(k));
    report::write_file(out / "sweep_k.csv", report::aggregate_csv("k", keys, curves));
    json j;
    j["frame"] = std::string(to_string(r.frame.kind));
    j["seed"] = seed;
    j["order"] = json::array();
    for (auto idx : augmentation_order(r.frame.augmentations.size(), seed)) {
        j["order"].push_back(r.frame.augmentations[idx].label());
    }
    j["curves"] = json::array();
    for (const auto& c : curves) j["curves"].push_back(report::curve_json(c));
    report::write_file(out / "sweep_k.json", dump(j));
    if (r.plot) {
        std::vector<svg::Series> series;
        for (std::size_t i = 0; i < curves.size() && i < 12; ++i) {
            svg::Series s{"k=" + keys[i], {}};
            for (const auto& t : curves[i].taps) s.values.push_back(t.mean);
            series.push_back(std::move(s));
        }
        report::write_file(out / "sweep_k.svg",
                           svg::line_chart("stable rank vs k", "stable rank", tap_labels(curves.front()), series));
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        for (const auto& t : curves[i].taps) {
            rows.push_back({keys[i], std::to_string(t.tap_id), t.name, t.mean ? fmt::format("{:.4f}", *t.mean) : "-",
                            std::to_string(t.n)});
        }
    }
    std::cout << report::table({"k", "layer", "name", "mean", "n"}, rows);
    return 0;
}

struct IdimFlags {
    std::string estimator = "both";
    std::string synthetic;
    std::string input;
    std::size_t points = 5000;
    int ambient = 10;
    int dim = 5;
    std::uint64_t seed = 0;
    int k = 20;
    double discard = 0.1;
    double scale = 1.0;
    int jobs = 1;
    std::string model;
    std::string images;
    int tap = -1;
};

linalg::Matrix read_points_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw Error(ErrorKind::InvalidInput, fmt::format("{}:{}: '{}' is not a number", path.string(), lineno, cell));
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw Error(ErrorKind::Shape, fmt::format("{}:{}: expected {} columns", path.string(), lineno, rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorKind::InvalidInput, path.string() + " has no points");
    linalg::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

linalg::Matrix tap_points(const IdimFlags& f)
{
    const ModelBundle bundle = load_bundle(f.model);
    const auto images = load_image_set(f.images, bundle.manifest.input);
    std::vector<Raster> inputs;
    for (const auto& e : images) inputs.push_back(e.image.raster());
    if (f.tap == 0) {
        linalg::Matrix m(static_cast<Eigen::Index>(inputs.size()), inputs.front().flat().size());
        for (std::size_t i = 0; i < inputs.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = inputs[i].flat().transpose();
        return m;
    }
    std::size_t slot = bundle.manifest.taps.size();
    for (std::size_t t = 0; t < bundle.manifest.taps.size(); ++t) {
        if (bundle.manifest.taps[t].tap_id == f.tap) slot = t;
    }
    if (slot == bundle.manifest.taps.size()) throw Error(ErrorKind::Config, fmt::format("model has no tap {}", f.tap));
    const auto acts = forward_taps(bundle, inputs);
    linalg::Matrix m(static_cast<Eigen::Index>(inputs.size()), acts.front()[slot].size());
    for (std::size_t i = 0; i < inputs.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = acts[i][slot].transpose();
    return m;
}

int cmd_idim(const IdimFlags& f)
{
    const int sources = (!f.synthetic.empty()) + (!f.input.empty()) + (!f.model.empty());
    if (sources != 1) throw Error(ErrorKind::Config, "give exactly one of --synthetic, --input or --model/--images/--tap");
    linalg::Matrix pts;
    std::string source;
    if (!f.synthetic.empty()) {
        if (f.synthetic == "plane") {
            pts = idim::sample_plane(f.points, f.ambient, f.seed);
        } else if (f.synthetic == "line") {
            pts = idim::sample_line(f.points, f.ambient, f.seed);
        } else if (f.synthetic == "cube") {
            pts = idim::sample_hypercube(f.points, f.dim, f.seed);
        } else {
            throw Error(ErrorKind::Config, "unknown synthetic set '" + f.synthetic + "' (plane, line, cube)");
        }
        source = "synthetic:" + f.synthetic;
    } else if (!f.input.empty()) {
        pts = read_points_csv(f.input);
        source = f.input;
    } else {
        if (f.images.empty() || f.tap < 0) throw Error(ErrorKind::Config, "--model needs --images and --tap");
        pts = tap_points(f);
        source = fmt::format("{} tap {}", f.model, f.tap);
    }
    if (!(f.scale > 0.0)) throw Error(ErrorKind::Config, "--scale must be positive");
    pts *= f.scale;

    std::vector<idim::IdEstimate> results;
    if (f.estimator == "twonn" || f.estimator == "both") results.push_back(idim::twonn_id(pts, f.discard, f.jobs));
    if (f.estimator == "mle" || f.estimator == "both") results.push_back(idim::mle_id(pts, f.k, f.jobs));
    if (results.empty()) throw Error(ErrorKind::Config, "unknown estimator '" + f.estimator + "' (twonn, mle, both)");

    json j;
    j["source"] = source;
    j["estimates"] = json::array();
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : results) {
        json ej{{"estimator", idim::to_string(e.estimator)}, {"value", e.value}, {"points", e.points},
                {"duplicates_removed", e.duplicates_removed}, {"warnings", e.warnings}};
        if (e.estimator == idim::Estimator::Mle) ej["k_neighbors"] = e.k_neighbors;
        if (e.estimator == idim::Estimator::TwoNN) ej["discard_fraction"] = e.discard_fraction;
        j["estimates"].push_back(ej);
        rows.push_back({idim::to_string(e.estimator), fmt::format("{:.4f}", e.value), std::to_string(e.points)});
    }
    std::cout << dump(j);
    std::cout << report::table({"estimator", "dimension", "points"}, rows);
    return 0;
}

struct FixtureFlags {
    std::string out;
    std::uint64_t seed = 0;
    bool linear = false;
    double weight_scale = 1.0;
    std::optional<double> accuracy;
    std::string name = "fixture";
};

int cmd_fixture(const FixtureFlags& f)
{
    FixtureOptions opts;
    opts.linear = f.linear;
    opts.weight_scale = f.weight_scale;
    opts.top1_accuracy = f.accuracy;
    opts.name = f.name;
    const auto paths = make_fixture_bundle(f.out, f.seed, opts);
    const ModelBundle bundle = load_bundle(paths.graph, paths.manifest);
    json j{{"graph", paths.graph.string()}, {"manifest", paths.manifest.string()}, {"name", bundle.manifest.name},
           {"taps", bundle.manifest.taps.size()}};
    std::cout << dump(j);
    std::vector<std::vector<std::string>> rows;
    for (const auto& t : bundle.manifest.taps) rows.push_back({std::to_string(t.tap_id), t.display_name, t.tensor_name});
    std::cout << report::table({"tap", "name", "tensor"}, rows);
    return 0;
}

int cmd_series(const RunFlags& f)
{
    const Resolved r = resolve(f);
    const std::uint64_t seed = require_seed(r, any_stochastic(r.kinds), "noise and rotated frames");
    std::vector<ModelBundle> bundles;
    for (const auto& m : r.models) bundles.push_back(load_bundle(m));
    std::vector<const ModelBundle*> ptrs;
    for (const auto& b : bundles) ptrs.push_back(&b);
    const auto images = load_image_set(r.images, bundles.front().manifest.input);
    const fs::path out = require_out(r);

    const auto curves = checkpoint_series(ptrs, images, r.frame, seed, r.jobs);
    std::vector<std::string> keys;
    for (std::size_t i = 0; i < curves.size(); ++i) keys.push_back(std::to_string(i));
    report::write_file(out / "series.csv", report::aggregate_csv("checkpoint", keys, curves));
    json j;
    j["checkpoints"] = json::array();
    for (std::size_t i = 0; i < curves.size(); ++i) {
        j["checkpoints"].push_back({{"index", i}, {"path", r.models[i].string()}, {"curve", report::curve_json(curves[i])}});
    }
    report::write_file(out / "series.json", dump(j));
    if (r.plot) {
        std::vector<svg::Series> series;
        for (std::size_t t = 0; t < curves.front().taps.size() && t < 12; ++t) {
            svg::Series s{curves.front().taps[t].name, {}};
            for (const auto& c : curves) s.values.push_back(c.taps[t].mean);
            series.push_back(std::move(s));
        }
        report::write_file(out / "series.svg", svg::line_chart("stable rank over checkpoints", "stable rank", keys, series));
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        for (const auto& t : curves[i].taps) {
            rows.push_back({keys[i], std::to_string(t.tap_id), t.name, t.mean ? fmt::format("{:.4f}", *t.mean) : "-",
                            std::to_string(t.degenerate)});
        }
    }
    std::cout << report::table({"checkpoint", "layer", "name", "mean", "degenerate"}, rows);
    return 0;
}

int cmd_correlate(const RunFlags& f)
{
    const Resolved r = resolve(f);
    const std::uint64_t seed = require_seed(r, any_stochastic(r.kinds), "noise and rotated frames");
    std::vector<StableRankCurve> curves;
    std::vector<std::optional<double>> acc;
    for (const auto& m : r.models) {
        const ModelBundle bundle = load_bundle(m);
        const auto images = load_image_set(r.images, bundle.manifest.input);
        curves.push_back(stable_rank_curve(bundle, images, r.frame, seed, r.jobs));
        acc.push_back(bundle.manifest.top1_accuracy);
    }
    const fs::path out = require_out(r);
    const auto rep = accuracy_correlation(curves, acc);
    json j = report::correlation_json(rep);
    j["frame"] = std::string(to_string(r.frame.kind));
    j["seed"] = seed;
    report::write_file(out / "correlation.json", dump(j));
    report::write_file(out / "summary.json", dump(report::summary_json(curves)));
    std::vector<std::vector<std::string>> rows;
    const auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("null"); };
    for (const auto& t : rep.taps) {
        rows.push_back({std::to_string(t.tap_id), t.name, cell(t.pearson), cell(t.spearman), std::to_string(t.models)});
    }
    std::cout << report::table({"layer", "name", "pearson", "spearman", "models"}, rows);
    for (const auto& w : rep.warnings) std::cout << "warning: " << w << "\n";
    return 0;
}

void print_error(const std::string& kind, const std::string& message)
{
    std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Neural frame analysis"};
    app.require_subcommand(1);

    RunFlags probe_flags;
    auto* probe = app.add_subcommand("probe", "Per-layer stable rank of frames pushed through a model");
    add_run_flags(probe, probe_flags, true, false);

    RunFlags cka_flags;
    auto* cka = app.add_subcommand("cka", "Frame CKA between the taps of one or two models");
    add_run_flags(cka, cka_flags, false, true);

    int mp_n = 512;
    int mp_trials = 30;
    std::uint64_t mp_seed = 0;
    int mp_jobs = 1;
    auto* mp = app.add_subcommand("mp-check", "Monte Carlo stable rank of I + W against the large-n limit");
    mp->add_option("--n", mp_n, "Matrix size")->check(CLI::Range(2, 1 << 14));
    mp->add_option("--trials", mp_trials, "Number of draws")->check(CLI::Range(2, 100000));
    mp->add_option("--seed", mp_seed, "Seed")->required();
    mp->add_option("--jobs", mp_jobs, "Worker threads")->check(CLI::PositiveNumber);

    Rank3Flags r3;
    auto* rank3 = app.add_subcommand("rank3", "Singular spectrum of rotation tangents about several centres");
    rank3->add_option("--image", r3.image, "Image file")->check(CLI::ExistingFile);
    rank3->add_flag("--synthetic", r3.synthetic, "Use a smooth synthetic image");
    rank3->add_option("--size", r3.size, "Synthetic image side")->check(CLI::Range(32, 4096));
    rank3->add_option("--centers", r3.centers, "Number of rotation centres (1-9)");
    rank3->add_option("--radius", r3.radius, "Offset of the outer centres in pixels");
    rank3->add_option("--degrees", r3.degrees, "Rotation angle");
    rank3->add_option("--upscale", r3.upscale, "Upscale factor")->check(CLI::Range(1, 16));
    rank3->add_option("--interp", r3.interp, "bilinear, nearest or bicubic");

    RunFlags sweep_flags;
    std::vector<std::size_t> sweep_ks;
    auto* sweep = app.add_subcommand("sweep-k", "Stable-rank curves for growing frame sizes");
    add_run_flags(sweep, sweep_flags, false, false);
    sweep->add_option("--k", sweep_ks, "Frame sizes, e.g. 2,5,10,19")->delimiter(',');

    IdimFlags id;
    auto* idim_cmd = app.add_subcommand("idim", "Intrinsic dimension (TwoNN, MLE) of a point cloud");
    idim_cmd->add_option("--estimator", id.estimator, "twonn, mle or both");
    idim_cmd->add_option("--synthetic", id.synthetic, "plane, line or cube");
    idim_cmd->add_option("--input", id.input, "CSV file, one point per row")->check(CLI::ExistingFile);
    idim_cmd->add_option("--points", id.points, "Synthetic point count");
    idim_cmd->add_option("--ambient", id.ambient, "Ambient dimension for plane/line");
    idim_cmd->add_option("--dim", id.dim, "Cube dimension");
    idim_cmd->add_option("--seed", id.seed, "Seed for synthetic sets");
    idim_cmd->add_option("--k", id.k, "MLE neighbours");
    idim_cmd->add_option("--discard", id.discard, "TwoNN discard fraction");
    idim_cmd->add_option("--scale", id.scale, "Multiply all points by this factor");
    idim_cmd->add_option("--jobs", id.jobs, "Worker threads")->check(CLI::PositiveNumber);
    idim_cmd->add_option("--model", id.model, "Model bundle for tap activations");
    idim_cmd->add_option("--images", id.images, "Images for tap activations");
    idim_cmd->add_option("--tap", id.tap, "Tap id (0 = input pixels)");

    FixtureFlags fx;
    auto* fixture = app.add_subcommand("fixture", "Write the small test model bundle");
    fixture->add_option("--out", fx.out, "Output directory")->required();
    fixture->add_option("--seed", fx.seed, "Weight seed");
    fixture->add_flag("--linear", fx.linear, "Affine variant (no ReLU, average pooling)");
    fixture->add_option("--weight-scale", fx.weight_scale, "Multiply all weights");
    fixture->add_option("--accuracy", fx.accuracy, "top1_accuracy recorded in the manifest");
    fixture->add_option("--name", fx.name, "Model name");

    RunFlags series_flags;
    auto* series = app.add_subcommand("series", "Stable-rank curves over an ordered list of checkpoints");
    add_run_flags(series, series_flags, false, true);

    RunFlags corr_flags;
    auto* corr = app.add_subcommand("correlate", "Correlation of mean stable rank with top-1 accuracy across models");
    add_run_flags(corr, corr_flags, false, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        print_error("usage", e.what());
        return 64;
    }

    try {
        if (*probe) return cmd_probe(probe_flags);
        if (*cka) return cmd_cka(cka_flags);
        if (*mp) return cmd_mp_check(mp_n, mp_trials, mp_seed, mp_jobs);
        if (*rank3) return cmd_rank3(r3);
        if (*sweep) return cmd_sweep_k(sweep_flags, sweep_ks);
        if (*idim_cmd) return cmd_idim(id);
        if (*fixture) return cmd_fixture(fx);
        if (*series) return cmd_series(series_flags);
        if (*corr) return cmd_correlate(corr_flags);
    } catch (const Error& e) {
        print_error(std::string(to_string(e.kind())), e.what());
        return 2;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 3;
    }
    return 64;
}
