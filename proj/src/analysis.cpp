#include "nframe/analysis.hpp"

#include "nframe/error.hpp"
#include "nframe/image_io.hpp"
#include "nframe/parallel.hpp"
#include "nframe/rng.hpp"
#include "nframe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>

namespace nframe {

namespace fs = std::filesystem;

std::vector<ImageEntry> load_image_set(const fs::path& dir, const std::optional<InputSpec>& input)
{
    std::vector<ImageEntry> out;
    std::set<std::string> ids;
    for (const auto& file : list_image_files(dir)) {
        std::string id = file.stem().string();
        if (!ids.insert(id).second) {
            throw Error(ErrorKind::Config, fmt::format("two images in {} share the id '{}'", dir.string(), id));
        }
        Image img = read_image(file);
        if (input) img = fit_to_input(img, *input);
        out.push_back({std::move(id), std::move(img)});
    }
    return out;
}

Frame build_frame(const ImageEntry& entry, std::size_t image_index, const FrameConfig& config, std::uint64_t seed)
{
    switch (config.kind) {
    case FrameKind::Augmentation:
        return build_augmentation_frame(entry.image, config.augmentations);
    case FrameKind::Noise: {
        const Frame reference = build_augmentation_frame(entry.image, config.augmentations);
        const std::size_t k = config.noise_k == 0 ? reference.size() : config.noise_k;
        return build_noise_frame(entry.image, k, derive_seed(seed, "noise", image_index), reference);
    }
    case FrameKind::RotatedAugmentation:
        return build_rotated_frame(build_augmentation_frame(entry.image, config.augmentations),
                                   derive_seed(seed, "rotated", image_index));
    case FrameKind::External:
        if (config.external_dir.empty()) {
            throw Error(ErrorKind::Config, "external frames need a frame directory");
        }
        return load_external_frame(entry.image, config.external_dir / entry.id);
    }
    throw Error(ErrorKind::Config, "unknown frame kind");
}

namespace {

struct KindResult {
    bool ok = false;
    std::string reason;
    std::vector<std::optional<double>> ranks;  // per tap, tap 0 first
    std::vector<std::string> warnings;
    double matched_norm = 0.0;
    std::size_t k = 0;
};

std::vector<std::optional<double>> tap_stable_ranks(const NeuralFrame& nf)
{
    std::vector<std::optional<double>> out;
    out.reserve(nf.taps.size());
    for (const auto& tap : nf.taps) {
        try {
            out.emplace_back(linalg::stable_rank(tap.columns));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::UndefinedStableRank) throw;
            out.emplace_back(std::nullopt);
        }
    }
    return out;
}

KindResult probe_frame(const ModelBundle& bundle, const Frame& frame, const FrameConfig& config)
{
    KindResult r;
    const NeuralFrame nf = compute_neural_frame(bundle, frame, config.max_batch);
    r.ranks = tap_stable_ranks(nf);
    r.warnings = frame.warnings;
    r.warnings.insert(r.warnings.end(), nf.warnings.begin(), nf.warnings.end());
    r.matched_norm = frame.matched_norm;
    r.k = frame.size();
    r.ok = true;
    return r;
}

std::vector<std::pair<int, std::string>> tap_names(const ModelBundle& bundle)
{
    std::vector<std::pair<int, std::string>> out{{0, "input"}};
    for (const auto& t : bundle.manifest.taps) out.emplace_back(t.tap_id, t.display_name);
    return out;
}

StableRankCurve aggregate(const ModelBundle& bundle, FrameKind kind, const std::vector<ImageEntry>& images,
                          const std::vector<KindResult>& results)
{
    StableRankCurve curve;
    curve.model = bundle.manifest.name;
    curve.frame = kind;
    const auto names = tap_names(bundle);
    curve.taps.resize(names.size());
    for (std::size_t t = 0; t < names.size(); ++t) {
        curve.taps[t].tap_id = names[t].first;
        curve.taps[t].name = names[t].second;
    }
    double norm_sum = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const KindResult& r = results[i];
        if (!r.ok) {
            curve.skipped.push_back({images[i].id, r.reason});
            continue;
        }
        curve.image_ids.push_back(images[i].id);
        curve.k = r.k;
        norm_sum += r.matched_norm;
        for (const auto& w : r.warnings) curve.warnings.push_back(images[i].id + ": " + w);
        for (std::size_t t = 0; t < names.size(); ++t) {
            curve.taps[t].per_image.push_back(r.ranks[t]);
            if (!r.ranks[t]) ++curve.taps[t].degenerate;
        }
    }
    if (curve.image_ids.size() < 2) {
        throw Error(ErrorKind::Degenerate,
                    fmt::format("{} frame curve needs at least 2 successful images, got {}{}", to_string(kind),
                                curve.image_ids.size(),
                                curve.skipped.empty() ? "" : " (first failure: " + curve.skipped.front().reason + ")"));
    }
    curve.matched_noise_norm = norm_sum / static_cast<double>(curve.image_ids.size());
    for (auto& tap : curve.taps) {
        std::vector<double> values;
        for (const auto& v : tap.per_image) {
            if (v) values.push_back(*v);
        }
        tap.n = values.size();
        if (!values.empty()) tap.mean = stats::mean(values);
        if (values.size() >= 2) {
            const auto ci = stats::t_interval(values);
            tap.ci_low = ci.low;
            tap.ci_high = ci.high;
        }
    }
    return curve;
}

bool needs_augmentation_reference(FrameKind kind)
{
    return kind == FrameKind::Augmentation || kind == FrameKind::Noise || kind == FrameKind::RotatedAugmentation;
}

}  // namespace

std::vector<StableRankCurve> stable_rank_curves(const ModelBundle& bundle, const std::vector<ImageEntry>& images,
                                                const std::vector<FrameKind>& kinds, const FrameConfig& config,
                                                std::uint64_t seed, int jobs)
{
    if (images.size() < 2) {
        throw Error(ErrorKind::Config, fmt::format("stable-rank curves need at least 2 images, got {}", images.size()));
    }
    if (kinds.empty()) {
        throw Error(ErrorKind::Config, "no frame kinds requested");
    }
    // results[kind][image]
    std::vector<std::vector<KindResult>> results(kinds.size(), std::vector<KindResult>(images.size()));

    parallel_for(images.size(), jobs, [&](std::size_t i) {
        const ImageEntry& entry = images[i];
        std::optional<Frame> reference;
        std::string reference_error;
        if (std::any_of(kinds.begin(), kinds.end(), needs_augmentation_reference)) {
            try {
                reference = build_augmentation_frame(entry.image, config.augmentations);
            } catch (const Error& e) {
                reference_error = e.what();
            }
        }
        for (std::size_t q = 0; q < kinds.size(); ++q) {
            KindResult& slot = results[q][i];
            try {
                if (needs_augmentation_reference(kinds[q]) && !reference) {
                    throw Error(ErrorKind::Config, reference_error);
                }
                switch (kinds[q]) {
                case FrameKind::Augmentation:
                    slot = probe_frame(bundle, *reference, config);
                    break;
                case FrameKind::Noise: {
                    const std::size_t k = config.noise_k == 0 ? reference->size() : config.noise_k;
                    slot = probe_frame(bundle, build_noise_frame(entry.image, k, derive_seed(seed, "noise", i), *reference),
                                       config);
                    break;
                }
                case FrameKind::RotatedAugmentation:
                    slot = probe_frame(bundle, build_rotated_frame(*reference, derive_seed(seed, "rotated", i)), config);
                    break;
                case FrameKind::External: {
                    FrameConfig external = config;
                    external.kind = FrameKind::External;
                    slot = probe_frame(bundle, build_frame(entry, i, external, seed), config);
                    break;
                }
                }
            } catch (const Error& e) {
                slot.ok = false;
                slot.reason = fmt::format("{}: {}", to_string(e.kind()), e.what());
            }
        }
    });

    std::vector<StableRankCurve> curves;
    for (std::size_t q = 0; q < kinds.size(); ++q) curves.push_back(aggregate(bundle, kinds[q], images, results[q]));
    return curves;
}

StableRankCurve stable_rank_curve(const ModelBundle& bundle, const std::vector<ImageEntry>& images,
                                  const FrameConfig& config, std::uint64_t seed, int jobs)
{
    return stable_rank_curves(bundle, images, {config.kind}, config, seed, jobs).front();
}

namespace {

struct ImageGrams {
    bool ok = false;
    std::string reason;
    std::vector<linalg::Matrix> a;
    std::vector<linalg::Matrix> b;
    std::vector<char> a_degenerate;
    std::vector<char> b_degenerate;
};

void tap_grams(const NeuralFrame& nf, std::vector<linalg::Matrix>& grams, std::vector<char>& degenerate)
{
    for (const auto& tap : nf.taps) {
        const linalg::Matrix rows = tap.columns.transpose();
        linalg::Matrix g = linalg::centered_gram(rows);
        const double scale = rows.squaredNorm();
        degenerate.push_back(g.trace() == 0.0 || g.trace() <= 1e-24 * scale);
        grams.push_back(std::move(g));
    }
}

}  // namespace

CkaReport frame_cka(const ModelBundle& bundle_a, const ModelBundle& bundle_b, const std::vector<ImageEntry>& images,
                    const FrameConfig& config, std::uint64_t seed, int jobs)
{
    if (bundle_a.manifest.input.height != bundle_b.manifest.input.height ||
        bundle_a.manifest.input.width != bundle_b.manifest.input.width) {
        throw Error(ErrorKind::Config, "frame CKA needs both models to accept the same input size");
    }
    if (images.empty()) {
        throw Error(ErrorKind::Config, "frame CKA needs at least one image");
    }
    const bool same = &bundle_a == &bundle_b;
    std::vector<ImageGrams> per_image(images.size());
    parallel_for(images.size(), jobs, [&](std::size_t i) {
        ImageGrams& slot = per_image[i];
        try {
            const Frame frame = build_frame(images[i], i, config, seed);
            const NeuralFrame nfa = compute_neural_frame(bundle_a, frame, config.max_batch);
            tap_grams(nfa, slot.a, slot.a_degenerate);
            if (same) {
                slot.b = slot.a;
                slot.b_degenerate = slot.a_degenerate;
            } else {
                tap_grams(compute_neural_frame(bundle_b, frame, config.max_batch), slot.b, slot.b_degenerate);
            }
            slot.ok = true;
        } catch (const Error& e) {
            slot.reason = fmt::format("{}: {}", to_string(e.kind()), e.what());
        }
    });

    CkaReport report;
    report.model_a = bundle_a.manifest.name;
    report.model_b = bundle_b.manifest.name;
    for (const auto& [id, name] : tap_names(bundle_a)) {
        report.taps_a.push_back(id);
        report.names_a.push_back(name);
    }
    for (const auto& [id, name] : tap_names(bundle_b)) {
        report.taps_b.push_back(id);
        report.names_b.push_back(name);
    }
    const auto ta = static_cast<Eigen::Index>(report.taps_a.size());
    const auto tb = static_cast<Eigen::Index>(report.taps_b.size());
    linalg::Matrix sums = linalg::Matrix::Zero(ta, tb);
    report.counts = Eigen::MatrixXi::Zero(ta, tb);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const ImageGrams& g = per_image[i];
        if (!g.ok) {
            report.skipped.push_back({images[i].id, g.reason});
            continue;
        }
        ++report.images;
        for (Eigen::Index p = 0; p < ta; ++p) {
            for (Eigen::Index q = 0; q < tb; ++q) {
                const auto up = static_cast<std::size_t>(p);
                const auto uq = static_cast<std::size_t>(q);
                if (g.a_degenerate[up] || g.b_degenerate[uq]) {
                    ++report.degenerate_pairs;
                    continue;
                }
                sums(p, q) += linalg::linear_cka_from_grams(g.a[up], g.b[uq]);
                ++report.counts(p, q);
            }
        }
    }
    report.mean = linalg::Matrix(ta, tb);
    for (Eigen::Index p = 0; p < ta; ++p) {
        for (Eigen::Index q = 0; q < tb; ++q) {
            report.mean(p, q) = report.counts(p, q) > 0 ? sums(p, q) / report.counts(p, q)
                                                        : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return report;
}

std::vector<std::size_t> augmentation_order(std::size_t count, std::uint64_t seed)
{
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    GaussianStream rng(derive_seed(seed, "augmentation_order"));
    for (std::size_t i = count; i-- > 1;) {
        const auto j = std::min(i, static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1)));
        std::swap(order[i], order[j]);
    }
    return order;
}

std::vector<StableRankCurve> vary_k_sweep(const ModelBundle& bundle, const std::vector<ImageEntry>& images,
                                          const std::vector<std::size_t>& k_values, const FrameConfig& config,
                                          std::uint64_t seed, int jobs)
{
    if (config.kind == FrameKind::External) {
        throw Error(ErrorKind::Config, "vary-k sweeps are defined for augmentation, rotated and noise frames");
    }
    const std::size_t available = config.augmentations.size();
    for (std::size_t k : k_values) {
        if (k < 2) throw Error(ErrorKind::Config, fmt::format("k = {} is below the minimum frame size 2", k));
        if (config.kind != FrameKind::Noise && k > available) {
            throw Error(ErrorKind::Config,
                        fmt::format("k = {} exceeds the {} configured augmentations", k, available));
        }
    }
    const auto order = augmentation_order(available, seed);

    std::vector<StableRankCurve> curves;
    for (std::size_t k : k_values) {
        FrameConfig sub = config;
        if (config.kind == FrameKind::Noise) {
            sub.noise_k = k;
        } else {
            std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
            std::sort(chosen.begin(), chosen.end());
            sub.augmentations.clear();
            for (std::size_t idx : chosen) sub.augmentations.push_back(config.augmentations[idx]);
        }
        StableRankCurve curve = stable_rank_curve(bundle, images, sub, seed, jobs);
        curve.k = k;
        curves.push_back(std::move(curve));
    }
    return curves;
}

CorrelationReport accuracy_correlation(const std::vector<StableRankCurve>& curves,
                                       const std::vector<std::optional<double>>& accuracies)
{
    if (curves.size() != accuracies.size()) {
        throw Error(ErrorKind::Shape, "accuracy_correlation: one accuracy per curve is required");
    }
    CorrelationReport report;
    std::vector<std::size_t> used;
    for (std::size_t m = 0; m < curves.size(); ++m) {
        if (!accuracies[m]) {
            report.warnings.push_back(fmt::format("model '{}' has no top-1 accuracy and was excluded", curves[m].model));
            continue;
        }
        used.push_back(m);
        report.models.push_back(curves[m].model);
    }
    if (used.size() < 3) {
        throw Error(ErrorKind::Config,
                    fmt::format("accuracy correlation needs at least 3 models with accuracy, got {}", used.size()));
    }
    // Taps present in every used curve, in the first curve's order.
    for (const auto& tap : curves[used.front()].taps) {
        TapCorrelation tc;
        tc.tap_id = tap.tap_id;
        tc.name = tap.name;
        std::vector<double> ranks;
        std::vector<double> acc;
        for (std::size_t m : used) {
            const auto it = std::find_if(curves[m].taps.begin(), curves[m].taps.end(),
                                         [&](const TapCurvePoint& p) { return p.tap_id == tap.tap_id; });
            if (it == curves[m].taps.end() || !it->mean) continue;
            ranks.push_back(*it->mean);
            acc.push_back(*accuracies[m]);
        }
        tc.models = ranks.size();
        if (ranks.size() >= 3) {
            tc.pearson = stats::pearson(ranks, acc);
            tc.spearman = stats::spearman(ranks, acc);
        }
        report.taps.push_back(std::move(tc));
    }
    return report;
}

std::vector<StableRankCurve> checkpoint_series(const std::vector<const ModelBundle*>& bundles,
                                               const std::vector<ImageEntry>& images, const FrameConfig& config,
                                               std::uint64_t seed, int jobs)
{
    if (bundles.size() < 2) {
        throw Error(ErrorKind::Config, "a checkpoint series needs at least 2 bundles");
    }
    const auto& first = bundles.front()->manifest;
    for (const ModelBundle* b : bundles) {
        if (b->manifest.taps.size() != first.taps.size()) {
            throw Error(ErrorKind::Config, fmt::format("checkpoint '{}' has {} taps, expected {}", b->manifest.name,
                                                       b->manifest.taps.size(), first.taps.size()));
        }
        if (b->manifest.input.height != first.input.height || b->manifest.input.width != first.input.width) {
            throw Error(ErrorKind::Config, fmt::format("checkpoint '{}' has a different input size", b->manifest.name));
        }
    }
    std::vector<StableRankCurve> curves;
    for (const ModelBundle* b : bundles) curves.push_back(stable_rank_curve(*b, images, config, seed, jobs));
    return curves;
}

}  // namespace nframe
