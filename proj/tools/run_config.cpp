#include "run_config.hpp"

#include "nframe/error.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

namespace nframe::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& source, const std::string& what)
{
    throw Error(ErrorKind::Config, fmt::format("{}: {}", source, what));
}

void check_keys(const toml::table& t, const std::set<std::string>& allowed, const std::string& source,
                const std::string& where)
{
    for (const auto& [key, node] : t) {
        if (!allowed.count(std::string(key.str()))) fail(source, fmt::format("unknown key '{}' in {}", key.str(), where));
    }
}

std::string get_string(const toml::node& n, const std::string& source, const std::string& key)
{
    if (auto v = n.value<std::string>()) return *v;
    fail(source, fmt::format("'{}' must be a string", key));
}

double get_number(const toml::node& n, const std::string& source, const std::string& key)
{
    if (n.is_integer()) return static_cast<double>(*n.value<std::int64_t>());
    if (auto v = n.value<double>()) return *v;
    fail(source, fmt::format("'{}' must be a number", key));
}

std::int64_t get_int(const toml::node& n, const std::string& source, const std::string& key)
{
    if (n.is_integer()) return *n.value<std::int64_t>();
    fail(source, fmt::format("'{}' must be an integer", key));
}

std::size_t get_count(const toml::node& n, const std::string& source, const std::string& key)
{
    const auto v = get_int(n, source, key);
    if (v < 0) fail(source, fmt::format("'{}' must not be negative", key));
    return static_cast<std::size_t>(v);
}

fs::path resolve(const fs::path& base, const std::string& p)
{
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

AugmentationSpec parse_augmentation(const toml::table& t, const std::string& source, std::size_t index)
{
    const std::string where = fmt::format("[[augmentation]] #{}", index + 1);
    check_keys(t, {"kind", "amount", "interp", "gain", "cutoff", "center", "upscale", "border_crop"}, source, where);
    const auto* kind = t.get("kind");
    if (!kind) fail(source, where + " needs a 'kind'");
    AugmentationSpec spec;
    try {
        spec = AugmentationSpec::defaults(parse_augmentation_kind(get_string(*kind, source, "kind")));
        if (const auto* n = t.get("amount")) spec.amount = get_number(*n, source, "amount");
        if (const auto* n = t.get("interp")) spec.interp = parse_interpolation(get_string(*n, source, "interp"));
        if (const auto* n = t.get("gain")) spec.gain = get_number(*n, source, "gain");
        if (const auto* n = t.get("cutoff")) spec.cutoff = get_number(*n, source, "cutoff");
        if (const auto* n = t.get("upscale")) spec.upscale = static_cast<int>(get_int(*n, source, "upscale"));
        if (const auto* n = t.get("border_crop")) spec.border_crop = static_cast<int>(get_int(*n, source, "border_crop"));
        if (const auto* n = t.get("center")) {
            const auto* arr = n->as_array();
            if (!arr || arr->size() != 2) fail(source, where + ": 'center' must be [x, y]");
            spec.center = {get_number(*arr->get(0), source, "center"), get_number(*arr->get(1), source, "center")};
        }
        spec.validate();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw;
        fail(source, fmt::format("{}: {}", where, e.what()));
    }
    return spec;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir, const std::string& source)
{
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << e.description() << " (line " << e.source().begin.line << ")";
        fail(source, msg.str());
    }
    check_keys(root, {"model", "models", "images", "frames", "frame", "seed", "jobs", "out", "plot", "augmentation"},
               source, "top level");

    RunConfig cfg;
    if (const auto* n = root.get("model")) cfg.models.push_back(resolve(base_dir, get_string(*n, source, "model")));
    if (const auto* n = root.get("models")) {
        const auto* arr = n->as_array();
        if (!arr) fail(source, "'models' must be an array of paths");
        for (const auto& m : *arr) cfg.models.push_back(resolve(base_dir, get_string(m, source, "models")));
    }
    if (const auto* n = root.get("images")) cfg.images = resolve(base_dir, get_string(*n, source, "images"));
    if (const auto* n = root.get("frames")) {
        const auto* arr = n->as_array();
        if (!arr) fail(source, "'frames' must be an array of frame kinds");
        for (const auto& f : *arr) cfg.frames.push_back(get_string(f, source, "frames"));
    }
    if (const auto* n = root.get("seed")) {
        const auto v = get_int(*n, source, "seed");
        cfg.seed = static_cast<std::uint64_t>(v);
    }
    if (const auto* n = root.get("jobs")) {
        const auto v = get_int(*n, source, "jobs");
        if (v < 1) fail(source, "'jobs' must be at least 1");
        cfg.jobs = static_cast<int>(v);
    }
    if (const auto* n = root.get("out")) cfg.out = resolve(base_dir, get_string(*n, source, "out"));
    if (const auto* n = root.get("plot")) {
        if (auto v = n->value<bool>()) {
            cfg.plot = *v;
        } else {
            fail(source, "'plot' must be a boolean");
        }
    }
    if (const auto* n = root.get("frame")) {
        const auto* t = n->as_table();
        if (!t) fail(source, "[frame] must be a table");
        check_keys(*t, {"dir", "noise_k", "max_batch"}, source, "[frame]");
        if (const auto* d = t->get("dir")) cfg.frame_dir = resolve(base_dir, get_string(*d, source, "dir"));
        if (const auto* k = t->get("noise_k")) cfg.noise_k = get_count(*k, source, "noise_k");
        if (const auto* b = t->get("max_batch")) cfg.max_batch = get_count(*b, source, "max_batch");
    }
    if (const auto* n = root.get("augmentation")) {
        const auto* arr = n->as_array();
        if (!arr) fail(source, "'augmentation' must be an array of tables ([[augmentation]])");
        std::vector<AugmentationSpec> specs;
        for (std::size_t i = 0; i < arr->size(); ++i) {
            const auto* t = arr->get(i)->as_table();
            if (!t) fail(source, "'augmentation' entries must be tables");
            specs.push_back(parse_augmentation(*t, source, i));
        }
        cfg.augmentations = std::move(specs);
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str(), path.parent_path(), path.string());
}

}  // namespace nframe::cli
