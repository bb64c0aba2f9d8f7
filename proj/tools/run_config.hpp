#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nframe/augment.hpp"

namespace nframe::cli {

// Values read from a --config TOML file. Command-line flags win over these.
//
//   model = "fixture/"            # or models = ["a/", "b/"]
//   images = "imgs/"
//   frames = ["augmentation", "noise"]
//   seed = 0
//   jobs = 4
//   out = "run/"
//   plot = true
//   [frame]
//   dir = "perts/"                # external frames
//   noise_k = 19
//   max_batch = 8
//   [[augmentation]]              # replaces the default list when present
//   kind = "rotate_translate"
//   amount = 2.0
//   interp = "bicubic"
//   center = [50, 50]
//   upscale = 4
//   border_crop = 20
struct RunConfig {
    std::vector<std::filesystem::path> models;
    std::optional<std::filesystem::path> images;
    std::vector<std::string> frames;
    std::optional<std::filesystem::path> frame_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    std::optional<bool> plot;
    std::optional<int> jobs;
    std::optional<std::size_t> noise_k;
    std::optional<std::size_t> max_batch;
    std::optional<std::vector<AugmentationSpec>> augmentations;
};

// Throws Error(Config) on syntax errors, unknown keys or bad values. Relative
// paths are resolved against `base_dir` (the config file's directory).
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir,
                           const std::string& source = "config");

}  // namespace nframe::cli
