#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "nframe/image.hpp"

namespace nframe {

// Decodes PNG or JPEG (detected from the file signature) to RGB in [0, 1]
// as 8-bit value / 255. Grayscale is replicated, alpha is dropped.
Image read_image(const std::filesystem::path& path);

// Writes 8-bit RGB PNG; values are rounded from [0, 1].
void write_png(const std::filesystem::path& path, const Image& image);

std::vector<std::uint8_t> encode_jpeg(const Image& image, int quality);
Image decode_jpeg(const std::vector<std::uint8_t>& bytes);

// PNG/JPEG files directly inside `dir`, sorted by filename.
std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir);

}  // namespace nframe
