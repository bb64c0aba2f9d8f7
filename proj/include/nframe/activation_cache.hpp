#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nframe/linalg.hpp"

namespace nframe {

// Flat store of tap activations: `<stem>.bin` holds little-endian float32
// values back to back, `<stem>.index.json` lists
//   [{"image_id": str, "tap_id": int, "offset": bytes, "length": values}, ...]
class ActivationCache {
public:
    struct Entry {
        std::string image_id;
        int tap_id = 0;
        std::uint64_t offset = 0;
        std::uint64_t length = 0;
    };

    ActivationCache(std::filesystem::path dir, std::string stem);

    // Appends in call order; call flush() to write the index.
    void put(const std::string& image_id, int tap_id, const linalg::Vector& values);
    void flush() const;

    // Reads an entry back from disk using the on-disk index.
    std::optional<linalg::Vector> get(const std::string& image_id, int tap_id) const;

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::filesystem::path data_path() const;
    std::filesystem::path index_path() const;

private:
    std::filesystem::path dir_;
    std::string stem_;
    std::vector<Entry> entries_;
    std::uint64_t bytes_written_ = 0;
};

}  // namespace nframe
