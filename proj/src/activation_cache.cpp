#include "nframe/activation_cache.hpp"

#include "nframe/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace nframe {

namespace fs = std::filesystem;
static_assert(std::endian::native == std::endian::little, "activation cache assumes a little-endian host");

ActivationCache::ActivationCache(fs::path dir, std::string stem) : dir_(std::move(dir)), stem_(std::move(stem))
{
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create cache directory " + dir_.string());
    std::ofstream truncate(data_path(), std::ios::binary | std::ios::trunc);
    if (!truncate) throw Error(ErrorKind::Io, "cannot write " + data_path().string());
}

fs::path ActivationCache::data_path() const
{
    return dir_ / (stem_ + ".bin");
}

fs::path ActivationCache::index_path() const
{
    return dir_ / (stem_ + ".index.json");
}

void ActivationCache::put(const std::string& image_id, int tap_id, const linalg::Vector& values)
{
    std::vector<float> buffer(static_cast<std::size_t>(values.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i) buffer[static_cast<std::size_t>(i)] = static_cast<float>(values(i));
    std::ofstream out(data_path(), std::ios::binary | std::ios::app);
    out.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(buffer.size() * sizeof(float)));
    if (!out) throw Error(ErrorKind::Io, "cannot append to " + data_path().string());
    entries_.push_back({image_id, tap_id, bytes_written_, buffer.size()});
    bytes_written_ += buffer.size() * sizeof(float);
}

void ActivationCache::flush() const
{
    nlohmann::json index = nlohmann::json::array();
    for (const auto& e : entries_) {
        index.push_back({{"image_id", e.image_id}, {"tap_id", e.tap_id}, {"offset", e.offset}, {"length", e.length}});
    }
    std::ofstream out(index_path());
    out << index.dump(1) << '\n';
    if (!out) throw Error(ErrorKind::Io, "cannot write " + index_path().string());
}

std::optional<linalg::Vector> ActivationCache::get(const std::string& image_id, int tap_id) const
{
    std::ifstream idx(index_path());
    if (!idx) return std::nullopt;
    nlohmann::json index;
    idx >> index;
    for (const auto& e : index) {
        if (e.at("image_id").get<std::string>() != image_id || e.at("tap_id").get<int>() != tap_id) continue;
        const auto offset = e.at("offset").get<std::uint64_t>();
        const auto length = e.at("length").get<std::uint64_t>();
        std::ifstream in(data_path(), std::ios::binary);
        in.seekg(static_cast<std::streamoff>(offset));
        std::vector<float> buffer(length);
        in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(length * sizeof(float)));
        if (!in) throw Error(ErrorKind::Io, "truncated activation cache " + data_path().string());
        linalg::Vector v(static_cast<Eigen::Index>(length));
        for (std::size_t i = 0; i < length; ++i) v(static_cast<Eigen::Index>(i)) = buffer[i];
        return v;
    }
    return std::nullopt;
}

}  // namespace nframe
