#include "nframe/rng.hpp"
#include "nframe/error.hpp"

#include <cmath>
#include <numbers>

namespace nframe {

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InvalidInput: return "invalid_input";
    case ErrorKind::UndefinedStableRank: return "undefined_stable_rank";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::InvalidSpec: return "invalid_spec";
    case ErrorKind::Config: return "config";
    case ErrorKind::Ingest: return "ingest";
    case ErrorKind::Manifest: return "manifest";
    case ErrorKind::Inference: return "inference";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t index)
{
    // FNV-1a over the purpose string
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : purpose) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(seed ^ h) ^ splitmix64(index + 0x5851f42d4c957f2dULL));
}

double GaussianStream::uniform()
{
    // 53 random bits -> [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double GaussianStream::next()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

}  // namespace nframe
