#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nframe {

// Mixes (seed, purpose, index) into an independent 64-bit stream seed. Used for
// every stochastic step so results do not depend on evaluation order or thread
// count.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t index = 0);

// Standard normal sampler with a platform-independent algorithm (Box-Muller on
// mt19937_64). std::normal_distribution is implementation-defined, so it is
// not used anywhere results must be reproducible.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double next();
    double uniform();  // in [0, 1)

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace nframe
