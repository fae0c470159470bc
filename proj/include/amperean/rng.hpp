#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace amperean::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds (Salmon et al., SC11)
Counter philox4x32(Counter ctr, Key key);

// Standard normal quantile of u in (0,1).
double normal_quantile(double u);

// Mixes a run seed with a sample index (and an optional stream tag) into a per-sample seed.
std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t index, std::uint32_t stream = 0);

// Stateless Gaussian source keyed by (seed, level, position).
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    // Two independent N(0,1) draws for the given level and position.
    std::pair<double, double> pair(std::uint32_t level, std::uint64_t position) const;
    // A uniform in (0,1) for auxiliary purposes (e.g. grid jitter), on a reserved level.
    double uniform(std::uint32_t tag, std::uint64_t position) const;

private:
    Key key_;
};

}  // namespace amperean::rng
