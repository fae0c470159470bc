#include "amperean/rng.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>

namespace amperean::rng {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

Counter philox4x32(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, ctr[0], hi0, lo0);
        mulhilo(kM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

double normal_quantile(double u) {
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t index, std::uint32_t stream) {
    Counter c = philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream, 0x5eedu},
                           {static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32)});
    return (static_cast<std::uint64_t>(c[0]) << 32) | c[1];
}

std::pair<double, double> GaussianStream::pair(std::uint32_t level, std::uint64_t position) const {
    Counter c = philox4x32({level, static_cast<std::uint32_t>(position), static_cast<std::uint32_t>(position >> 32), 0u}, key_);
    return {normal_quantile(to_open_unit(c[0], c[1])), normal_quantile(to_open_unit(c[2], c[3]))};
}

double GaussianStream::uniform(std::uint32_t tag, std::uint64_t position) const {
    Counter c = philox4x32({tag, static_cast<std::uint32_t>(position), static_cast<std::uint32_t>(position >> 32), 1u}, key_);
    return to_open_unit(c[0], c[1]);
}

}  // namespace amperean::rng
