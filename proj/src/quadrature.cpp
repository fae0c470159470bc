#include "amperean/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace amperean {

namespace {

GaussLegendre compute_rule(std::size_t n) {
    GaussLegendre rule;
    rule.x.assign(n, 0.0);
    rule.w.assign(n, 0.0);
    std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * static_cast<double>(j) - 1.0) * z * p2 - (static_cast<double>(j) - 1.0) * p3) / static_cast<double>(j);
            }
            pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-16) break;
        }
        double weight = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.x[i] = -z;
        rule.x[n - 1 - i] = z;
        rule.w[i] = weight;
        rule.w[n - 1 - i] = weight;
    }
    if (n % 2 == 1) rule.x[n / 2] = 0.0;
    return rule;
}

}  // namespace

const GaussLegendre& gauss_legendre(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<GaussLegendre>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<GaussLegendre>(compute_rule(n));
    return *slot;
}

}  // namespace amperean
