#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "amperean/fields.hpp"
#include "amperean/paths.hpp"

namespace amperean {

enum class Route { Grid, StratIterated, ItoMinusLocalTime };
const char* route_name(Route r);
Route parse_route(const std::string& name);  // throws Config on unknown names

// Resolution coupling. Zero or negative entries select the defaults h = eps / 6 and
// dt = eps^2 / 4 (against the smallest eps in play).
struct Resolution {
    double h = 0.0;
    double dt = 0.0;
    double K = 1.0;
    std::size_t sub_rows = 8;
    Vec2 jitter{0.0, 0.0};   // grid origin shift in units of h

    double h_for(double eps) const { return h > 0 ? h : eps / 6.0; }
    double dt_for(double eps) const { return dt > 0 ? dt : 0.25 * eps * eps; }
    GridOptions grid_options(double eps) const;
};

struct AmpereanEstimate {
    double value = 0.0;
    Route route = Route::Grid;
    double eps = 0.0;
    double eps2 = 0.0;
    double h = 0.0;        // 0 for the iterated routes
    double dt = 0.0;       // largest path step in play
    std::uint64_t seed = 0;
    bool resolution_warning = false;   // h > eps / 4 or dt > eps^2 / 4
};

// <n^eps, n^eps> of the closed loop by the convolution route.
AmpereanEstimate amperean_self(const PlanarPath& path, double eps, const Resolution& res = {}, std::uint64_t seed = 0);

// Cross term B^{eps, eps2} by the chosen route. The grid route puts both fields on one grid.
AmpereanEstimate amperean_cross(const PlanarPath& W, const PlanarPath& W2, double eps, double eps2, Route route,
                                const Resolution& res = {}, std::uint64_t seed = 0);

struct CrossRoutes {
    AmpereanEstimate grid, strat, ito;
    double intersection = 0.0;   // I^{eps, eps2}
    double self_w = 0.0;         // <n^eps_W, n^eps_W> on the shared grid
    double self_w2 = 0.0;
};
// All three routes on one sample; the iterated routes share a single pass over the time pairs.
CrossRoutes amperean_cross_all(const PlanarPath& W, const PlanarPath& W2, double eps, double eps2, const Resolution& res = {},
                               std::uint64_t seed = 0);

struct DyadicTerm {
    DyadicIndex idx;
    double B = 0.0;        // <n_-, n_+>
    double T = 0.0;        // <delta, delta>
    double c_minus = 0.0;  // <n_-, delta>
    double c_plus = 0.0;   // <n_+, delta>
    double C() const { return c_minus + c_plus + T; }
};

struct DyadicComponents {
    unsigned m = 0;
    double eps = 0.0;
    double h = 0.0;
    std::vector<DyadicTerm> terms;   // levels 0..m-1, in (k, j) order
    std::vector<double> leaves;      // A^eps_{m, j}, j = 1..2^m
    double total = 0.0;              // A^eps_{0, 1} computed directly
    double assembled = 0.0;          // sum leaves - sum T + 2 sum B + 2 sum C
    double residual = 0.0;
    double scale = 0.0;              // |total| + sum of the magnitudes of all assembled pieces
    double relative_residual() const { return scale > 0 ? std::abs(residual) / scale : 0.0; }
};

// All fields on the grid of the full loop, so the identity holds to rounding.
// Throws Resolution unless 2^m divides the step count.
DyadicComponents dyadic_decomposition(const PlanarPath& path, unsigned m, double eps, const Resolution& res = {});

// <delta^eps, delta^eps> for the triangle of the sub-path (k, j), on its own grid.
double triangle_term(const PlanarPath& path, DyadicIndex idx, double eps, const Resolution& res = {});
// sum_j A^eps_{m, j}, each leaf on its own grid.
double leaf_sum(const PlanarPath& path, unsigned m, double eps, const Resolution& res = {});

class MCAccumulator {
public:
    void add(double x);
    void merge(const MCAccumulator& o);
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double m2() const { return m2_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double se() const { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }
    // Standard error of the sample variance from the fourth central moment.
    double variance_se() const;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0, m2_ = 0.0, m3_ = 0.0, m4_ = 0.0;
};

struct ExpMoment {
    double beta = 0.0;
    double estimate = 1.0;       // mean of exp(beta x / normaliser)
    double se = 0.0;
    double se_half = 0.0;        // SE over the first half of the stream
    double tail_share = 0.0;     // largest single term over the sum
    std::size_t n = 0;
    std::size_t clamped = 0;     // terms whose exponent exceeded the clamp
    bool unstable = false;
};
inline constexpr double kExpClamp = 700.0;
// Running estimate of E[exp(beta X / normaliser)]. Flagged unstable when exponents were
// clamped, when one term carries more than a fifth of the sum, or when the SE over the
// whole stream is not below 0.9 times the SE over its first half.
ExpMoment exp_moment(std::span<const double> samples, double beta, double normaliser);

struct CountertermPoint {
    double eps = 0.0;
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

struct CountertermFit {
    double T = 1.0;
    std::vector<CountertermPoint> points;
    double slope = 0.0;
    double slope_se = 0.0;           // from the per-sample slopes, valid under common random numbers
    double intercept = 0.0;
    double intercept_se = 0.0;
    double slope_se_naive = 0.0;     // WLS formula treating the means as independent
};

// values[i][k]: A^{eps_k} on sample i (the same path for every eps). Weighted least squares of
// the means against log(1 / eps) with inverse-variance weights.
CountertermFit fit_counterterm(double T, std::span<const double> eps_list, const std::vector<std::vector<double>>& values);

// Samples [first, first + count) of the counterterm campaign: path i uses rng::derive_seed(seed, i),
// with the step for the smallest eps; the grid is jittered from the same seed.
std::vector<std::vector<double>> counterterm_samples(double T, std::span<const double> eps_list, std::size_t first,
                                                     std::size_t count, std::uint64_t seed, const Resolution& res = {});
std::size_t counterterm_steps(double T, std::span<const double> eps_list, const Resolution& res = {});

// Validates eps_list (>= 4 entries, strictly decreasing) and runs the campaign.
CountertermFit counterterm_fit(double T, std::span<const double> eps_list, std::size_t n_samples, std::uint64_t seed,
                               const Resolution& res = {});

struct CutoffSums {
    double cross = 0.0;       // sum_{|k|<=k0, |j|<=j0} k j B_{k,j}
    double self_w = 0.0;      // sum_{|k|<=k0} k^2 A_k of W
    double self_w2 = 0.0;     // sum_{|j|<=j0} j^2 A_j of W2
    int max_winding = 0;      // largest |winding| present in either field
};
// B_{k,j} = h^2 #{nodes: n_W = k, n_W2 = j}, nodes unmasked in both fields.
CutoffSums cutoff_sums(const GridField& wind_w, const GridField& wind_w2, int k0, int j0);
CutoffSums cutoff_sums(const PlanarPath& W, const PlanarPath& W2, const GridSpec& spec, int k0, int j0);

// Per-sample grid jitter drawn from the sample seed.
Vec2 seed_jitter(std::uint64_t seed, std::uint32_t tag = 0);

// CSV with header route,epsilon,epsilon2,h,dt,value,seed.
void write_estimates_csv(std::span<const AmpereanEstimate> rows, const std::filesystem::path& file);
std::string estimate_json(const AmpereanEstimate& e);
// epsilon,mean,se,n per point; the summary JSON carries slope, slope_se, intercept.
void write_fit_csv(const CountertermFit& fit, const std::filesystem::path& file);
std::string fit_summary_json(const CountertermFit& fit);

}  // namespace amperean
