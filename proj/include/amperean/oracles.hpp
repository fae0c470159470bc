#pragma once

#include <functional>
#include <string>
#include <vector>

#include "amperean/fields.hpp"
#include "amperean/paths.hpp"

namespace amperean {

// C^1 closed curve t -> position on [0, T] with its velocity.
struct SmoothLoop {
    std::string descriptor;
    double T = 1.0;
    std::function<Point(double)> position;
    std::function<Vec2(double)> velocity;

    // Counter-clockwise for turns > 0, clockwise for turns < 0; T = 2 pi |turns|.
    static SmoothLoop circle(Point center, double radius, int turns = 1);
    static SmoothLoop ellipse(Point center, double a, double b, double angle = 0.0);
    // Polygon sample with n_points vertices (the closing edge is implicit).
    PlanarPath polygon(std::size_t n_points) const;
};

// Grid inner product of the exact winding fields of fine polygon samples. n_points <= 0
// picks a vertex count from the grid spacing.
double smooth_amperean_lhs(const SmoothLoop& g1, const SmoothLoop& g2, const GridSpec& spec, std::size_t n_points = 0);
// Default grid for the pair: union of the bounding boxes with a margin, spacing h.
GridSpec smooth_loop_grid(const SmoothLoop& g1, const SmoothLoop& g2, double h);

struct SmoothQuadrature {
    std::size_t outer_panels = 128;   // uniform panels in t
    std::size_t inner_panels = 64;    // uniform panels in s before grading
    std::size_t order = 8;            // Gauss-Legendre points per panel
    std::size_t bands = 40;           // dyadic bands around each near-singular s
    std::size_t per_band = 4;         // panels per band
    std::size_t scan = 512;           // samples used to locate near-singular s
};

// -int int G(g1(t) - g2(s)) <g1'(t), g2'(s)> dt ds. The inner integral is graded geometrically
// around every local minimum of |g1(t) - g2(s)| that comes closer than a coarse panel.
double smooth_amperean_rhs(const SmoothLoop& g1, const SmoothLoop& g2, const SmoothQuadrature& quad = {});

struct SmoothBatteryRow {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double exact = 0.0;
    double mismatch = 0.0;   // |lhs - rhs| / max(1, |rhs|), absolute for the zero case
    bool zero_case = false;
};
// Concentric radii 1 and 2, identical unit circles, disjoint circles, unit circles at distance 1.
std::vector<SmoothBatteryRow> smooth_battery(double h = 0.004, const SmoothQuadrature& quad = {});
std::size_t smooth_battery_size();
SmoothBatteryRow smooth_battery_case(std::size_t q, double h = 0.004, const SmoothQuadrature& quad = {});

struct IsometryQuadrature {
    std::size_t radial_panels = 96;
    std::size_t angular_bands = 44;
    std::size_t order = 8;
    double u_panel = 0.5;   // panel width in u = log t
};

// int_0^T p_t(0, r) dt through the substitution u = log t; equals E_1(r^2 / 2T) / (2 pi).
double heat_time_integral(double r, double T, double u_panel = 0.5, std::size_t order = 8);
// int_0^T int p_t(0, y) |theta^eps(z - y)|^2 dy dt by polar quadrature around z.
double ito_isometry_variance(Point z, double eps, double T, const IsometryQuadrature& quad = {}, double K = 1.0);

// Radial factor evaluated at |x| (compact support), e.g. the bump or a double mollifier.
struct RadialFunction {
    std::function<double(double)> f;
    double support = 1.0;
    static RadialFunction bump(double eps, double K = 1.0);
    static RadialFunction double_mollifier(double eps, double eps2, double K = 1.0);
};

enum class BruteKernel { Green, ThetaX, ThetaY };

// sum_y f(y) g(x - y) h^2 over grid nodes y by direct summation, with g replaced by its exact
// cell integrals (closed forms for G and theta, including the singular cell). The radial
// overload samples f centred at the origin, removes the O(h^2) term of that product rule, and
// extrapolates from spacings h and h / 2 for the remaining h^2 term at the singularity.
GridField brute_convolution_2d(const RadialFunction& f, BruteKernel g, const GridSpec& spec);
GridField brute_convolution_2d(const GridField& f, BruteKernel g);
// Same with g = (phi^eps * phi^eps2) * theta, smooth, by its radial formula.
GridField brute_convolution_2d(const GridField& f, BruteKernel g, double eps, double eps2, double K = 1.0);

}  // namespace amperean
