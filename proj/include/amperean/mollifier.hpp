#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "amperean/common.hpp"

namespace amperean {

struct GridSpec;

// Cubic Hermite interpolant on uniform knots 0, d, 2d, ..., n*d.
class UniformCubic {
public:
    UniformCubic() = default;
    UniformCubic(double spacing, std::vector<double> values, std::vector<double> slopes);

    // Caller guarantees 0 <= r <= last knot.
    double operator()(double r) const {
        double s = r * inv_;
        std::size_t i = static_cast<std::size_t>(s);
        if (i >= last_) i = last_ - 1;
        double t = s - static_cast<double>(i);
        double t2 = t * t, t3 = t2 * t;
        double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * v_[i] + h01 * v_[i + 1] + spacing_ * (h10 * d_[i] + h11 * d_[i + 1]);
    }
    double end() const { return spacing_ * static_cast<double>(last_); }
    std::size_t knots() const { return v_.size(); }
    double knot_value(std::size_t i) const { return v_[i]; }
    double spacing() const { return spacing_; }

private:
    double spacing_ = 1.0;
    double inv_ = 1.0;
    std::size_t last_ = 0;
    std::vector<double> v_, d_;
};

inline constexpr std::size_t kProfileKnots = 4096;

// The default bump c * exp(-1 / (1 - s^2)) on the unit disk, plane integral 1.
// A mollifier with support radius K at scale eps equals this one at scale eps * K.
namespace bump {
double normaliser();
double value(double s);
double derivative(double s);
double mass(double s);  // integral over the disk of radius s (unit scale)
}  // namespace bump

// Unit-scale profiles of phi * phi_rho (rho = eps' / eps): density, cumulative mass,
// and the mollified Green function. Built once per ratio and shared.
struct UnitProfiles {
    double rho = 1.0;
    double support = 2.0;
    UniformCubic density;
    UniformCubic mass;
    UniformCubic green;
};

std::shared_ptr<const UnitProfiles> unit_profiles(double rho);

enum class ProfileKind { Mass, DoubleMollifier, MollifiedGreen };

// Radial profile at scale (eps, eps2) with support radius K, including the analytic tail.
class RadialProfile {
public:
    RadialProfile(ProfileKind kind, double eps, double eps2, double K = 1.0);

    ProfileKind kind() const { return kind_; }
    double eps() const { return eps_; }
    double eps2() const { return eps2_; }
    double support() const { return support_; }
    double operator()(double r) const;
    // Same value as a function of the squared radius (avoids a sqrt in the far field).
    double from_r2(double r2) const;
    void write_csv(const std::filesystem::path& file, std::size_t samples = 1024) const;

private:
    ProfileKind kind_;
    double eps_, eps2_, scale_, support_, support2_;
    std::shared_ptr<const UnitProfiles> unit_;
};

// M_eps(r): mass of phi^eps in the disk of radius r.
double radial_mass(double r, double eps, double K = 1.0);
// theta(z) = (-z2, z1) / (2 pi |z|^2), zero at the origin.
Vec2 theta(Vec2 z);
// theta^eps = phi^eps * theta = theta * M_eps(|z|).
Vec2 theta_eps(Vec2 z, double eps, double K = 1.0);
// Green function G(z) = log|z| / (2 pi).
double green(Vec2 z);

RadialProfile double_mollifier_profile(double eps, double eps2, double K = 1.0);
double mollified_green(double r, double eps, double eps2, double K = 1.0);

struct LrDefect {
    double norm = 0.0;               // grid value of the L^r norm over the truncated domain
    double tail_bound = 0.0;         // closed-form bound on the r-th power of the norm beyond the domain
    double inscribed_radius = 0.0;   // radius of the largest origin-centred disk in the domain
};

// L^r norm of mollified_green - G sampled at the grid nodes (no node should sit at the origin;
// use a cell-centred grid). The tail beyond the inscribed radius R is bounded by
// K^r (eps+eps')^r / (2 pi)^(r-1) * R^(2-r) / (r-2).
LrDefect lr_defect_norm(double eps, double eps2, double r_exponent, const GridSpec& grid, double K = 1.0);

}  // namespace amperean
