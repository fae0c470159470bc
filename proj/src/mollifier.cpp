#include "amperean/mollifier.hpp"

#include <algorithm>
#include <limits>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>

#include "amperean/grid.hpp"
#include "amperean/quadrature.hpp"

namespace amperean {

UniformCubic::UniformCubic(double spacing, std::vector<double> values, std::vector<double> slopes)
    : spacing_(spacing), inv_(1.0 / spacing), last_(values.size() - 1), v_(std::move(values)), d_(std::move(slopes)) {
    if (v_.size() < 2 || v_.size() != d_.size()) throw Error(ErrorCode::InvalidArgument, "bad interpolation table");
}

namespace bump {

namespace {

double raw(double s) {
    if (s >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s * s));
}

struct Tables {
    double c = 0.0;
    UniformCubic mass;
};

const Tables& tables() {
    static const Tables t = [] {
        Tables out;
        double radial = composite_gl([](double s) { return s * raw(s); }, 0.0, 1.0, 64, 16);
        out.c = 1.0 / (kTwoPi * radial);
        const std::size_t n = kProfileKnots;
        double d = 1.0 / static_cast<double>(n);
        std::vector<double> v(n + 1), dv(n + 1);
        double acc = 0.0;
        v[0] = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            double lo = d * static_cast<double>(i - 1), hi = d * static_cast<double>(i);
            acc += composite_gl([&](double s) { return kTwoPi * out.c * s * raw(s); }, lo, hi, 1, 16);
            v[i] = acc;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            double s = d * static_cast<double>(i);
            dv[i] = kTwoPi * s * out.c * raw(s);
        }
        v[n] = 1.0;
        out.mass = UniformCubic(d, std::move(v), std::move(dv));
        return out;
    }();
    return t;
}

}  // namespace

double normaliser() { return tables().c; }

double value(double s) { return tables().c * raw(s); }

double derivative(double s) {
    if (s >= 1.0) return 0.0;
    double q = 1.0 - s * s;
    return value(s) * (-2.0 * s / (q * q));
}

double mass(double s) {
    if (s >= 1.0) return 1.0;
    if (s <= 0.0) return 0.0;
    return tables().mass(s);
}

}  // namespace bump

namespace {

// (phi * phi_rho)(r) at unit scale: integral over s in the first disk and the angle
// alpha of phi(s) phi_rho(|r e1 - s e^{i alpha}|), restricted to the overlap region.
double convolved_density(double r, double rho) {
    auto phi_rho = [rho](double x) { return bump::value(x / rho) / (rho * rho); };
    if (r == 0.0) {
        double top = std::min(1.0, rho);
        return composite_gl([&](double s) { return kTwoPi * s * bump::value(s) * phi_rho(s); }, 0.0, top, 4, 32);
    }
    double s_lo = std::max(0.0, r - rho), s_hi = std::min(1.0, r + rho);
    if (s_hi <= s_lo) return 0.0;
    auto inner = [&](double s) {
        if (s <= 0.0) return 0.0;
        double c = (r * r + s * s - rho * rho) / (2.0 * r * s);
        if (c >= 1.0) return 0.0;
        double amax = c <= -1.0 ? kPi : std::acos(c);
        double a = composite_gl(
            [&](double alpha) {
                double d2 = r * r + s * s - 2.0 * r * s * std::cos(alpha);
                return phi_rho(std::sqrt(std::max(d2, 0.0)));
            },
            0.0, amax, 2, 32);
        return 2.0 * a * s * bump::value(s);
    };
    return composite_gl(inner, s_lo, s_hi, 3, 32);
}

// Fourth-order central differences with even reflection at 0 and zero beyond the end.
std::vector<double> slopes_from_values(const std::vector<double>& v, double d) {
    std::size_t n = v.size();
    auto at = [&](std::ptrdiff_t i) -> double {
        if (i < 0) i = -i;
        if (static_cast<std::size_t>(i) >= n) return 0.0;
        return v[static_cast<std::size_t>(i)];
    };
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        auto i = static_cast<std::ptrdiff_t>(k);
        out[k] = (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * d);
    }
    out[0] = 0.0;
    return out;
}

std::shared_ptr<UnitProfiles> build_unit_profiles(double rho) {
    auto out = std::make_shared<UnitProfiles>();
    out->rho = rho;
    out->support = 1.0 + rho;
    const std::size_t n = kProfileKnots;
    double d = out->support / static_cast<double>(n);
    std::vector<double> psi(n + 1);
    for (std::size_t i = 0; i <= n; ++i) psi[i] = convolved_density(d * static_cast<double>(i), rho);
    psi[n] = 0.0;
    out->density = UniformCubic(d, psi, slopes_from_values(psi, d));

    std::vector<double> mass(n + 1), dmass(n + 1);
    double acc = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        double lo = d * static_cast<double>(i - 1), hi = d * static_cast<double>(i);
        acc += composite_gl([&](double s) { return kTwoPi * s * out->density(s); }, lo, hi, 1, 8);
        mass[i] = acc;
    }
    for (std::size_t i = 0; i <= n; ++i) dmass[i] = kTwoPi * d * static_cast<double>(i) * psi[i];
    out->mass = UniformCubic(d, mass, dmass);

    // u(r) = log(R)/(2 pi) - integral_r^R M(s) / (2 pi s) ds
    std::vector<double> u(n + 1), du(n + 1);
    u[n] = std::log(out->support) / kTwoPi;
    for (std::size_t i = n; i-- > 0;) {
        double lo = d * static_cast<double>(i), hi = d * static_cast<double>(i + 1);
        u[i] = u[i + 1] - composite_gl([&](double s) { return out->mass(s) / (kTwoPi * s); }, lo, hi, 1, 8);
    }
    for (std::size_t i = 1; i <= n; ++i) du[i] = mass[i] / (kTwoPi * d * static_cast<double>(i));
    du[0] = 0.0;
    out->green = UniformCubic(d, std::move(u), std::move(du));
    return out;
}

}  // namespace

std::shared_ptr<const UnitProfiles> unit_profiles(double rho) {
    if (!(rho > 0.0)) throw Error(ErrorCode::InvalidArgument, "mollification ratio must be positive");
    static std::mutex mutex;
    static std::map<double, std::shared_ptr<const UnitProfiles>> cache;
    {
        std::lock_guard lock(mutex);
        auto it = cache.find(rho);
        if (it != cache.end()) return it->second;
    }
    auto built = build_unit_profiles(rho);
    std::lock_guard lock(mutex);
    auto [it, inserted] = cache.emplace(rho, std::move(built));
    return it->second;
}

RadialProfile::RadialProfile(ProfileKind kind, double eps, double eps2, double K)
    : kind_(kind), eps_(std::min(eps, eps2)), eps2_(std::max(eps, eps2)) {
    if (!(eps > 0.0) || !(eps2 > 0.0) || !(K > 0.0)) throw Error(ErrorCode::InvalidArgument, "profile scales must be positive");
    // every profile is symmetric in (eps, eps'); a canonical order makes swapped calls bit-identical
    eps = eps_;
    eps2 = eps2_;
    scale_ = eps * K;
    unit_ = unit_profiles(eps2 / eps);
    support_ = scale_ * unit_->support;
    support2_ = support_ * support_;
}

double RadialProfile::operator()(double r) const {
    if (r >= support_) {
        switch (kind_) {
            case ProfileKind::Mass: return 1.0;
            case ProfileKind::DoubleMollifier: return 0.0;
            case ProfileKind::MollifiedGreen: return std::log(r) / kTwoPi;
        }
    }
    double s = r / scale_;
    switch (kind_) {
        case ProfileKind::Mass: return unit_->mass(s);
        case ProfileKind::DoubleMollifier: return unit_->density(s) / (scale_ * scale_);
        case ProfileKind::MollifiedGreen: return unit_->green(s) + std::log(scale_) / kTwoPi;
    }
    return 0.0;
}

double RadialProfile::from_r2(double r2) const {
    if (r2 >= support2_) {
        switch (kind_) {
            case ProfileKind::Mass: return 1.0;
            case ProfileKind::DoubleMollifier: return 0.0;
            case ProfileKind::MollifiedGreen: return std::log(r2) / (2.0 * kTwoPi);
        }
    }
    return (*this)(std::sqrt(r2));
}

void RadialProfile::write_csv(const std::filesystem::path& file, std::size_t samples) const {
    std::ofstream os(file);
    if (!os) throw Error(ErrorCode::Io, "cannot open " + file.string());
    os << "r,value\n" << std::setprecision(17);
    double top = 1.25 * support_;
    for (std::size_t i = 0; i <= samples; ++i) {
        double r = top * static_cast<double>(i) / static_cast<double>(samples);
        os << r << ',' << (*this)(r) << '\n';
    }
    if (!os) throw Error(ErrorCode::Io, "write failed for " + file.string());
}

double radial_mass(double r, double eps, double K) { return bump::mass(r / (eps * K)); }

Vec2 theta(Vec2 z) {
    double r2 = norm2(z);
    if (r2 == 0.0) return {0.0, 0.0};
    return {-z.y / (kTwoPi * r2), z.x / (kTwoPi * r2)};
}

Vec2 theta_eps(Vec2 z, double eps, double K) {
    double r2 = norm2(z);
    if (r2 == 0.0) return {0.0, 0.0};
    double scale = eps * K;
    double m = r2 >= scale * scale ? 1.0 : bump::mass(std::sqrt(r2) / scale);
    return {-z.y * m / (kTwoPi * r2), z.x * m / (kTwoPi * r2)};
}

double green(Vec2 z) { return std::log(norm2(z)) / (2.0 * kTwoPi); }

RadialProfile double_mollifier_profile(double eps, double eps2, double K) {
    return RadialProfile(ProfileKind::DoubleMollifier, eps, eps2, K);
}

double mollified_green(double r, double eps, double eps2, double K) {
    return RadialProfile(ProfileKind::MollifiedGreen, eps, eps2, K)(r);
}

LrDefect lr_defect_norm(double eps, double eps2, double r_exponent, const GridSpec& grid, double K) {
    if (!(r_exponent > 2.0)) throw Error(ErrorCode::InvalidArgument, "the L^r defect needs r > 2");
    RadialProfile u(ProfileKind::MollifiedGreen, eps, eps2, K);
    double R = u.support();
    CompensatedSum acc;
    for (std::size_t j = 0; j < grid.ny; ++j) {
        for (std::size_t i = 0; i < grid.nx; ++i) {
            Point p = grid.node(i, j);
            double r = norm(p);
            if (r >= R || r == 0.0) continue;
            acc.add(std::pow(std::abs(u(r) - std::log(r) / kTwoPi), r_exponent));
        }
    }
    LrDefect out;
    out.norm = std::pow(grid.h * grid.h * acc.value(), 1.0 / r_exponent);
    double x_lo = grid.origin.x, x_hi = grid.x(grid.nx - 1), y_lo = grid.origin.y, y_hi = grid.y(grid.ny - 1);
    out.inscribed_radius = std::max(0.0, std::min({-x_lo, x_hi, -y_lo, y_hi}));
    double Rin = out.inscribed_radius;
    out.tail_bound = Rin > 0.0 ? std::pow(K * (eps + eps2), r_exponent) / std::pow(kTwoPi, r_exponent - 1.0) *
                                     std::pow(Rin, 2.0 - r_exponent) / (r_exponent - 2.0)
                               : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace amperean
