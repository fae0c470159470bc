#include "amperean/oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "amperean/mollifier.hpp"
#include "amperean/parallel.hpp"
#include "amperean/quadrature.hpp"

namespace amperean {

SmoothLoop SmoothLoop::circle(Point center, double radius, int turns) {
    if (!(radius > 0) || turns == 0) throw Error(ErrorCode::InvalidArgument, "circle needs a positive radius and nonzero turns");
    double dir = turns > 0 ? 1.0 : -1.0;
    SmoothLoop l;
    l.descriptor = "circle(" + std::to_string(center.x) + "," + std::to_string(center.y) + ";r=" + std::to_string(radius) +
                   ";turns=" + std::to_string(turns) + ")";
    l.T = kTwoPi * std::abs(turns);
    l.position = [=](double t) { return Point{center.x + radius * std::cos(dir * t), center.y + radius * std::sin(dir * t)}; };
    l.velocity = [=](double t) { return Vec2{-dir * radius * std::sin(dir * t), dir * radius * std::cos(dir * t)}; };
    return l;
}

SmoothLoop SmoothLoop::ellipse(Point center, double a, double b, double angle) {
    if (!(a > 0) || !(b > 0)) throw Error(ErrorCode::InvalidArgument, "ellipse needs positive semi-axes");
    double c = std::cos(angle), s = std::sin(angle);
    SmoothLoop l;
    l.descriptor = "ellipse(" + std::to_string(center.x) + "," + std::to_string(center.y) + ";a=" + std::to_string(a) +
                   ";b=" + std::to_string(b) + ";angle=" + std::to_string(angle) + ")";
    l.T = kTwoPi;
    l.position = [=](double t) {
        double x = a * std::cos(t), y = b * std::sin(t);
        return Point{center.x + c * x - s * y, center.y + s * x + c * y};
    };
    l.velocity = [=](double t) {
        double x = -a * std::sin(t), y = b * std::cos(t);
        return Vec2{c * x - s * y, s * x + c * y};
    };
    return l;
}

PlanarPath SmoothLoop::polygon(std::size_t n_points) const {
    if (n_points < 3) throw Error(ErrorCode::InvalidArgument, "polygon needs at least 3 points");
    std::vector<double> t(n_points);
    std::vector<Point> p(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        t[i] = T * static_cast<double>(i) / static_cast<double>(n_points);
        p[i] = position(t[i]);
    }
    return PlanarPath(std::move(t), std::move(p));
}

namespace {

double loop_length(const SmoothLoop& g) {
    return composite_gl([&](double t) { return norm(g.velocity(t)); }, 0.0, g.T, 64);
}

std::array<double, 4> loop_bbox(const SmoothLoop& g, std::size_t n = 4096) {
    std::array<double, 4> b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                            -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < n; ++i) {
        Point p = g.position(g.T * static_cast<double>(i) / static_cast<double>(n));
        b[0] = std::min(b[0], p.x);
        b[1] = std::min(b[1], p.y);
        b[2] = std::max(b[2], p.x);
        b[3] = std::max(b[3], p.y);
    }
    return b;
}

}  // namespace

GridSpec smooth_loop_grid(const SmoothLoop& g1, const SmoothLoop& g2, double h) {
    if (!(h > 0)) throw Error(ErrorCode::InvalidArgument, "grid spacing must be positive");
    auto a = loop_bbox(g1), b = loop_bbox(g2);
    double lox = std::min(a[0], b[0]) - 4 * h, loy = std::min(a[1], b[1]) - 4 * h;
    double hix = std::max(a[2], b[2]) + 4 * h, hiy = std::max(a[3], b[3]) + 4 * h;
    GridSpec s;
    // odd offset keeps the nodes off the symmetry axes of the standard battery
    s.origin = {lox - 0.3137 * h, loy - 0.4271 * h};
    s.h = h;
    s.nx = static_cast<std::size_t>(std::ceil((hix - s.origin.x) / h)) + 1;
    s.ny = static_cast<std::size_t>(std::ceil((hiy - s.origin.y) / h)) + 1;
    return s;
}

double smooth_amperean_lhs(const SmoothLoop& g1, const SmoothLoop& g2, const GridSpec& spec, std::size_t n_points) {
    auto count = [&](const SmoothLoop& g) {
        if (n_points > 0) return n_points;
        double want = 4.0 * loop_length(g) / spec.h;
        return std::max<std::size_t>(4096, static_cast<std::size_t>(std::ceil(want)));
    };
    PlanarPath p1 = g1.polygon(count(g1));
    PlanarPath p2 = g2.polygon(count(g2));
    GridField w1 = winding_field(LoopView{p1.points()}, spec);
    GridField w2 = winding_field(LoopView{p2.points()}, spec);
    return field_inner_product(w1, w2);
}

namespace {

// Local minima of |x - g(s)| over a periodic scan, refined by golden-section search.
std::vector<std::pair<double, double>> near_points(const SmoothLoop& g, const std::vector<Point>& scan, Point x) {
    std::size_t n = scan.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = norm2(scan[i] - x);
    double ds = g.T / static_cast<double>(n);
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < n; ++i) {
        double prev = d[(i + n - 1) % n], next = d[(i + 1) % n];
        if (!(d[i] <= prev && d[i] < next)) continue;
        double lo = (static_cast<double>(i) - 1.0) * ds, hi = (static_cast<double>(i) + 1.0) * ds;
        auto f = [&](double s) { return norm2(g.position(s) - x); };
        const double r = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = hi - r * (hi - lo), b = lo + r * (hi - lo);
        double fa = f(a), fb = f(b);
        for (int it = 0; it < 80 && hi - lo > 1e-15 * g.T; ++it) {
            if (fa < fb) {
                hi = b; b = a; fb = fa;
                a = hi - r * (hi - lo);
                fa = f(a);
            } else {
                lo = a; a = b; fa = fb;
                b = lo + r * (hi - lo);
                fb = f(b);
            }
        }
        double s = 0.5 * (lo + hi);
        out.emplace_back(s, std::sqrt(f(s)));
    }
    return out;
}

double wrap(double s, double T) {
    double r = std::fmod(s, T);
    return r < 0 ? r + T : r;
}

}  // namespace

double smooth_amperean_rhs(const SmoothLoop& g1, const SmoothLoop& g2, const SmoothQuadrature& quad) {
    if (quad.outer_panels == 0 || quad.inner_panels == 0 || quad.scan < 3)
        throw Error(ErrorCode::InvalidArgument, "quadrature needs positive panel counts");
    const GaussLegendre& gl = gauss_legendre(quad.order);
    std::vector<Point> scan(quad.scan);
    for (std::size_t i = 0; i < quad.scan; ++i) scan[i] = g2.position(g2.T * static_cast<double>(i) / static_cast<double>(quad.scan));
    double coarse = g2.T / static_cast<double>(quad.inner_panels);
    double speed = loop_length(g2) / g2.T;

    auto inner = [&](Point x, Vec2 v) {
        std::vector<double> br;
        br.reserve(quad.inner_panels + 1 + 2 * quad.bands * quad.per_band);
        for (std::size_t k = 0; k <= quad.inner_panels; ++k) br.push_back(coarse * static_cast<double>(k));
        for (auto [s0, dist] : near_points(g2, scan, x)) {
            if (dist > 2.0 * coarse * speed) continue;
            br.push_back(wrap(s0, g2.T));
            double floor_width = 0.05 * dist / std::max(speed, 1e-300);
            for (std::size_t b = 0; b < quad.bands; ++b) {
                double outer = coarse * std::ldexp(1.0, -static_cast<int>(b));
                double inner_r = 0.5 * outer;
                for (std::size_t i = 0; i < quad.per_band; ++i) {
                    double r = inner_r + (outer - inner_r) * static_cast<double>(i) / static_cast<double>(quad.per_band);
                    br.push_back(wrap(s0 + r, g2.T));
                    br.push_back(wrap(s0 - r, g2.T));
                }
                if (inner_r < floor_width || inner_r < 1e-14 * g2.T) break;
            }
        }
        std::sort(br.begin(), br.end());
        CompensatedSum acc;
        for (std::size_t k = 0; k + 1 < br.size(); ++k) {
            double a = br[k], b = br[k + 1];
            if (b - a <= 1e-15 * g2.T) continue;
            double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            for (std::size_t i = 0; i < gl.x.size(); ++i) {
                double s = mid + half * gl.x[i];
                Vec2 z = x - g2.position(s);
                double r2 = norm2(z);
                if (r2 == 0.0) continue;
                acc.add(half * gl.w[i] * std::log(r2) / (2.0 * kTwoPi) * dot(v, g2.velocity(s)));
            }
        }
        return acc.value();
    };

    // outer breakpoints: uniform, graded around the times where g1 meets g2
    double width = g1.T / static_cast<double>(quad.outer_panels);
    double speed1 = loop_length(g1) / g1.T;
    std::vector<double> obr;
    for (std::size_t k = 0; k <= quad.outer_panels; ++k) obr.push_back(width * static_cast<double>(k));
    {
        std::vector<double> gap(quad.scan);
        for (std::size_t i = 0; i < quad.scan; ++i) {
            Point x = g1.position(g1.T * static_cast<double>(i) / static_cast<double>(quad.scan));
            double best = std::numeric_limits<double>::infinity();
            for (Point q : scan) best = std::min(best, norm(x - q));
            gap[i] = best;
        }
        double dt = g1.T / static_cast<double>(quad.scan);
        for (std::size_t i = 0; i < quad.scan; ++i) {
            double prev = gap[(i + quad.scan - 1) % quad.scan], next = gap[(i + 1) % quad.scan];
            if (!(gap[i] < prev && gap[i] < next) || gap[i] > 2.0 * width * speed1) continue;
            double t0 = dt * static_cast<double>(i);
            for (std::size_t b = 0; b < quad.bands; ++b) {
                double outer = width * std::ldexp(1.0, -static_cast<int>(b));
                for (std::size_t k = 0; k < quad.per_band; ++k) {
                    double r = 0.5 * outer * (1.0 + static_cast<double>(k) / static_cast<double>(quad.per_band));
                    obr.push_back(wrap(t0 + r, g1.T));
                    obr.push_back(wrap(t0 - r, g1.T));
                }
                if (outer < 1e-10 * g1.T) break;
            }
        }
    }
    std::sort(obr.begin(), obr.end());
    obr.erase(std::unique(obr.begin(), obr.end()), obr.end());

    std::vector<double> partial(obr.size() - 1, 0.0);
    parallel_for(obr.size() - 1, [&](std::size_t p) {
        double lo = obr[p], hi = obr[p + 1];
        double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        CompensatedSum acc;
        for (std::size_t i = 0; i < gl.x.size(); ++i) {
            double t = mid + half * gl.x[i];
            acc.add(half * gl.w[i] * inner(g1.position(t), g1.velocity(t)));
        }
        partial[p] = acc.value();
    });
    CompensatedSum total;
    for (double v : partial) total.add(v);
    return -total.value();
}

namespace {

struct BatteryCase {
    const char* name;
    SmoothLoop a, b;
    double exact;
    bool zero;
};

std::vector<BatteryCase> battery_cases() {
    return {
        {"concentric_r1_r2", SmoothLoop::circle({0, 0}, 1.0), SmoothLoop::circle({0, 0}, 2.0), kPi, false},
        {"identical_unit", SmoothLoop::circle({0, 0}, 1.0), SmoothLoop::circle({0, 0}, 1.0), kPi, false},
        {"disjoint", SmoothLoop::circle({0, 0}, 1.0), SmoothLoop::circle({3.5, 0.5}, 1.0), 0.0, true},
        {"overlapping_d1", SmoothLoop::circle({0, 0}, 1.0), SmoothLoop::circle({1, 0}, 1.0), 2.0 * kPi / 3.0 - std::sqrt(3.0) / 2.0, false},
    };
}

}  // namespace

std::size_t smooth_battery_size() { return battery_cases().size(); }

SmoothBatteryRow smooth_battery_case(std::size_t q, double h, const SmoothQuadrature& quad) {
    auto cases = battery_cases();
    if (q >= cases.size()) throw Error(ErrorCode::InvalidArgument, "battery case out of range");
    const BatteryCase& c = cases[q];
    SmoothBatteryRow r;
    r.name = c.name;
    r.lhs = smooth_amperean_lhs(c.a, c.b, smooth_loop_grid(c.a, c.b, h));
    r.rhs = smooth_amperean_rhs(c.a, c.b, quad);
    r.exact = c.exact;
    r.zero_case = c.zero;
    r.mismatch = c.zero ? std::abs(r.lhs - r.rhs) : std::abs(r.lhs - r.rhs) / std::max(1.0, std::abs(r.rhs));
    return r;
}

std::vector<SmoothBatteryRow> smooth_battery(double h, const SmoothQuadrature& quad) {
    std::vector<SmoothBatteryRow> rows;
    for (std::size_t q = 0; q < smooth_battery_size(); ++q) rows.push_back(smooth_battery_case(q, h, quad));
    return rows;
}

double heat_time_integral(double r, double T, double u_panel, std::size_t order) {
    if (!(T > 0) || !(u_panel > 0)) throw Error(ErrorCode::InvalidArgument, "time integral needs T > 0 and a positive panel");
    if (r == 0.0) return std::numeric_limits<double>::infinity();
    double a = 0.5 * r * r;
    if (a / T > 45.0) return 0.0;
    // integrand exp(-a e^{-u}) is below e^{-45} for u < log(a / 45)
    double lo = std::log(a / 45.0), hi = std::log(T);
    std::size_t panels = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil((hi - lo) / u_panel)));
    double v = composite_gl([&](double u) { return std::exp(-a * std::exp(-u)); }, lo, hi, panels, order);
    return v / kTwoPi;
}

namespace {

// v(x) = E_1(x) + log x on [0, 45], an entire function, built from the u-quadrature of H.
// H(r) = (v(x) - log x) / (2 pi) with x = r^2 / 2T.
class HeatTable {
public:
    HeatTable(double T, double u_panel, std::size_t order) : T_(T) {
        const std::size_t n = 4096;
        double dx = kXMax / static_cast<double>(n);
        std::vector<double> v(n + 1), d(n + 1);
        for (std::size_t k = 0; k <= n; ++k) {
            double x = k == 0 ? 1e-14 : dx * static_cast<double>(k);
            v[k] = kTwoPi * heat_time_integral(std::sqrt(2.0 * T * x), T, u_panel, order) + std::log(x);
            d[k] = x < 1e-8 ? 1.0 - 0.5 * x : -std::expm1(-x) / x;
        }
        table_ = UniformCubic(dx, std::move(v), std::move(d));
    }
    double operator()(double r2) const {
        double x = r2 / (2.0 * T_);
        if (x >= kXMax) return 0.0;
        return (table_(x) - std::log(x)) / kTwoPi;
    }

private:
    static constexpr double kXMax = 45.0;
    double T_;
    UniformCubic table_;
};

}  // namespace

double ito_isometry_variance(Point z, double eps, double T, const IsometryQuadrature& quad, double K) {
    if (!(eps > 0) || !(T > 0)) throw Error(ErrorCode::InvalidArgument, "isometry oracle needs eps, T > 0");
    const GaussLegendre& gl = gauss_legendre(quad.order);
    HeatTable H(T, quad.u_panel, quad.order);
    double d = norm(z);

    // integral over the circle |w| = rho of H(|z + w|); with psi = pi - phi the squared
    // distance is (d - rho)^2 + 4 d rho sin^2(psi / 2), graded towards psi = 0
    auto angular = [&](double rho) {
        if (d == 0.0) return kTwoPi * H(rho * rho);
        double gap = (d - rho) * (d - rho);
        auto f = [&](double psi) {
            double s = std::sin(0.5 * psi);
            double r2 = gap + 4.0 * d * rho * s * s;
            return r2 > 0.0 ? H(r2) : 0.0;
        };
        double near = 0.05 * std::abs(d - rho) / std::sqrt(d * rho);
        std::vector<double> br{0.0};
        std::size_t b = 1;
        for (; b < quad.angular_bands; ++b) {
            double edge = kPi * std::ldexp(1.0, -static_cast<int>(b));
            if (edge < near) break;
        }
        for (std::size_t k = b; k >= 1; --k) br.push_back(kPi * std::ldexp(1.0, -static_cast<int>(k)));
        for (int k = 1; k <= 8; ++k) br.push_back(0.5 * kPi + 0.5 * kPi * k / 8.0);
        CompensatedSum acc;
        for (std::size_t k = 0; k + 1 < br.size(); ++k) {
            double lo = br[k], hi = br[k + 1];
            double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
            for (std::size_t i = 0; i < gl.x.size(); ++i) acc.add(half * gl.w[i] * f(mid + half * gl.x[i]));
        }
        return 2.0 * acc.value();
    };

    double support = eps * K;
    double R = d + std::sqrt(2.0 * T * 45.0) + support;
    auto theta2 = [&](double rho) {
        double m = radial_mass(rho, eps, K);
        return m * m / (4.0 * kPi * kPi * rho * rho);
    };

    // breakpoints in rho: [0, support] uniform, beyond geometric; graded around rho = |z|
    std::vector<double> br;
    for (int k = 0; k <= 16; ++k) br.push_back(support * k / 16.0);
    double vlo = std::log(support), vhi = std::log(R);
    for (std::size_t k = 1; k <= quad.radial_panels; ++k)
        br.push_back(std::exp(vlo + (vhi - vlo) * static_cast<double>(k) / static_cast<double>(quad.radial_panels)));
    if (d > 0) {
        br.push_back(d);
        double w = 0.5 * std::min(d, support);
        for (int b = 0; b < 40; ++b) {
            double r = w * std::ldexp(1.0, -b);
            if (d - r > 0) br.push_back(d - r);
            br.push_back(d + r);
        }
    }
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());

    std::vector<double> partial(br.size() - 1, 0.0);
    parallel_for(br.size() - 1, [&](std::size_t k) {
        double a = br[k], b = br[k + 1];
        double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        CompensatedSum acc;
        for (std::size_t i = 0; i < gl.x.size(); ++i) {
            double rho = mid + half * gl.x[i];
            acc.add(half * gl.w[i] * rho * theta2(rho) * angular(rho));
        }
        partial[k] = acc.value();
    });
    CompensatedSum total;
    for (double v : partial) total.add(v);
    return total.value();
}

RadialFunction RadialFunction::bump(double eps, double K) {
    double s = eps * K;
    return {[s](double r) { return r < s ? bump::value(r / s) / (s * s) : 0.0; }, s};
}

RadialFunction RadialFunction::double_mollifier(double eps, double eps2, double K) {
    RadialProfile p = double_mollifier_profile(eps, eps2, K);
    return {[p](double r) { return p(r); }, p.support()};
}

namespace {

// Antiderivatives on the lattice of cell corners.
// int_0^t log(s^2 + a^2) ds
double log_line(double a, double t) {
    double v = t * std::log(t * t + a * a) - 2.0 * t;
    if (a != 0.0) v += 2.0 * a * std::atan(t / a);
    return t == 0.0 ? 0.0 : v;
}
// int_0^x int_0^y log(u^2 + v^2) dv du
double log_area(double x, double y) {
    if (x == 0.0 || y == 0.0) return 0.0;
    return x * y * (std::log(x * x + y * y) - 3.0) + x * x * std::atan(y / x) + y * y * std::atan(x / y);
}

// (1 / h^2) int over the cell centred at w of the kernel.
double cell_integral(BruteKernel g, Vec2 w, double h) {
    double x0 = w.x - 0.5 * h, x1 = w.x + 0.5 * h, y0 = w.y - 0.5 * h, y1 = w.y + 0.5 * h;
    double v = 0.0;
    switch (g) {
        case BruteKernel::Green:
            v = (log_area(x1, y1) - log_area(x0, y1) - log_area(x1, y0) + log_area(x0, y0)) / (2.0 * kTwoPi);
            break;
        case BruteKernel::ThetaX:
            // theta_x = -d_y log|w|^2 / (4 pi)
            v = -((log_line(y1, x1) - log_line(y1, x0)) - (log_line(y0, x1) - log_line(y0, x0))) / (2.0 * kTwoPi);
            break;
        case BruteKernel::ThetaY:
            v = ((log_line(x1, y1) - log_line(x1, y0)) - (log_line(x0, y1) - log_line(x0, y0))) / (2.0 * kTwoPi);
            break;
    }
    return v / (h * h);
}

struct Source {
    std::ptrdiff_t i, j;
    double f;
};

// out(x) = h^2 sum_y f(y) k(x - y) with k tabulated on all lattice offsets of `spec`; the
// output keeps every `stride`-th node.
GridField convolve_sources(const std::vector<Source>& src, const GridSpec& spec, const std::function<double(Vec2)>& kernel,
                           std::size_t stride = 1) {
    std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(spec.nx), ny = static_cast<std::ptrdiff_t>(spec.ny);
    std::size_t sx = static_cast<std::size_t>(2 * nx - 1);
    std::vector<double> stencil(sx * static_cast<std::size_t>(2 * ny - 1));
    parallel_blocks(static_cast<std::size_t>(2 * ny - 1), 8, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r)
            for (std::size_t c = 0; c < sx; ++c) {
                Vec2 w{spec.h * (static_cast<double>(c) - static_cast<double>(nx - 1)), spec.h * (static_cast<double>(r) - static_cast<double>(ny - 1))};
                stencil[r * sx + c] = kernel(w);
            }
    });
    GridSpec os = spec;
    os.h = spec.h * static_cast<double>(stride);
    os.nx = (spec.nx - 1) / stride + 1;
    os.ny = (spec.ny - 1) / stride + 1;
    GridField out(os);
    double h2 = spec.h * spec.h;
    parallel_blocks(os.ny, 1, [&](std::size_t jb, std::size_t je) {
        for (std::size_t jo = jb; jo < je; ++jo)
            for (std::size_t io = 0; io < os.nx; ++io) {
                std::ptrdiff_t i = static_cast<std::ptrdiff_t>(io * stride), j = static_cast<std::ptrdiff_t>(jo * stride);
                CompensatedSum acc;
                for (const Source& s : src) {
                    std::size_t c = static_cast<std::size_t>(i - s.i + nx - 1);
                    std::size_t r = static_cast<std::size_t>(j - s.j + ny - 1);
                    acc.add(s.f * stencil[r * sx + c]);
                }
                out.at(io, jo) = acc.value() * h2;
            }
    });
    return out;
}

std::vector<Source> field_sources(const GridField& f) {
    std::vector<Source> src;
    for (std::size_t j = 0; j < f.spec.ny; ++j)
        for (std::size_t i = 0; i < f.spec.nx; ++i)
            if (f.at(i, j) != 0.0) src.push_back({static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(j), f.at(i, j)});
    return src;
}

}  // namespace

GridField brute_convolution_2d(const RadialFunction& f, BruteKernel g, const GridSpec& spec) {
    auto at_spacing = [&](std::size_t refine) {
        GridSpec fs = spec;
        fs.h = spec.h / static_cast<double>(refine);
        fs.nx = (spec.nx - 1) * refine + 1;
        fs.ny = (spec.ny - 1) * refine + 1;
        double h = fs.h;
        auto fv = [&](double x, double y) {
            double r = std::hypot(x, y);
            return r < f.support ? f.f(r) : 0.0;
        };
        // the exact cell integrals of g add (h^2 / 24) int g lap f; subtract it with the five-point Laplacian
        std::vector<Source> src;
        for (std::size_t j = 0; j < fs.ny; ++j)
            for (std::size_t i = 0; i < fs.nx; ++i) {
                Point y = fs.node(i, j);
                if (norm(y) >= f.support + 2.0 * h) continue;
                double c = fv(y.x, y.y);
                double lap = fv(y.x + h, y.y) + fv(y.x - h, y.y) + fv(y.x, y.y + h) + fv(y.x, y.y - h) - 4.0 * c;
                double v = c - lap / 24.0;
                if (v != 0.0) src.push_back({static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(j), v});
            }
        return convolve_sources(src, fs, [g, h](Vec2 w) { return cell_integral(g, w, h); }, refine);
    };
    // the lattice sum around the kernel singularity leaves an h^2 term: extrapolate from h and h / 2
    GridField coarse = at_spacing(1), fine = at_spacing(2);
    for (std::size_t k = 0; k < coarse.values.size(); ++k) coarse.values[k] = (4.0 * fine.values[k] - coarse.values[k]) / 3.0;
    return coarse;
}

GridField brute_convolution_2d(const GridField& f, BruteKernel g) {
    double h = f.spec.h;
    return convolve_sources(field_sources(f), f.spec, [g, h](Vec2 w) { return cell_integral(g, w, h); });
}

GridField brute_convolution_2d(const GridField& f, BruteKernel g, double eps, double eps2, double K) {
    if (g == BruteKernel::Green) throw Error(ErrorCode::InvalidArgument, "mollified kernel is defined for the theta components only");
    RadialProfile mass(ProfileKind::Mass, eps, eps2, K);
    auto kernel = [&](Vec2 w) {
        Vec2 t = theta(w);
        double m = mass(norm(w));
        return (g == BruteKernel::ThetaX ? t.x : t.y) * m;
    };
    return convolve_sources(field_sources(f), f.spec, kernel);
}

}  // namespace amperean
