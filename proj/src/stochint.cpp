#include "amperean/stochint.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "amperean/fft.hpp"
#include "amperean/parallel.hpp"
#include "amperean/quadrature.hpp"

namespace amperean {

ScalarKernel ScalarKernel::mollified_green(double eps, double eps2, double K) {
    return ScalarKernel(Profile{RadialProfile(ProfileKind::MollifiedGreen, eps, eps2, K)}, std::min(eps, eps2) * K);
}

ScalarKernel ScalarKernel::double_mollifier(double eps, double eps2, double K) {
    return ScalarKernel(Profile{RadialProfile(ProfileKind::DoubleMollifier, eps, eps2, K)}, std::min(eps, eps2) * K);
}

double ScalarKernel::operator()(Vec2 z) const {
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Zero>) return 0.0;
            else if constexpr (std::is_same_v<T, Constant>) return k.c;
            else if constexpr (std::is_same_v<T, Green>) return norm2(z) > 0 ? amperean::green(z) : 0.0;
            else if constexpr (std::is_same_v<T, Profile>) return k.profile.from_r2(norm2(z));
            else return k.f(z);
        },
        kind_);
}

// ---- single line integrals ----

double stratonovich_line_integral(LoopView loop, const VectorKernel& V, Point center, double scale) {
    if (!(scale > 0)) throw Error(ErrorCode::InvalidArgument, "kernel scale must be positive");
    CompensatedSum acc;
    acc.add(open_line_integral(loop.points, V, center));
    Point from = loop.closing_from(), to = loop.closing_to();
    acc.add(segment_integral(from, to, [&](Point u) { return V(u - center); }, segment_panels(from, to, scale)));
    return acc.value();
}

double open_line_integral(std::span<const Point> path, const VectorKernel& V, Point center) {
    CompensatedSum acc;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        Point mid = 0.5 * (path[i] + path[i + 1]);
        acc.add(dot(V(mid - center), path[i + 1] - path[i]));
    }
    return acc.value();
}

double triangle_line_integral(const Triangle& t, const VectorKernel& V, Point center, double scale) {
    if (!(scale > 0)) throw Error(ErrorCode::InvalidArgument, "kernel scale must be positive");
    std::array<Point, 4> v{t.a, t.b, t.c, t.a};
    CompensatedSum acc;
    for (std::size_t k = 0; k < 3; ++k)
        acc.add(segment_integral(v[k], v[k + 1], [&](Point u) { return V(u - center); }, segment_panels(v[k], v[k + 1], scale)));
    return acc.value();
}

// ---- double integrals ----

namespace {

// Integration elements of a closed loop: one per Brownian edge (left point, midpoint,
// increment, duration) and one per Gauss-Legendre node of the closing segment.
struct Elements {
    std::vector<double> lx, ly, mx, my, wx, wy, dt;
    std::size_t size() const { return wx.size(); }
    void push(Point left, Point mid, Vec2 w, double d) {
        lx.push_back(left.x);
        ly.push_back(left.y);
        mx.push_back(mid.x);
        my.push_back(mid.y);
        wx.push_back(w.x);
        wy.push_back(w.y);
        dt.push_back(d);
    }
};

Elements elements(LoopView loop, std::span<const double> times, double scale) {
    auto pts = loop.points;
    Elements e;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double d = times.empty() ? 0.0 : times[i + 1] - times[i];
        e.push(pts[i], 0.5 * (pts[i] + pts[i + 1]), pts[i + 1] - pts[i], d);
    }
    Point from = loop.closing_from(), to = loop.closing_to();
    if (from == to) return e;
    // nodes laid out from the lexicographically smaller end, as in segment_integral
    bool flip = (to.x < from.x) || (to.x == from.x && to.y < from.y);
    Point lo = flip ? to : from;
    Vec2 d = (flip ? from : to) - lo;
    double sign = flip ? -1.0 : 1.0;
    std::size_t panels = segment_panels(from, to, scale);
    const GaussLegendre& gl = gauss_legendre(8);
    double width = 1.0 / static_cast<double>(panels);
    for (std::size_t k = 0; k < panels; ++k) {
        double mid = width * (static_cast<double>(k) + 0.5);
        for (std::size_t i = 0; i < gl.x.size(); ++i) {
            double s = mid + 0.5 * width * gl.x[i];
            Point u{lo.x + s * d.x, lo.y + s * d.y};
            e.push(u, u, (sign * 0.5 * width * gl.w[i]) * d, 0.0);
        }
    }
    return e;
}

constexpr std::size_t kBlock = 64;

// Sums f(a, b) over all element pairs; rows grouped in fixed blocks, blocks combined in order.
template <std::size_t N, class RowFn>
std::array<double, N> blocked_sum(std::size_t rows, RowFn&& row) {
    std::size_t blocks = (rows + kBlock - 1) / kBlock;
    std::vector<std::array<double, N>> partial(blocks);
    parallel_blocks(rows, kBlock, [&](std::size_t b, std::size_t e) {
        std::array<CompensatedSum, N> acc;
        for (std::size_t a = b; a < e; ++a) {
            std::array<double, N> r = row(a);
            for (std::size_t k = 0; k < N; ++k) acc[k].add(r[k]);
        }
        for (std::size_t k = 0; k < N; ++k) partial[b / kBlock][k] = acc[k].value();
    });
    std::array<CompensatedSum, N> total;
    for (const auto& p : partial)
        for (std::size_t k = 0; k < N; ++k) total[k].add(p[k]);
    std::array<double, N> out;
    for (std::size_t k = 0; k < N; ++k) out[k] = total[k].value();
    return out;
}

// Radial kernel as a function of the squared separation (custom kernels are handled separately).
template <class F>
auto with_radial(const ScalarKernel& k, F&& f) {
    return std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ScalarKernel::Zero>) return f([](double) { return 0.0; });
            else if constexpr (std::is_same_v<T, ScalarKernel::Constant>) return f([c = v.c](double) { return c; });
            else if constexpr (std::is_same_v<T, ScalarKernel::Green>)
                return f([](double r2) { return r2 > 0 ? std::log(r2) / (2.0 * kTwoPi) : 0.0; });
            else if constexpr (std::is_same_v<T, ScalarKernel::Profile>)
                return f([&p = v.profile](double r2) { return p.from_r2(r2); });
            else
                return f([](double) -> double { throw Error(ErrorCode::InvalidArgument, "custom kernels are not radial"); });
        },
        k.variant());
}

double single_double_sum(LoopView W, LoopView W2, const ScalarKernel& k, bool midpoint) {
    if (std::holds_alternative<ScalarKernel::Custom>(k.variant())) {
        // non-radial kernels go through the generic evaluator
        Elements A = elements(W, {}, k.scale()), B = elements(W2, {}, k.scale());
        auto r = blocked_sum<1>(A.size(), [&](std::size_t a) {
            Point pa = midpoint ? Point{A.mx[a], A.my[a]} : Point{A.lx[a], A.ly[a]};
            double s = 0.0;
            for (std::size_t b = 0; b < B.size(); ++b) {
                Point pb = midpoint ? Point{B.mx[b], B.my[b]} : Point{B.lx[b], B.ly[b]};
                s += k(pa - pb) * (A.wx[a] * B.wx[b] + A.wy[a] * B.wy[b]);
            }
            return std::array<double, 1>{s};
        });
        return -r[0];
    }
    Elements A = elements(W, {}, k.scale()), B = elements(W2, {}, k.scale());
    const auto& ax = midpoint ? A.mx : A.lx;
    const auto& ay = midpoint ? A.my : A.ly;
    const auto& bx = midpoint ? B.mx : B.lx;
    const auto& by = midpoint ? B.my : B.ly;
    return with_radial(k, [&](auto kern) {
        auto r = blocked_sum<1>(A.size(), [&](std::size_t a) {
            double s = 0.0;
            for (std::size_t b = 0; b < B.size(); ++b) {
                double dx = ax[a] - bx[b], dy = ay[a] - by[b];
                s += kern(dx * dx + dy * dy) * (A.wx[a] * B.wx[b] + A.wy[a] * B.wy[b]);
            }
            return std::array<double, 1>{s};
        });
        return -r[0];
    });
}

}  // namespace

double ito_double_integral(LoopView W, LoopView W2, const ScalarKernel& k) { return single_double_sum(W, W2, k, false); }

double strat_double_integral(LoopView W, LoopView W2, const ScalarKernel& k) { return single_double_sum(W, W2, k, true); }

double mollified_intersection_time(const PlanarPath& W, const PlanarPath& W2, double eps, double eps2, double K) {
    RadialProfile psi(ProfileKind::DoubleMollifier, eps, eps2, K);
    double s2 = psi.support() * psi.support();
    auto p = W.points(), q = W2.points();
    auto tp = W.times(), tq = W2.times();
    auto r = blocked_sum<1>(W.steps(), [&](std::size_t a) {
        double s = 0.0;
        for (std::size_t b = 0; b < W2.steps(); ++b) {
            double dx = p[a].x - q[b].x, dy = p[a].y - q[b].y;
            double r2 = dx * dx + dy * dy;
            if (r2 < s2) s += psi.from_r2(r2) * (tq[b + 1] - tq[b]);
        }
        return std::array<double, 1>{s * (tp[a + 1] - tp[a])};
    });
    return r[0];
}

DoubleIntegrals double_integrals(const PlanarPath& W, const PlanarPath& W2, double eps, double eps2, double K) {
    RadialProfile g(ProfileKind::MollifiedGreen, eps, eps2, K);
    RadialProfile psi(ProfileKind::DoubleMollifier, eps, eps2, K);
    double s2 = g.support() * g.support();
    double log_scale = 1.0 / (2.0 * kTwoPi);
    double scale = std::min(eps, eps2) * K;
    ClosedLoop lw(W), lw2(W2);
    Elements A = elements(lw.view(), W.times(), scale), B = elements(lw2.view(), W2.times(), scale);
    auto r = blocked_sum<3>(A.size(), [&](std::size_t a) {
        double si = 0.0, ss = 0.0, sI = 0.0;
        for (std::size_t b = 0; b < B.size(); ++b) {
            double w = A.wx[a] * B.wx[b] + A.wy[a] * B.wy[b];
            double dx = A.lx[a] - B.lx[b], dy = A.ly[a] - B.ly[b];
            double r2 = dx * dx + dy * dy;
            if (r2 >= s2) {
                si += std::log(r2) * log_scale * w;
            } else {
                double r = std::sqrt(r2);
                si += g(r) * w;
                sI += psi(r) * B.dt[b];
            }
            double mx = A.mx[a] - B.mx[b], my = A.my[a] - B.my[b];
            double m2 = mx * mx + my * my;
            ss += (m2 >= s2 ? std::log(m2) * log_scale : g(std::sqrt(m2))) * w;
        }
        return std::array<double, 3>{si, ss, sI * A.dt[a]};
    });
    return {-r[0], -r[1], r[2]};
}

// ---- delta * theta ----

namespace {

// integral_0^u (1/2) log(t^2 + d^2) dt
double log_primitive(double u, double d) {
    double ad = std::abs(d);
    double u2 = u * u + d * d;
    if (u2 == 0.0) return 0.0;
    double v = 0.5 * u * std::log(u2) - u;
    if (ad > 0.0) v += ad * std::atan(u / ad);
    return v;
}

}  // namespace

Vec2 triangle_delta_theta(const Triangle& t, Point x) {
    // grad U = -sum over edges of nu_right * integral_e G(x - z) ds, then rotate by pi/2
    std::array<Point, 4> v{t.a, t.b, t.c, t.a};
    Vec2 grad{0, 0};
    for (std::size_t k = 0; k < 3; ++k) {
        Vec2 d = v[k + 1] - v[k];
        double len = norm(d);
        if (len == 0.0) continue;
        Vec2 e = (1.0 / len) * d;
        Vec2 rel = x - v[k];
        double u = dot(rel, e);
        double dist = cross(e, rel);
        double integral = (log_primitive(len - u, dist) - log_primitive(-u, dist)) / kTwoPi;
        Vec2 nu{e.y, -e.x};
        grad += (-integral) * nu;
    }
    return perp(grad);
}

Vec2 VectorGridField::interpolate(Point p) const {
    double fx = (p.x - spec.origin.x) / spec.h, fy = (p.y - spec.origin.y) / spec.h;
    if (!(fx >= 0) || !(fy >= 0) || fx > static_cast<double>(spec.nx - 1) || fy > static_cast<double>(spec.ny - 1))
        throw Error(ErrorCode::Domain, "interpolation point outside the field grid");
    std::size_t i = std::min(static_cast<std::size_t>(fx), spec.nx - 2);
    std::size_t j = std::min(static_cast<std::size_t>(fy), spec.ny - 2);
    double tx = fx - static_cast<double>(i), ty = fy - static_cast<double>(j);
    auto at = [&](const std::vector<double>& v, std::size_t a, std::size_t b) { return v[b * spec.nx + a]; };
    auto lerp = [&](const std::vector<double>& v) {
        return (1 - ty) * ((1 - tx) * at(v, i, j) + tx * at(v, i + 1, j)) + ty * ((1 - tx) * at(v, i, j + 1) + tx * at(v, i + 1, j + 1));
    };
    return {lerp(vx), lerp(vy)};
}

VectorGridField mollified_delta_theta_field(const Triangle& tri, double eps, std::span<const Point> cover, double h, double K) {
    if (!(eps > 0) || !(h > 0)) throw Error(ErrorCode::InvalidArgument, "eps and h must be positive");
    RadialProfile psi(ProfileKind::DoubleMollifier, eps, eps, K);
    double reach = psi.support();
    std::array<Point, 3> corners{tri.a, tri.b, tri.c};
    std::array<std::span<const Point>, 2> sets{cover, corners};
    GridOptions opt;
    opt.h = h;
    opt.margin_nodes = 3.0;
    // grid_for_points inflates by eps * K; the psi stencil needs twice that
    GridSpec in = grid_for_points(sets, 2 * eps, K, opt);

    // exact delta * theta at the nodes, then psi * it; only nodes farther than the stencil
    // radius from the border are exact, and those cover the inflated bounding box
    std::vector<double> fx(in.size()), fy(in.size());
    parallel_for(in.ny, [&](std::size_t j) {
        for (std::size_t i = 0; i < in.nx; ++i) {
            Vec2 v = triangle_delta_theta(tri, in.node(i, j));
            fx[j * in.nx + i] = v.x;
            fy[j * in.nx + i] = v.y;
        }
    }, 8);
    Stencil s;
    s.rx = s.ry = static_cast<std::size_t>(std::floor(reach / h));
    std::size_t width = 2 * s.rx + 1;
    s.w.assign(width * width, 0.0);
    CompensatedSum total;
    auto r = static_cast<std::ptrdiff_t>(s.rx);
    for (std::ptrdiff_t dy = -r; dy <= r; ++dy)
        for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
            double v = psi(h * std::hypot(static_cast<double>(dx), static_cast<double>(dy)));
            s.w[static_cast<std::size_t>((dy + r) * static_cast<std::ptrdiff_t>(width) + dx + r)] = v;
            total.add(v);
        }
    for (double& v : s.w) v /= total.value();
    char key[64];
    std::snprintf(key, sizeof key, "psi1:%a", reach / h);
    s.cache_key = key;

    VectorGridField out;
    out.spec = in;
    auto conv_x = fft_convolve(fx, in.nx, in.ny, s);
    auto conv_y = fft_convolve(fy, in.nx, in.ny, s);
    // keep the interior where the convolution saw exact inputs
    std::size_t cut = s.rx;
    if (in.nx <= 2 * cut + 2 || in.ny <= 2 * cut + 2) throw Error(ErrorCode::Resolution, "field grid too small");
    out.spec.origin = in.node(cut, cut);
    out.spec.nx = in.nx - 2 * cut;
    out.spec.ny = in.ny - 2 * cut;
    out.vx.resize(out.spec.size());
    out.vy.resize(out.spec.size());
    for (std::size_t j = 0; j < out.spec.ny; ++j)
        for (std::size_t i = 0; i < out.spec.nx; ++i) {
            out.vx[j * out.spec.nx + i] = conv_x[(j + cut) * in.nx + i + cut];
            out.vy[j * out.spec.nx + i] = conv_y[(j + cut) * in.nx + i + cut];
        }
    return out;
}

double c_integral(const PlanarPath& half, const Triangle& tri, double eps, HalfSign sign, const CIntegralOptions& opt) {
    Point first = sign == HalfSign::Minus ? tri.a : tri.b;
    Point last = sign == HalfSign::Minus ? tri.b : tri.c;
    if (!(half.start() == first) || !(half.end() == last))
        throw Error(ErrorCode::InvalidArgument, "half path does not match the triangle vertices");
    if (eps < 0) throw Error(ErrorCode::InvalidArgument, "eps must be nonnegative");
    if (signed_area(tri) == 0.0) return 0.0;
    ClosedLoop loop(half);
    if (eps == 0.0) {
        double scale = bbox_diameter(loop.view().points) / 32.0;
        if (!(scale > 0)) scale = 1.0;
        return stratonovich_line_integral(loop.view(), [&](Vec2 u) { return triangle_delta_theta(tri, u); }, {0, 0}, scale);
    }
    double h = opt.h > 0 ? opt.h : eps / 6.0;
    auto field = mollified_delta_theta_field(tri, eps, half.points(), h, opt.K);
    return stratonovich_line_integral(loop.view(), [&](Vec2 u) { return field.interpolate(u); }, {0, 0}, eps * opt.K);
}

}  // namespace amperean
