#include "amperean/geometry.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace amperean {

namespace {

inline void two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    double bv = s - a;
    double av = s - bv;
    e = (a - av) + (b - bv);
}

inline void two_diff(double a, double b, double& d, double& e) {
    d = a - b;
    double bv = a - d;
    double av = d + bv;
    e = (a - av) + (bv - b);
}

inline void two_product(double a, double b, double& p, double& e) {
    p = a * b;
    e = std::fma(a, b, -p);
}

// Adds b to the nonoverlapping expansion e (Shewchuk's GROW-EXPANSION with zero elimination).
template <std::size_t N>
void grow(std::array<double, N>& e, std::size_t& len, double b) {
    double q = b;
    std::size_t out = 0;
    for (std::size_t i = 0; i < len; ++i) {
        double s, h;
        two_sum(q, e[i], s, h);
        q = s;
        if (h != 0.0) e[out++] = h;
    }
    if (q != 0.0) e[out++] = q;
    len = out;
}

int orient_exact(Point a, Point b, Point c) {
    double bax, bax_e, cay, cay_e, bay, bay_e, cax, cax_e;
    two_diff(b.x, a.x, bax, bax_e);
    two_diff(c.y, a.y, cay, cay_e);
    two_diff(b.y, a.y, bay, bay_e);
    two_diff(c.x, a.x, cax, cax_e);
    std::array<double, 2> l1{bax, bax_e}, r1{cay, cay_e}, l2{bay, bay_e}, r2{cax, cax_e};
    std::array<double, 40> e{};
    std::size_t len = 0;
    for (double u : l1)
        for (double v : r1) {
            double p, err;
            two_product(u, v, p, err);
            grow(e, len, p);
            grow(e, len, err);
        }
    for (double u : l2)
        for (double v : r2) {
            double p, err;
            two_product(u, v, p, err);
            grow(e, len, -p);
            grow(e, len, -err);
        }
    if (len == 0) return 0;
    double top = e[len - 1];
    return top > 0.0 ? 1 : (top < 0.0 ? -1 : 0);
}

}  // namespace

int orient2d(Point a, Point b, Point c) {
    double left = (b.x - a.x) * (c.y - a.y);
    double right = (b.y - a.y) * (c.x - a.x);
    double det = left - right;
    double bound = (3.0 + 16.0 * std::numeric_limits<double>::epsilon()) * std::numeric_limits<double>::epsilon() *
                   (std::abs(left) + std::abs(right));
    if (det > bound) return 1;
    if (-det > bound) return -1;
    return orient_exact(a, b, c);
}

double bbox_diameter(std::span<const Point> pts) {
    double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
    for (const Point& p : pts) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    return std::hypot(x1 - x0, y1 - y0);
}

double distance_to_segment(Point p, Point q, Point z) {
    Vec2 d = q - p;
    double len2 = norm2(d);
    if (len2 == 0.0) return norm(z - p);
    double s = std::clamp(dot(z - p, d) / len2, 0.0, 1.0);
    return norm(z - (p + s * d));
}

double distance_to_loop(LoopView loop, Point z) {
    double best = std::numeric_limits<double>::infinity();
    auto pts = loop.points;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) best = std::min(best, distance_to_segment(pts[i], pts[i + 1], z));
    return std::min(best, distance_to_segment(loop.closing_from(), loop.closing_to(), z));
}

int edge_crossing(Point p, Point q, Point z) {
    if (p.y <= z.y && z.y < q.y) return orient2d(p, q, z) > 0 ? 1 : 0;
    if (q.y <= z.y && z.y < p.y) return orient2d(p, q, z) < 0 ? -1 : 0;
    return 0;
}

int winding_number(LoopView loop, Point z, double tol) {
    auto pts = loop.points;
    if (tol < 0.0) tol = 1e-12 * bbox_diameter(pts);
    if (distance_to_loop(loop, z) <= tol) throw Error(ErrorCode::OnCurve, "point lies on the loop");
    int w = 0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) w += edge_crossing(pts[i], pts[i + 1], z);
    return w + edge_crossing(loop.closing_from(), loop.closing_to(), z);
}

double signed_area(const Triangle& t) { return 0.5 * cross(t.b - t.a, t.c - t.a); }

double triangle_area(const Triangle& t) { return std::abs(signed_area(t)); }

int triangle_winding(const Triangle& t, Point z, double tol) {
    std::array<Point, 3> pts{t.a, t.b, t.c};
    return winding_number(LoopView{pts}, z, tol);
}

}  // namespace amperean
