#pragma once

#include <cstddef>
#include <functional>

#include "amperean/common.hpp"
#include "amperean/paths.hpp"
#include "amperean/quadrature.hpp"

namespace amperean {

struct Triangle {
    Point a, b, c;
};

// Sign of cross(b - a, c - a), exact for all finite doubles.
int orient2d(Point a, Point b, Point c);

double bbox_diameter(std::span<const Point> pts);
// Euclidean distance from z to the closed polyline.
double distance_to_loop(LoopView loop, Point z);
double distance_to_segment(Point p, Point q, Point z);

// Signed contribution of edge p->q to the winding around z (ray towards +x,
// half-open rule in y). Exactly antisymmetric under p <-> q; zero when z is on the edge.
int edge_crossing(Point p, Point q, Point z);

// Integer winding number; throws ErrorCode::OnCurve if z is within tol of the loop
// (tol < 0 selects 1e-12 times the bounding-box diameter).
int winding_number(LoopView loop, Point z, double tol = -1.0);
inline int winding_number(const ClosedLoop& loop, Point z, double tol = -1.0) { return winding_number(loop.view(), z, tol); }

int triangle_winding(const Triangle& t, Point z, double tol = -1.0);
double triangle_area(const Triangle& t);
double signed_area(const Triangle& t);

// Integral of <V(u), du> along p -> q by composite Gauss-Legendre. Nodes are laid out
// from the lexicographically smaller endpoint, so reversing the segment negates the
// result bit-exactly.
template <class Field>
double segment_integral(Point p, Point q, Field&& field, std::size_t panels = 1, std::size_t order = 8) {
    if (p == q) return 0.0;
    bool flip = (q.x < p.x) || (q.x == p.x && q.y < p.y);
    Point lo = flip ? q : p;
    Point hi = flip ? p : q;
    Vec2 d = hi - lo;
    const GaussLegendre& gl = gauss_legendre(order);
    CompensatedSum acc;
    double width = 1.0 / static_cast<double>(panels);
    for (std::size_t k = 0; k < panels; ++k) {
        double mid = width * (static_cast<double>(k) + 0.5);
        for (std::size_t i = 0; i < gl.x.size(); ++i) {
            double s = mid + 0.5 * width * gl.x[i];
            Vec2 v = field(Point{lo.x + s * d.x, lo.y + s * d.y});
            acc.add(0.5 * width * gl.w[i] * dot(v, d));
        }
    }
    double value = acc.value();
    return flip ? -value : value;
}

}  // namespace amperean
