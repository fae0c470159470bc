#pragma once

#include <functional>
#include <span>
#include <variant>

#include "amperean/fields.hpp"
#include "amperean/geometry.hpp"
#include "amperean/mollifier.hpp"
#include "amperean/paths.hpp"

namespace amperean {

using VectorKernel = std::function<Vec2(Vec2)>;

// Scalar kernels of the separation z = W_s - W'_t for the double integrals.
class ScalarKernel {
public:
    struct Zero {};
    struct Constant { double c; };
    struct Green {};
    struct Profile { RadialProfile profile; };
    struct Custom { std::function<double(Vec2)> f; };

    static ScalarKernel zero() { return ScalarKernel(Zero{}, 1.0); }
    static ScalarKernel constant(double c) { return ScalarKernel(Constant{c}, 1.0); }
    // Exact log|z| / (2 pi); only meaningful for curves at positive distance. `scale`
    // sets the quadrature panel length on straight segments.
    static ScalarKernel green(double scale) { return ScalarKernel(Green{}, scale); }
    static ScalarKernel mollified_green(double eps, double eps2, double K = 1.0);
    static ScalarKernel double_mollifier(double eps, double eps2, double K = 1.0);
    static ScalarKernel custom(std::function<double(Vec2)> f, double scale) { return ScalarKernel(Custom{std::move(f)}, scale); }

    double operator()(Vec2 z) const;
    double scale() const { return scale_; }
    const auto& variant() const { return kind_; }

private:
    using Kind = std::variant<Zero, Constant, Green, Profile, Custom>;
    ScalarKernel(Kind k, double scale) : kind_(std::move(k)), scale_(scale) {}
    Kind kind_;
    double scale_;
};

// Midpoint sum of <V(m_i - center), dW_i> over the path edges plus Gauss-Legendre on the
// closing segment; `scale` is the length on which V varies (panel size scale / 2).
double stratonovich_line_integral(LoopView loop, const VectorKernel& V, Point center, double scale);
// Same without the closing segment.
double open_line_integral(std::span<const Point> path, const VectorKernel& V, Point center);
// Boundary integral of a triangle, all three sides by Gauss-Legendre with closing-segment panels.
double triangle_line_integral(const Triangle& t, const VectorKernel& V, Point center, double scale);

// -sum_i of the left-point double sum of K(W_s - W'_t) dW^i_s dW'^i_t over both closed loops,
// with the closing segments integrated by Gauss-Legendre.
double ito_double_integral(LoopView W, LoopView W2, const ScalarKernel& k);
// Same with midpoint evaluation in both variables.
double strat_double_integral(LoopView W, LoopView W2, const ScalarKernel& k);
// Left-point double Riemann sum of (phi^eps * phi^eps')(W_s - W'_t) ds dt over the Brownian parts.
double mollified_intersection_time(const PlanarPath& W, const PlanarPath& W2, double eps, double eps2, double K = 1.0);

struct DoubleIntegrals {
    double ito = 0.0;           // B^Ito with the mollified Green kernel
    double strat = 0.0;         // B (Stratonovich-Stratonovich)
    double intersection = 0.0;  // I^{eps, eps'}
    double corrected() const { return ito - 0.25 * intersection; }
};
// All three in one pass over the time pairs, sharing the time grids.
DoubleIntegrals double_integrals(const PlanarPath& W, const PlanarPath& W2, double eps, double eps2, double K = 1.0);

// (delta * theta)(x) for the signed indicator of the triangle, in closed form.
Vec2 triangle_delta_theta(const Triangle& t, Point x);

enum class HalfSign { Minus, Plus };

struct CIntegralOptions {
    double h = 0.0;  // grid spacing of the interpolated field; <= 0 selects eps / 6
    double K = 1.0;
};

// Line integral of (phi^eps * phi^eps * delta) * theta along the half path plus its closing
// segment: C^{-,eps} for the first half (ending at tri.b), C^{+,eps} for the second.
// eps = 0 uses the closed form of delta * theta; eps > 0 interpolates a grid field bilinearly.
double c_integral(const PlanarPath& half, const Triangle& tri, double eps, HalfSign sign, const CIntegralOptions& opt = {});

// Grid field of the two components of (phi^eps * phi^eps * delta) * theta, valid on the
// bounding box of `cover` inflated by two nodes.
struct VectorGridField {
    GridSpec spec;
    std::vector<double> vx, vy;
    Vec2 interpolate(Point p) const;  // bilinear; throws Domain outside the grid
};
VectorGridField mollified_delta_theta_field(const Triangle& tri, double eps, std::span<const Point> cover, double h, double K = 1.0);

}  // namespace amperean
