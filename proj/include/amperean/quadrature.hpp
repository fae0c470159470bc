#pragma once

#include <cstddef>
#include <vector>

namespace amperean {

// Gauss-Legendre rule on [-1, 1]; nodes are stored in increasing order and
// are exactly antisymmetric (x[n-1-i] == -x[i]).
struct GaussLegendre {
    std::vector<double> x;
    std::vector<double> w;
};

const GaussLegendre& gauss_legendre(std::size_t n);

// Composite rule on [a, b]: callback f(t) receives nodes in increasing order.
template <class F>
double composite_gl(F&& f, double a, double b, std::size_t panels, std::size_t order = 8) {
    const GaussLegendre& gl = gauss_legendre(order);
    double width = (b - a) / static_cast<double>(panels);
    double total = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        double lo = a + width * static_cast<double>(p);
        double mid = lo + 0.5 * width;
        double part = 0.0;
        for (std::size_t i = 0; i < gl.x.size(); ++i) part += gl.w[i] * f(mid + 0.5 * width * gl.x[i]);
        total += 0.5 * width * part;
    }
    return total;
}

}  // namespace amperean
