#pragma once

#include <cmath>
#include <vector>

#include "amperean/paths.hpp"

namespace amperean::test {

// Regular n-gon on a circle, traversed `turns` times (negative = clockwise); the last
// vertex coincides with the first so the closing segment has zero length.
inline ClosedLoop polygon_circle(std::size_t n, double radius, Point center = {0, 0}, int turns = 1) {
    std::size_t total = n * static_cast<std::size_t>(std::abs(turns));
    std::vector<double> t(total + 1);
    std::vector<Point> p(total + 1);
    for (std::size_t i = 0; i <= total; ++i) {
        double a = (turns > 0 ? 1.0 : -1.0) * 2.0 * M_PI * static_cast<double>(i % n) / static_cast<double>(n);
        t[i] = static_cast<double>(i);
        p[i] = {center.x + radius * std::cos(a), center.y + radius * std::sin(a)};
    }
    return ClosedLoop(PlanarPath(std::move(t), std::move(p)));
}

inline ClosedLoop polygon_square(double half, Point center = {0, 0}) {
    std::vector<Point> p{{center.x - half, center.y - half}, {center.x + half, center.y - half},
                         {center.x + half, center.y + half}, {center.x - half, center.y + half},
                         {center.x - half, center.y - half}};
    return ClosedLoop(PlanarPath({0, 1, 2, 3, 4}, std::move(p)));
}

// Square with each side subdivided into `per_side` equal steps.
inline ClosedLoop polygon_square_fine(double half, std::size_t per_side, Point center = {0, 0}) {
    std::vector<Point> corners{{center.x - half, center.y - half}, {center.x + half, center.y - half},
                               {center.x + half, center.y + half}, {center.x - half, center.y + half}};
    std::vector<double> t;
    std::vector<Point> p;
    for (std::size_t c = 0; c < 4; ++c) {
        Point a = corners[c], b = corners[(c + 1) % 4];
        for (std::size_t k = 0; k < per_side; ++k) {
            double s = static_cast<double>(k) / static_cast<double>(per_side);
            p.push_back({a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)});
        }
    }
    p.push_back(corners[0]);
    for (std::size_t i = 0; i < p.size(); ++i) t.push_back(static_cast<double>(i));
    return ClosedLoop(PlanarPath(std::move(t), std::move(p)));
}

}  // namespace amperean::test
