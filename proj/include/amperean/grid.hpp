#pragma once

#include <cstdint>
#include <vector>

#include "amperean/common.hpp"

namespace amperean {

struct GridSpec {
    Point origin;
    double h = 1.0;
    std::size_t nx = 0;
    std::size_t ny = 0;

    Point node(std::size_t i, std::size_t j) const {
        return {origin.x + static_cast<double>(i) * h, origin.y + static_cast<double>(j) * h};
    }
    double x(std::size_t i) const { return origin.x + static_cast<double>(i) * h; }
    double y(std::size_t j) const { return origin.y + static_cast<double>(j) * h; }
    std::size_t size() const { return nx * ny; }
    bool operator==(const GridSpec&) const = default;
};

// Row-major scalar field: value(i, j) = values[j * nx + i], i along x.
struct GridField {
    GridSpec spec;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;  // 1 = excluded node

    GridField() = default;
    explicit GridField(const GridSpec& s) : spec(s), values(s.size(), 0.0), mask(s.size(), 0) {}

    double& at(std::size_t i, std::size_t j) { return values[j * spec.nx + i]; }
    double at(std::size_t i, std::size_t j) const { return values[j * spec.nx + i]; }
    double masked_fraction() const;
};

}  // namespace amperean
