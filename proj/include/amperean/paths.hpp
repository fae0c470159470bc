#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "amperean/common.hpp"

namespace amperean {

class PlanarPath {
public:
    PlanarPath() = default;
    // Validates: equal lengths, at least 2 points, times[0] == 0, strictly increasing.
    PlanarPath(std::vector<double> times, std::vector<Point> points);

    std::span<const double> times() const { return times_; }
    std::span<const Point> points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    std::size_t steps() const { return points_.size() - 1; }
    double duration() const { return times_.back(); }
    Point start() const { return points_.front(); }
    Point end() const { return points_.back(); }

private:
    std::vector<double> times_;
    std::vector<Point> points_;
};

// Polyline traversed point by point and closed by the straight segment end -> start.
struct LoopView {
    std::span<const Point> points;

    std::size_t edge_count() const { return points.size(); }
    Point closing_from() const { return points.back(); }
    Point closing_to() const { return points.front(); }
};

class ClosedLoop {
public:
    explicit ClosedLoop(PlanarPath base) : base_(std::move(base)) {}

    const PlanarPath& base() const { return base_; }
    LoopView view() const { return {base_.points()}; }
    Point closing_from() const { return base_.end(); }
    Point closing_to() const { return base_.start(); }

private:
    PlanarPath base_;
};

struct DyadicIndex {
    unsigned k = 0;
    std::uint64_t j = 1;

    DyadicIndex() = default;
    DyadicIndex(unsigned level, std::uint64_t position);

    DyadicIndex minus() const { return {k + 1, 2 * j - 1}; }
    DyadicIndex plus() const { return {k + 1, 2 * j}; }
    bool operator==(const DyadicIndex&) const = default;
};

PlanarPath sample_brownian(double T, std::size_t n_steps, std::uint64_t seed, Point start = {});
PlanarPath refine_dyadic(const PlanarPath& path, std::uint64_t seed);
PlanarPath restrict_path(const PlanarPath& path, DyadicIndex idx);
ClosedLoop close_loop(PlanarPath path);

// Smallest power-of-two step count (>= 2) with T / n <= max_dt.
std::size_t steps_for_dt(double T, double max_dt);

void write_path_binary(const PlanarPath& path, const std::filesystem::path& file);
PlanarPath read_path_binary(const std::filesystem::path& file);
void write_path_csv(const PlanarPath& path, const std::filesystem::path& file);

}  // namespace amperean
