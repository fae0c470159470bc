#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "amperean/geometry.hpp"
#include "amperean/grid.hpp"
#include "amperean/paths.hpp"

namespace amperean {

struct GridOptions {
    double h = 0.0;                 // spacing; <= 0 selects eps / 6
    double margin_nodes = 4.0;      // extra margin beyond eps * K, in units of h
    Vec2 jitter{0.0, 0.0};          // origin shift in units of h, each component in [0, 1)
    std::size_t max_nodes = std::size_t{1} << 26;
};

// Grid covering the union of the bounding boxes inflated by eps * K + margin.
GridSpec grid_for_points(std::span<const std::span<const Point>> point_sets, double eps, double K, const GridOptions& opt);
GridSpec grid_for_loop(LoopView loop, double eps, double K, const GridOptions& opt);

// Exact integer winding number at every node by a scanline sweep. Nodes lying on the
// curve (or within 1e-12 of the diameter) are flagged in the mask; their value is the
// half-open ray rule resolved with exact orientation.
GridField winding_field(LoopView loop, const GridSpec& spec);
GridField triangle_winding_field(const Triangle& t, const GridSpec& spec);

// Cell means of the winding function: exact along x, midpoint rule over sub_rows lines in y.
// Additive over loops like the winding function itself, and with the same plane integral.
GridField cell_averaged_winding(LoopView loop, const GridSpec& spec, std::size_t sub_rows = 8);
GridField cell_averaged_triangle(const Triangle& t, const GridSpec& spec, std::size_t sub_rows = 8);

// Convolution with the bump sampled at the nodes and renormalised to unit sum.
// The output carries no mask.
GridField mollify(const GridField& f, double eps, double K = 1.0);

// phi^eps * n on the grid: cell-averaged winding convolved with the sampled bump. Point
// samples of the discontinuous winding function would leave an O(h / eps) error.
GridField mollified_field_convolution(LoopView loop, double eps, const GridSpec& spec, double K = 1.0, std::size_t sub_rows = 8);
GridField triangle_field_convolution(const Triangle& t, double eps, const GridSpec& spec, double K = 1.0, std::size_t sub_rows = 8);

// Midpoint sum of theta^eps(. - z) along the path edges plus Gauss-Legendre quadrature
// on the closing segment.
GridField mollified_field_direct(LoopView loop, double eps, const GridSpec& spec, double K = 1.0);
// All three sides by Gauss-Legendre quadrature, with the same panels as a closing segment.
GridField triangle_field_direct(const Triangle& t, double eps, const GridSpec& spec, double K = 1.0);

// Panel count used for the straight segment p-q against a kernel of scale eps * K.
std::size_t segment_panels(Point p, Point q, double eps, double K = 1.0);

// h^2 * sum f g over nodes unmasked in both.
double field_inner_product(const GridField& f, const GridField& g);
// h^2 * sum f over unmasked nodes.
double field_integral(const GridField& f);

struct LevelSetAreas {
    std::map<int, double> areas;  // k -> A_k for |k| <= k_max
    double overflow = 0.0;         // area with |k| > k_max
    double first_moment() const;   // sum k A_k over the kept levels
};
LevelSetAreas level_set_areas(const GridField& winding, int k_max);

void add_in_place(GridField& into, const GridField& from, double scale = 1.0);

// Binary: "AMPF", u32 version, f64 origin x, origin y, h, u64 nx, ny, then row-major values.
void write_field_binary(const GridField& f, const std::filesystem::path& file);
GridField read_field_binary(const std::filesystem::path& file);
void write_field_text(const GridField& f, const std::filesystem::path& file);
void write_level_sets_csv(const LevelSetAreas& a, const std::filesystem::path& file);

}  // namespace amperean
