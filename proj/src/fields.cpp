#include "amperean/fields.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "amperean/fft.hpp"
#include "amperean/mollifier.hpp"
#include "amperean/parallel.hpp"

namespace amperean {

double GridField::masked_fraction() const {
    if (mask.empty()) return 0.0;
    std::size_t n = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
    return static_cast<double>(n) / static_cast<double>(mask.size());
}

// ---- grids ----

GridSpec grid_for_points(std::span<const std::span<const Point>> point_sets, double eps, double K, const GridOptions& opt) {
    if (!(eps > 0) || !(K > 0)) throw Error(ErrorCode::InvalidArgument, "eps and K must be positive");
    double h = opt.h > 0 ? opt.h : eps / 6.0;
    if (opt.jitter.x < 0 || opt.jitter.x >= 1 || opt.jitter.y < 0 || opt.jitter.y >= 1)
        throw Error(ErrorCode::InvalidArgument, "grid jitter must lie in [0, 1)");
    double inf = std::numeric_limits<double>::infinity();
    Point lo{inf, inf}, hi{-inf, -inf};
    for (auto pts : point_sets)
        for (Point p : pts) {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
        }
    if (!(lo.x <= hi.x)) throw Error(ErrorCode::InvalidArgument, "no points to cover");
    double margin = eps * K + opt.margin_nodes * h;
    GridSpec spec;
    spec.h = h;
    spec.origin = {lo.x - margin - opt.jitter.x * h, lo.y - margin - opt.jitter.y * h};
    double wx = std::ceil((hi.x + margin - spec.origin.x) / h) + 1;
    double wy = std::ceil((hi.y + margin - spec.origin.y) / h) + 1;
    if (wx * wy > static_cast<double>(opt.max_nodes))
        throw Error(ErrorCode::Resolution, "grid of " + std::to_string(wx) + " x " + std::to_string(wy) + " nodes exceeds the memory cap");
    spec.nx = static_cast<std::size_t>(wx);
    spec.ny = static_cast<std::size_t>(wy);
    return spec;
}

GridSpec grid_for_loop(LoopView loop, double eps, double K, const GridOptions& opt) {
    std::array<std::span<const Point>, 1> sets{loop.points};
    return grid_for_points(sets, eps, K, opt);
}

// ---- exact winding by scanline ----

namespace {

struct Crossing {
    double x;
    std::uint32_t edge;
    int dir;
};

// Crossings of every non-horizontal edge of the closed polygon with the horizontal lines
// y = ys[r] (ys increasing), half-open in y, sorted along each line.
struct RowCrossings {
    std::vector<std::size_t> offsets;
    std::vector<Crossing> items;
};

void check_covered(std::span<const Point> pts, const GridSpec& spec) {
    if (spec.nx == 0 || spec.ny == 0 || !(spec.h > 0)) throw Error(ErrorCode::InvalidArgument, "empty grid");
    if (pts.size() < 2) throw Error(ErrorCode::InvalidArgument, "a loop needs at least two points");
    double xmax = spec.x(spec.nx - 1), ymax = spec.y(spec.ny - 1);
    for (Point p : pts)
        if (p.x < spec.origin.x || p.x > xmax || p.y < spec.origin.y || p.y > ymax)
            throw Error(ErrorCode::Domain, "grid does not cover the loop");
}

std::size_t lower_index(const std::vector<double>& ys, double y) {
    return static_cast<std::size_t>(std::lower_bound(ys.begin(), ys.end(), y) - ys.begin());
}

RowCrossings row_crossings(std::span<const Point> pts, const std::vector<double>& ys) {
    std::size_t n = pts.size();
    RowCrossings rc;
    rc.offsets.assign(ys.size() + 1, 0);
    for (std::size_t e = 0; e < n; ++e) {
        Point p = pts[e], q = pts[(e + 1) % n];
        if (p.y == q.y) continue;
        std::size_t a = lower_index(ys, std::min(p.y, q.y)), b = lower_index(ys, std::max(p.y, q.y));
        for (std::size_t r = a; r < b; ++r) ++rc.offsets[r + 1];
    }
    for (std::size_t r = 0; r < ys.size(); ++r) rc.offsets[r + 1] += rc.offsets[r];
    rc.items.resize(rc.offsets.back());
    std::vector<std::size_t> fill(rc.offsets.begin(), rc.offsets.end() - 1);
    for (std::size_t e = 0; e < n; ++e) {
        Point p = pts[e], q = pts[(e + 1) % n];
        if (p.y == q.y) continue;
        int dir = q.y > p.y ? 1 : -1;
        double slope = (q.x - p.x) / (q.y - p.y);
        std::size_t a = lower_index(ys, std::min(p.y, q.y)), b = lower_index(ys, std::max(p.y, q.y));
        for (std::size_t r = a; r < b; ++r) rc.items[fill[r]++] = {p.x + (ys[r] - p.y) * slope, static_cast<std::uint32_t>(e), dir};
    }
    parallel_for(ys.size(), [&](std::size_t r) {
        std::sort(rc.items.begin() + static_cast<std::ptrdiff_t>(rc.offsets[r]), rc.items.begin() + static_cast<std::ptrdiff_t>(rc.offsets[r + 1]),
                  [](const Crossing& a, const Crossing& b) { return a.x < b.x || (a.x == b.x && a.edge < b.edge); });
    }, 64);
    return rc;
}

GridField winding_of_cycle(std::span<const Point> pts, const GridSpec& spec) {
    check_covered(pts, spec);
    std::size_t n = pts.size();
    double scale = 0.0;
    for (Point p : pts) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
    double diam = bbox_diameter(pts);
    double mask_tol = 1e-12 * diam;
    double near = 1e-9 * (diam + scale) + mask_tol;

    std::vector<double> ys(spec.ny), xs(spec.nx);
    for (std::size_t j = 0; j < spec.ny; ++j) ys[j] = spec.y(j);
    for (std::size_t i = 0; i < spec.nx; ++i) xs[i] = spec.x(i);
    RowCrossings rc = row_crossings(pts, ys);

    GridField out(spec);
    for (std::size_t e = 0; e < n; ++e) {
        Point p = pts[e], q = pts[(e + 1) % n];
        if (p.y != q.y) continue;
        std::size_t j = lower_index(ys, p.y);
        if (j == spec.ny || ys[j] != p.y) continue;
        for (std::size_t i = lower_index(xs, std::min(p.x, q.x)); i < spec.nx && xs[i] <= std::max(p.x, q.x); ++i)
            out.mask[j * spec.nx + i] = 1;
    }

    parallel_for(spec.ny, [&](std::size_t j) {
        const Crossing* row = rc.items.data() + rc.offsets[j];
        std::size_t m = rc.offsets[j + 1] - rc.offsets[j];
        int total = 0;
        for (std::size_t k = 0; k < m; ++k) total += row[k].dir;
        int left = 0;  // sum of dir over crossings certainly left of the node
        std::size_t lo = 0;
        for (std::size_t i = 0; i < spec.nx; ++i) {
            double xi = xs[i];
            while (lo < m && row[lo].x < xi - near) left += row[lo++].dir;
            int w = total - left;
            for (std::size_t k = lo; k < m && row[k].x <= xi + near; ++k) {
                Point p = pts[row[k].edge], q = pts[(row[k].edge + 1) % n];
                Point z{xi, ys[j]};
                w += edge_crossing(p, q, z) - row[k].dir;
                if (std::abs(row[k].x - xi) <= mask_tol || orient2d(p, q, z) == 0) out.mask[j * spec.nx + i] = 1;
            }
            out.values[j * spec.nx + i] = w;
        }
    }, 8);
    return out;
}

// Mean of the winding function over each cell [x - h/2, x + h/2] x [y - h/2, y + h/2]:
// exact along x from the crossing abscissae, midpoint rule over `sub_rows` lines in y.
GridField cell_average_of_cycle(std::span<const Point> pts, const GridSpec& spec, std::size_t sub_rows) {
    check_covered(pts, spec);
    if (sub_rows == 0) throw Error(ErrorCode::InvalidArgument, "sub_rows must be positive");
    double h = spec.h;
    std::vector<double> ys(spec.ny * sub_rows);
    for (std::size_t j = 0; j < spec.ny; ++j)
        for (std::size_t k = 0; k < sub_rows; ++k)
            ys[j * sub_rows + k] = spec.y(j) + h * ((static_cast<double>(k) + 0.5) / static_cast<double>(sub_rows) - 0.5);
    RowCrossings rc = row_crossings(pts, ys);
    GridField out(spec);
    double weight = 1.0 / (h * static_cast<double>(sub_rows));
    parallel_for(spec.ny, [&](std::size_t j) {
        std::vector<double> acc(spec.nx, 0.0);
        for (std::size_t r = j * sub_rows; r < (j + 1) * sub_rows; ++r) {
            const Crossing* row = rc.items.data() + rc.offsets[r];
            std::size_t m = rc.offsets[r + 1] - rc.offsets[r];
            if (m == 0) continue;
            // integral over [a, a + h] of sum_c dir_c 1{x < x_c} = sum_c dir_c clamp(x_c - a, 0, h)
            double right = 0.0;
            for (std::size_t k = 0; k < m; ++k) right += row[k].dir;
            std::size_t lo = 0;
            for (std::size_t i = 0; i < spec.nx; ++i) {
                double a = spec.x(i) - 0.5 * h, b = a + h;
                while (lo < m && row[lo].x <= a) right -= row[lo++].dir;
                double v = 0.0;
                std::size_t k = lo;
                double inside = 0.0;
                for (; k < m && row[k].x < b; ++k) {
                    v += row[k].dir * (row[k].x - a);
                    inside += row[k].dir;
                }
                acc[i] += v + (right - inside) * h;
            }
        }
        for (std::size_t i = 0; i < spec.nx; ++i) out.values[j * spec.nx + i] = acc[i] * weight;
    }, 4);
    return out;
}

}  // namespace

GridField winding_field(LoopView loop, const GridSpec& spec) { return winding_of_cycle(loop.points, spec); }

GridField triangle_winding_field(const Triangle& t, const GridSpec& spec) {
    std::array<Point, 3> pts{t.a, t.b, t.c};
    return winding_of_cycle(pts, spec);
}

GridField cell_averaged_winding(LoopView loop, const GridSpec& spec, std::size_t sub_rows) {
    return cell_average_of_cycle(loop.points, spec, sub_rows);
}

GridField cell_averaged_triangle(const Triangle& t, const GridSpec& spec, std::size_t sub_rows) {
    std::array<Point, 3> pts{t.a, t.b, t.c};
    return cell_average_of_cycle(pts, spec, sub_rows);
}

// ---- mollification by convolution ----

namespace {

Stencil bump_stencil(double eps, double K, double h) {
    double support = eps * K;
    Stencil s;
    s.rx = s.ry = static_cast<std::size_t>(std::floor(support / h));
    std::size_t width = 2 * s.rx + 1;
    s.w.assign(width * width, 0.0);
    CompensatedSum total;
    auto r = static_cast<std::ptrdiff_t>(s.rx);
    for (std::ptrdiff_t dy = -r; dy <= r; ++dy)
        for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
            double v = bump::value(h * std::hypot(static_cast<double>(dx), static_cast<double>(dy)) / support);
            s.w[static_cast<std::size_t>((dy + r) * static_cast<std::ptrdiff_t>(width) + dx + r)] = v;
            total.add(v);
        }
    double norm = total.value();
    for (double& v : s.w) v /= norm;
    char key[64];
    std::snprintf(key, sizeof key, "bump:%a", support / h);
    s.cache_key = key;
    return s;
}

}  // namespace

GridField mollify(const GridField& winding, double eps, double K) {
    if (!(eps > 0) || !(K > 0)) throw Error(ErrorCode::InvalidArgument, "eps and K must be positive");
    const GridSpec& spec = winding.spec;
    Stencil s = bump_stencil(eps, K, spec.h);
    GridField out(spec);
    if (s.rx == 0) {
        out.values = winding.values;
        return out;
    }
    out.values = fft_convolve(winding.values, spec.nx, spec.ny, s);
    return out;
}

GridField mollified_field_convolution(LoopView loop, double eps, const GridSpec& spec, double K, std::size_t sub_rows) {
    return mollify(cell_averaged_winding(loop, spec, sub_rows), eps, K);
}

GridField triangle_field_convolution(const Triangle& t, double eps, const GridSpec& spec, double K, std::size_t sub_rows) {
    return mollify(cell_averaged_triangle(t, spec, sub_rows), eps, K);
}

// ---- mollification by direct line integrals ----

std::size_t segment_panels(Point p, Point q, double eps, double K) {
    double len = norm(q - p);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(2.0 * len / (eps * K))));
}

namespace {

template <class NodeValue>
GridField direct_field(const GridSpec& spec, NodeValue&& value) {
    GridField out(spec);
    parallel_for(spec.ny, [&](std::size_t j) {
        for (std::size_t i = 0; i < spec.nx; ++i) out.values[j * spec.nx + i] = value(spec.node(i, j));
    }, 4);
    return out;
}

}  // namespace

GridField mollified_field_direct(LoopView loop, double eps, const GridSpec& spec, double K) {
    auto pts = loop.points;
    if (pts.size() < 2) throw Error(ErrorCode::InvalidArgument, "a loop needs at least two points");
    std::vector<Point> mid(pts.size() - 1);
    std::vector<Vec2> inc(pts.size() - 1);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        mid[i] = 0.5 * (pts[i] + pts[i + 1]);
        inc[i] = pts[i + 1] - pts[i];
    }
    Point from = loop.closing_from(), to = loop.closing_to();
    std::size_t panels = segment_panels(from, to, eps, K);
    return direct_field(spec, [&](Point z) {
        CompensatedSum acc;
        for (std::size_t i = 0; i < mid.size(); ++i) acc.add(dot(theta_eps(mid[i] - z, eps, K), inc[i]));
        acc.add(segment_integral(from, to, [&](Point u) { return theta_eps(u - z, eps, K); }, panels));
        return acc.value();
    });
}

GridField triangle_field_direct(const Triangle& t, double eps, const GridSpec& spec, double K) {
    std::array<Point, 4> v{t.a, t.b, t.c, t.a};
    std::array<std::size_t, 3> panels{};
    for (std::size_t k = 0; k < 3; ++k) panels[k] = segment_panels(v[k], v[k + 1], eps, K);
    return direct_field(spec, [&](Point z) {
        CompensatedSum acc;
        for (std::size_t k = 0; k < 3; ++k)
            acc.add(segment_integral(v[k], v[k + 1], [&](Point u) { return theta_eps(u - z, eps, K); }, panels[k]));
        return acc.value();
    });
}

// ---- reductions ----

double field_inner_product(const GridField& f, const GridField& g) {
    if (!(f.spec == g.spec)) throw Error(ErrorCode::Shape, "fields live on different grids");
    CompensatedSum acc;
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        if (f.mask[k] || g.mask[k]) continue;
        acc.add(f.values[k] * g.values[k]);
    }
    return acc.value() * f.spec.h * f.spec.h;
}

double field_integral(const GridField& f) {
    CompensatedSum acc;
    for (std::size_t k = 0; k < f.values.size(); ++k)
        if (!f.mask[k]) acc.add(f.values[k]);
    return acc.value() * f.spec.h * f.spec.h;
}

double LevelSetAreas::first_moment() const {
    CompensatedSum acc;
    for (auto [k, a] : areas) acc.add(k * a);
    return acc.value();
}

LevelSetAreas level_set_areas(const GridField& winding, int k_max) {
    if (k_max < 1) throw Error(ErrorCode::InvalidArgument, "k_max must be positive");
    std::map<long long, std::size_t> counts;
    for (double v : winding.values) ++counts[std::llround(v)];
    LevelSetAreas out;
    double cell = winding.spec.h * winding.spec.h;
    for (int k = -k_max; k <= k_max; ++k) out.areas[k] = 0.0;
    std::size_t overflow = 0;
    for (auto [k, c] : counts) {
        if (std::llabs(k) <= k_max)
            out.areas[static_cast<int>(k)] = static_cast<double>(c) * cell;
        else
            overflow += c;
    }
    out.overflow = static_cast<double>(overflow) * cell;
    return out;
}

void add_in_place(GridField& into, const GridField& from, double scale) {
    if (!(into.spec == from.spec)) throw Error(ErrorCode::Shape, "fields live on different grids");
    for (std::size_t k = 0; k < into.values.size(); ++k) {
        into.values[k] += scale * from.values[k];
        into.mask[k] |= from.mask[k];
    }
}

// ---- export ----

namespace {

constexpr char kMagic[4] = {'A', 'M', 'P', 'F'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

std::ofstream open_out(const std::filesystem::path& file, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(file, mode);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + file.string());
    return out;
}

}  // namespace

void write_field_binary(const GridField& f, const std::filesystem::path& file) {
    auto out = open_out(file, std::ios::binary);
    out.write(kMagic, 4);
    put(out, kVersion);
    put(out, f.spec.origin.x);
    put(out, f.spec.origin.y);
    put(out, f.spec.h);
    put(out, static_cast<std::uint64_t>(f.spec.nx));
    put(out, static_cast<std::uint64_t>(f.spec.ny));
    out.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!out) throw Error(ErrorCode::Io, "write failed: " + file.string());
}

GridField read_field_binary(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + file.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0 || get<std::uint32_t>(in) != kVersion)
        throw Error(ErrorCode::Io, "not a field file: " + file.string());
    GridSpec spec;
    spec.origin.x = get<double>(in);
    spec.origin.y = get<double>(in);
    spec.h = get<double>(in);
    spec.nx = get<std::uint64_t>(in);
    spec.ny = get<std::uint64_t>(in);
    GridField f(spec);
    in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!in) throw Error(ErrorCode::Io, "truncated field file: " + file.string());
    return f;
}

void write_field_text(const GridField& f, const std::filesystem::path& file) {
    auto out = open_out(file);
    out.precision(17);
    for (std::size_t j = 0; j < f.spec.ny; ++j) {
        for (std::size_t i = 0; i < f.spec.nx; ++i) out << (i ? " " : "") << f.at(i, j);
        out << '\n';
    }
}

void write_level_sets_csv(const LevelSetAreas& a, const std::filesystem::path& file) {
    auto out = open_out(file);
    out.precision(17);
    out << "k,area\n";
    for (auto [k, v] : a.areas) out << k << ',' << v << '\n';
    out << "overflow," << a.overflow << '\n';
}

}  // namespace amperean
