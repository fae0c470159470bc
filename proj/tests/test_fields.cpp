#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "amperean/fft.hpp"
#include "amperean/fields.hpp"
#include "amperean/mollifier.hpp"
#include "test_support.hpp"

using namespace amperean;

namespace {

GridSpec square_grid(double half, std::size_t n) {
    double h = 2 * half / static_cast<double>(n);
    return {{-half, -half}, h, n + 1, n + 1};
}

double sup_abs(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double shoelace(std::span<const Point> p) {
    double a = 0;
    for (std::size_t i = 0; i < p.size(); ++i) a += cross(p[i], p[(i + 1) % p.size()]);
    return 0.5 * a;
}

ClosedLoop subdivided(const ClosedLoop& loop, std::size_t parts) {
    auto p = loop.view().points;
    std::vector<Point> q;
    std::vector<double> t;
    for (std::size_t i = 0; i + 1 < p.size(); ++i)
        for (std::size_t k = 0; k < parts; ++k) {
            double s = static_cast<double>(k) / static_cast<double>(parts);
            q.push_back(p[i] + s * (p[i + 1] - p[i]));
        }
    q.push_back(p.back());
    for (std::size_t i = 0; i < q.size(); ++i) t.push_back(static_cast<double>(i));
    return ClosedLoop(PlanarPath(std::move(t), std::move(q)));
}

}  // namespace

// ---- fast convolution ----

TEST(FftConvolve, FastSizes) {
    EXPECT_EQ(fast_fft_size(1), 1u);
    EXPECT_EQ(fast_fft_size(11), 12u);
    EXPECT_EQ(fast_fft_size(13), 14u);
    EXPECT_EQ(fast_fft_size(97), 98u);
    EXPECT_EQ(fast_fft_size(1025), 1029u);
}

TEST(FftConvolve, MatchesDirectSumWithoutWraparound) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1, 1);
    std::size_t nx = 37, ny = 23;
    std::vector<double> f(nx * ny);
    for (double& v : f) v = u(gen);
    for (auto [rx, ry] : {std::pair<std::size_t, std::size_t>{0, 0}, {3, 5}, {36, 22}, {7, 1}}) {
        Stencil s{rx, ry, std::vector<double>((2 * rx + 1) * (2 * ry + 1)), {}};
        for (double& v : s.w) v = u(gen);
        auto a = fft_convolve(f, nx, ny, s);
        auto b = direct_convolve(f, nx, ny, s);
        for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
    }
    EXPECT_THROW(fft_convolve(f, nx + 1, ny, Stencil{1, 1, std::vector<double>(9), {}}), Error);
    EXPECT_THROW(fft_convolve(f, nx, ny, Stencil{1, 1, std::vector<double>(8), {}}), Error);
}

// ---- winding fields ----

TEST(WindingField, CircleExamples) {
    auto circle = test::polygon_circle(256, 1.0);
    auto spec = square_grid(1.28, 256);
    auto w = winding_field(circle.view(), spec);
    EXPECT_EQ(w.at(128, 128), 1.0);
    EXPECT_EQ(w.at(0, 0), 0.0);
    EXPECT_EQ(w.at(256, 128), 0.0);
    double area = field_integral(w);
    EXPECT_NEAR(area, kPi, 2 * spec.h * kTwoPi);
    EXPECT_LT(w.masked_fraction(), 1e-3);
}

TEST(WindingField, AgreesWithPointwiseWinding) {
    auto path = sample_brownian(1.0, 256, 12);
    ClosedLoop loop(path);
    auto spec = grid_for_loop(loop.view(), 0.05, 1.0, {});
    auto w = winding_field(loop.view(), spec);
    std::size_t checked = 0;
    for (std::size_t j = 0; j < spec.ny; j += 3)
        for (std::size_t i = 0; i < spec.nx; i += 3) {
            if (w.mask[j * spec.nx + i]) continue;
            EXPECT_EQ(w.at(i, j), winding_number(loop.view(), spec.node(i, j)));
            ++checked;
        }
    EXPECT_GT(checked, 1000u);
}

TEST(WindingField, VerticesOnNodesAreResolvedAndMasked) {
    // square with corners on grid nodes and horizontal sides along grid rows
    GridSpec spec{{-2, -2}, 0.25, 17, 17};
    auto sq = test::polygon_square(1.0);
    auto w = winding_field(sq.view(), spec);
    EXPECT_EQ(w.at(8, 8), 1.0);
    EXPECT_EQ(w.at(0, 8), 0.0);
    EXPECT_EQ(w.mask[4 * 17 + 8], 1);   // bottom side
    EXPECT_EQ(w.mask[8 * 17 + 12], 1);  // right side
    EXPECT_EQ(w.mask[8 * 17 + 8], 0);
    // node values on the boundary follow the half-open ray rule, so the two halves of a
    // split square add up exactly
    std::vector<Point> left{{-1, -1}, {0, -1}, {0, 1}, {-1, 1}};
    std::vector<Point> right{{0, -1}, {1, -1}, {1, 1}, {0, 1}};
    auto wl = winding_field(LoopView{left}, spec);
    auto wr = winding_field(LoopView{right}, spec);
    for (std::size_t k = 0; k < spec.size(); ++k) EXPECT_EQ(wl.values[k] + wr.values[k], w.values[k]);
}

TEST(WindingField, ReversalNegates) {
    auto path = sample_brownian(1.0, 128, 5);
    std::vector<Point> pts(path.points().begin(), path.points().end());
    std::vector<Point> rev(pts.rbegin(), pts.rend());
    auto spec = grid_for_loop(LoopView{pts}, 0.05, 1.0, {});
    auto a = winding_field(LoopView{pts}, spec);
    auto b = winding_field(LoopView{rev}, spec);
    for (std::size_t k = 0; k < spec.size(); ++k) EXPECT_EQ(a.values[k], -b.values[k]);
    auto la = level_set_areas(a, 4), lb = level_set_areas(b, 4);
    for (int k = -4; k <= 4; ++k) EXPECT_EQ(la.areas[k], lb.areas[-k]);
}

TEST(WindingField, DomainError) {
    auto circle = test::polygon_circle(16, 1.0);
    GridSpec small{{-0.5, -0.5}, 0.1, 11, 11};
    try {
        winding_field(circle.view(), small);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Domain);
    }
}

TEST(WindingField, ExactAdditivityOverDecomposition) {
    auto path = sample_brownian(1.0, 256, 1234);
    auto pts = path.points();
    std::vector<Point> first(pts.begin(), pts.begin() + 129), second(pts.begin() + 128, pts.end());
    Triangle tri{pts[0], pts[128], pts[256]};
    auto spec = grid_for_loop(LoopView{pts}, 0.02, 1.0, {});
    auto whole = winding_field(LoopView{pts}, spec);
    auto a = winding_field(LoopView{first}, spec);
    auto b = winding_field(LoopView{second}, spec);
    auto t = triangle_winding_field(tri, spec);
    for (std::size_t k = 0; k < spec.size(); ++k) ASSERT_EQ(whole.values[k], a.values[k] + b.values[k] + t.values[k]);
}

TEST(CellAverage, MatchesFineSampling) {
    auto path = sample_brownian(1.0, 128, 4);
    auto pts = path.points();
    GridOptions opt;
    opt.h = 0.04;
    auto spec = grid_for_loop(LoopView{pts}, 0.1, 1.0, opt);
    auto c = cell_averaged_winding(LoopView{pts}, spec, 32);
    // brute force: point samples on a 32 x 32 sub-lattice of each cell
    for (std::size_t j = 10; j < spec.ny; j += 7)
        for (std::size_t i = 10; i < spec.nx; i += 7) {
            double sum = 0;
            for (int a = 0; a < 32; ++a)
                for (int b = 0; b < 32; ++b) {
                    Point z = spec.node(i, j) + Vec2{spec.h * ((b + 0.5) / 32 - 0.5), spec.h * ((a + 0.5) / 32 - 0.5)};
                    if (distance_to_loop(LoopView{pts}, z) > 1e-9) sum += winding_number(LoopView{pts}, z);
                }
            EXPECT_NEAR(c.at(i, j), sum / 1024, 0.07);
        }
}

// ---- level sets ----

TEST(LevelSets, CircleAndLevyArea) {
    auto circle = test::polygon_circle(256, 1.0);
    auto spec = square_grid(1.28, 256);
    auto a = level_set_areas(winding_field(circle.view(), spec), 3);
    EXPECT_NEAR(a.areas[1], kPi, 2 * spec.h * kTwoPi);
    EXPECT_EQ(a.areas[2], 0.0);
    EXPECT_EQ(a.areas[-1], 0.0);
    EXPECT_EQ(a.overflow, 0.0);
    EXPECT_THROW(level_set_areas(winding_field(circle.view(), spec), 0), Error);

    // sum k A_k against the discretised Stratonovich integral of x dy - y dx over the closed loop
    auto path = sample_brownian(1.0, 512, 99);
    auto pts = path.points();
    double levy = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        Point p = pts[i], q = pts[(i + 1) % pts.size()];
        levy += 0.5 * ((p.x + q.x) * (q.y - p.y) - (p.y + q.y) * (q.x - p.x)) * 0.5;
    }
    GridOptions opt;
    opt.h = 0.002;
    auto fine = grid_for_loop(LoopView{pts}, 0.01, 1.0, opt);
    auto w = winding_field(LoopView{pts}, fine);
    auto areas = level_set_areas(w, 50);
    double perimeter = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) perimeter += norm(pts[i + 1] - pts[i]);
    EXPECT_NEAR(areas.first_moment(), levy, opt.h * perimeter);
    EXPECT_NEAR(areas.first_moment(), field_integral(w), 0.1 * opt.h * perimeter);
}

// ---- mollified fields ----

TEST(MollifiedField, IdentityKernelLeavesWindingUnchanged) {
    auto circle = test::polygon_circle(64, 1.0);
    auto spec = square_grid(1.5, 60);
    auto w = winding_field(circle.view(), spec);
    EXPECT_EQ(mollify(w, 0.5 * spec.h).values, w.values);
}

TEST(MollifiedField, PlaneIntegralIsEnclosedArea) {
    auto circle = test::polygon_circle(64, 1.0);
    double area = shoelace(circle.view().points);
    for (double eps : {0.05, 0.1, 0.2}) {
        auto spec = grid_for_loop(circle.view(), eps, 1.0, {});
        auto w = winding_field(circle.view(), spec);
        auto m = mollify(w, eps);
        // the sampled kernel sums to one, so the discrete integral (masked nodes included) is preserved
        GridField all = w;
        std::fill(all.mask.begin(), all.mask.end(), 0);
        EXPECT_NEAR(field_integral(m), field_integral(all), 1e-10);
        EXPECT_NEAR(field_integral(m), area, 2 * spec.h * kTwoPi);
        // cell means are exact along x, leaving only the sub-row quadrature in y
        auto c = mollified_field_convolution(circle.view(), eps, spec);
        EXPECT_NEAR(field_integral(c), area, 1e-4);
    }
}

TEST(MollifiedField, DirectAndConvolutionRoutesAgree) {
    // the 64-gon traversed with 16 steps per side, so the midpoint sums resolve the kernel scale
    auto circle = subdivided(test::polygon_circle(64, 1.0), 16);
    double eps = 0.1;
    GridOptions opt;
    opt.h = eps / 8;
    auto spec = grid_for_loop(circle.view(), eps, 1.0, opt);
    auto conv = mollified_field_convolution(circle.view(), eps, spec);
    auto direct = mollified_field_direct(circle.view(), eps, spec);
    double diff = 0;
    for (std::size_t k = 0; k < spec.size(); ++k) diff = std::max(diff, std::abs(conv.values[k] - direct.values[k]));
    EXPECT_LE(diff, 1e-2 * sup_abs(direct.values));
    RecordProperty("max_abs_diff", std::to_string(diff));
}

TEST(MollifiedField, DirectRouteSquareAndSupport) {
    auto sq = test::polygon_square_fine(0.5, 2000);
    double eps = 0.05;
    GridSpec probe{{0.0, 0.0}, 1.0, 1, 1};
    EXPECT_NEAR(mollified_field_direct(sq.view(), eps, probe).values[0], 1.0, 1e-3);
    GridSpec far{{1.5, 0.2}, 1.0, 1, 1};
    EXPECT_NEAR(mollified_field_direct(sq.view(), eps, far).values[0], 0.0, 1e-6);
}

TEST(MollifiedField, DirectRouteAdditivity) {
    auto path = sample_brownian(1.0, 128, 321);
    auto pts = path.points();
    std::vector<Point> first(pts.begin(), pts.begin() + 65), second(pts.begin() + 64, pts.end());
    Triangle tri{pts[0], pts[64], pts[128]};
    double eps = 0.1;
    GridOptions opt;
    opt.h = 0.05;
    auto spec = grid_for_loop(LoopView{pts}, eps, 1.0, opt);
    auto whole = mollified_field_direct(LoopView{pts}, eps, spec);
    auto sum = mollified_field_direct(LoopView{first}, eps, spec);
    add_in_place(sum, mollified_field_direct(LoopView{second}, eps, spec));
    add_in_place(sum, triangle_field_direct(tri, eps, spec));
    for (std::size_t k = 0; k < spec.size(); ++k) EXPECT_NEAR(sum.values[k], whole.values[k], 1e-12);
}

TEST(MollifiedField, ConvolutionAdditivity) {
    auto path = sample_brownian(1.0, 256, 11);
    auto pts = path.points();
    std::vector<Point> first(pts.begin(), pts.begin() + 129), second(pts.begin() + 128, pts.end());
    Triangle tri{pts[0], pts[128], pts[256]};
    double eps = 0.05;
    auto spec = grid_for_loop(LoopView{pts}, eps, 1.0, {});
    auto whole = mollified_field_convolution(LoopView{pts}, eps, spec);
    auto sum = mollified_field_convolution(LoopView{first}, eps, spec);
    add_in_place(sum, mollified_field_convolution(LoopView{second}, eps, spec));
    add_in_place(sum, triangle_field_convolution(tri, eps, spec));
    for (std::size_t k = 0; k < spec.size(); ++k) EXPECT_NEAR(sum.values[k], whole.values[k], 1e-12);
}

TEST(MollifiedField, CompactSupport) {
    auto path = sample_brownian(1.0, 256, 8);
    double eps = 0.1;
    auto spec = grid_for_loop(LoopView{path.points()}, eps, 1.0, {});
    auto m = mollified_field_convolution(LoopView{path.points()}, eps, spec);
    double sup = 0;
    for (Point p : path.points()) sup = std::max(sup, norm(p));
    for (std::size_t j = 0; j < spec.ny; ++j)
        for (std::size_t i = 0; i < spec.nx; ++i)
            if (norm(spec.node(i, j)) > sup + eps + 2 * spec.h) EXPECT_NEAR(m.at(i, j), 0.0, 1e-12);
}

// ---- inner products ----

TEST(InnerProduct, Examples) {
    auto circle = test::polygon_circle(256, 1.0);
    auto spec = square_grid(1.28, 256);
    auto w = winding_field(circle.view(), spec);
    EXPECT_NEAR(field_inner_product(w, w), kPi, 2 * spec.h * kTwoPi);
    GridField zero(spec);
    EXPECT_EQ(field_inner_product(zero, w), 0.0);

    auto path = sample_brownian(1.0, 256, 17);
    auto other = sample_brownian(1.0, 256, 18);
    std::array<std::span<const Point>, 2> both{path.points(), other.points()};
    auto shared = grid_for_points(both, 0.1, 1.0, {});
    auto f = mollified_field_convolution(LoopView{path.points()}, 0.1, shared);
    auto g = mollified_field_convolution(LoopView{other.points()}, 0.1, shared);
    EXPECT_EQ(field_inner_product(f, g), field_inner_product(g, f));
    try {
        field_inner_product(f, w);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Shape);
    }
}

// ---- grids and export ----

TEST(Grid, CoversInflatedBoxAndHonoursCap) {
    auto circle = test::polygon_circle(32, 1.0);
    GridOptions opt;
    opt.jitter = {0.25, 0.75};
    auto spec = grid_for_loop(circle.view(), 0.1, 2.0, opt);
    EXPECT_DOUBLE_EQ(spec.h, 0.1 / 6);
    EXPECT_LE(spec.origin.x, -1.0 - 0.2 - 4 * spec.h);
    EXPECT_GE(spec.x(spec.nx - 1), 1.0 + 0.2 + 4 * spec.h);
    EXPECT_GE(spec.y(spec.ny - 1), 1.0 + 0.2 + 4 * spec.h);
    opt.max_nodes = 1000;
    try {
        grid_for_loop(circle.view(), 0.1, 1.0, opt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Resolution);
    }
    opt.jitter = {1.0, 0.0};
    EXPECT_THROW(grid_for_loop(circle.view(), 0.1, 1.0, opt), Error);
}

TEST(FieldIo, RoundTrip) {
    auto circle = test::polygon_circle(32, 1.0);
    auto spec = square_grid(1.5, 30);
    auto f = mollified_field_convolution(circle.view(), 0.3, spec);
    auto dir = std::filesystem::temp_directory_path() / "amperean_field_io";
    std::filesystem::create_directories(dir);
    write_field_binary(f, dir / "f.bin");
    EXPECT_EQ(std::filesystem::file_size(dir / "f.bin"), 4u + 4u + 3 * 8u + 2 * 8u + spec.size() * 8u);
    auto g = read_field_binary(dir / "f.bin");
    EXPECT_EQ(g.spec, f.spec);
    EXPECT_EQ(g.values, f.values);
    write_field_text(f, dir / "f.txt");
    write_level_sets_csv(level_set_areas(winding_field(circle.view(), spec), 2), dir / "levels.csv");
    EXPECT_GT(std::filesystem::file_size(dir / "f.txt"), spec.size());
    EXPECT_GT(std::filesystem::file_size(dir / "levels.csv"), 20u);
    EXPECT_THROW(read_field_binary(dir / "levels.csv"), Error);
    std::filesystem::remove_all(dir);
}
