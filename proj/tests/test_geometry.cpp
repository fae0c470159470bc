#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "amperean/geometry.hpp"
#include "amperean/mollifier.hpp"
#include "amperean/rng.hpp"
#include "test_support.hpp"

using namespace amperean;

// ---- orientation predicate ----

TEST(Orient2d, Basic) {
    EXPECT_EQ(orient2d({0, 0}, {1, 0}, {0, 1}), 1);
    EXPECT_EQ(orient2d({0, 0}, {0, 1}, {1, 0}), -1);
    EXPECT_EQ(orient2d({0, 0}, {1, 1}, {2, 2}), 0);
}

TEST(Orient2d, NearlyCollinearIsExact) {
    // points on the line y = x perturbed by one ulp; the naive determinant is unreliable here
    Point a{0.5, 0.5};
    Point b{12.0, 12.0};
    Point on{24.0, 24.0};
    EXPECT_EQ(orient2d(a, b, on), 0);
    Point above{0.5, std::nextafter(0.5, 1.0)};
    EXPECT_EQ(orient2d(b, on, above), 1);
    Point below{0.5, std::nextafter(0.5, 0.0)};
    EXPECT_EQ(orient2d(b, on, below), -1);
    // consistency under permutation
    for (int k = 0; k < 200; ++k) {
        Point c{0.5 + k * 1e-17, 0.5};
        int s = orient2d(a, b, c);
        EXPECT_EQ(orient2d(b, c, a), s);
        EXPECT_EQ(orient2d(b, a, c), -s);
    }
}

// ---- winding numbers ----

TEST(WindingNumber, CircleExamples) {
    auto circle = test::polygon_circle(64, 1.0);
    EXPECT_EQ(winding_number(circle.view(), {0, 0}), 1);
    EXPECT_EQ(winding_number(circle.view(), {2, 0}), 0);
    auto twice = test::polygon_circle(64, 1.0, {0, 0}, 2);
    EXPECT_EQ(winding_number(twice.view(), {0, 0}), 2);
    auto cw = test::polygon_circle(64, 1.0, {0, 0}, -1);
    EXPECT_EQ(winding_number(cw.view(), {0.1, -0.2}), -1);
}

TEST(WindingNumber, OnCurveRejected) {
    auto circle = test::polygon_circle(4, 1.0);
    try {
        winding_number(circle.view(), {1, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OnCurve);
    }
    EXPECT_THROW(winding_number(circle.view(), {0.5, 0.5}), Error);
}

TEST(WindingNumber, ReversalAndRotation) {
    auto path = sample_brownian(1.0, 256, 31);
    std::vector<Point> pts(path.points().begin(), path.points().end());
    std::vector<Point> rev(pts.rbegin(), pts.rend());
    std::vector<Point> rot(pts);
    std::rotate(rot.begin(), rot.begin() + 97, rot.end());
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 500; ++k) {
        Point z{u(gen), u(gen)};
        int w = winding_number(LoopView{pts}, z);
        EXPECT_EQ(winding_number(LoopView{rev}, z), -w);
        EXPECT_EQ(winding_number(LoopView{rot}, z), w);
    }
}

TEST(WindingNumber, AdditivityOverConcatenation) {
    auto path = sample_brownian(1.0, 128, 77);
    auto pts = path.points();
    std::vector<Point> first(pts.begin(), pts.begin() + 65);
    std::vector<Point> second(pts.begin() + 64, pts.end());
    Triangle tri{pts[0], pts[64], pts[128]};
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 2000; ++k) {
        Point z{u(gen), u(gen)};
        int whole = winding_number(LoopView{pts}, z);
        int parts = winding_number(LoopView{first}, z) + winding_number(LoopView{second}, z) + triangle_winding(tri, z);
        EXPECT_EQ(whole, parts);
    }
}

TEST(EdgeCrossing, ExactlyAntisymmetricEvenOnEdge) {
    Point p{0.1, 0.3}, q{0.7, 1.9};
    for (Point z : {Point{0.1, 0.3}, Point{0.4, 1.1}, Point{0.0, 0.5}, Point{1.0, 0.5}, Point{0.7, 1.9}})
        EXPECT_EQ(edge_crossing(p, q, z), -edge_crossing(q, p, z));
}

// ---- triangles ----

TEST(Triangle, WindingExamples) {
    Triangle t{{0, 0}, {1, 0}, {0, 1}};
    EXPECT_EQ(triangle_winding(t, {0.2, 0.2}), 1);
    EXPECT_EQ(triangle_winding(t, {1, 1}), 0);
    Triangle flipped{{0, 0}, {0, 1}, {1, 0}};
    EXPECT_EQ(triangle_winding(flipped, {0.2, 0.2}), -1);
    EXPECT_THROW(triangle_winding(t, {0.5, 0.0}), Error);
}

TEST(Triangle, Area) {
    EXPECT_DOUBLE_EQ(triangle_area({{0, 0}, {1, 0}, {0, 1}}), 0.5);
    EXPECT_DOUBLE_EQ(triangle_area({{0, 0}, {1, 1}, {2, 2}}), 0.0);
    EXPECT_DOUBLE_EQ(triangle_area({{0, 0}, {2, 0}, {0, 2}}), 2.0);
    EXPECT_DOUBLE_EQ(triangle_area({{0, 0}, {0, 2}, {2, 0}}), 2.0);
}

// ---- segment integrals ----

TEST(SegmentIntegral, GradientField) {
    auto f = [](Point u) { return std::sin(u.x) * std::exp(u.y); };
    auto grad = [](Point u) { return Vec2{std::cos(u.x) * std::exp(u.y), std::sin(u.x) * std::exp(u.y)}; };
    Point p{-0.3, 0.2}, q{1.4, -0.7};
    EXPECT_NEAR(segment_integral(p, q, grad, 4), f(q) - f(p), 1e-13);
}

TEST(SegmentIntegral, ThetaAlongRadialLine) {
    EXPECT_NEAR(segment_integral({1, 1}, {3, 3}, [](Point u) { return theta(u); }), 0.0, 1e-16);
}

TEST(SegmentIntegral, ZeroLengthAndReversal) {
    auto field = [](Point u) { return theta_eps(u, 0.1); };
    EXPECT_EQ(segment_integral({0.3, 0.3}, {0.3, 0.3}, field), 0.0);
    Point p{1, 0}, q{0, 1};
    for (std::size_t panels : {1, 3, 16}) EXPECT_EQ(segment_integral(p, q, field, panels), -segment_integral(q, p, field, panels));
}

TEST(SegmentIntegral, SelfRefinement) {
    auto field = [](Point u) { return theta_eps(u, 0.1); };
    Point p{1, 0}, q{0, 1};
    double coarse = segment_integral(p, q, field, 8);
    double fine = segment_integral(p, q, field, 80);
    EXPECT_NEAR(coarse, fine, 1e-8);
    // quarter turn around the origin at distance >= 1/sqrt(2) > eps
    EXPECT_NEAR(fine, 0.25, 1e-12);
}
