#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "amperean/estimators.hpp"
#include "amperean/rng.hpp"
#include "test_support.hpp"

using namespace amperean;

TEST(Self, UnitCircleIsPi) {
    auto c = test::polygon_circle(2048, 1.0);
    auto e = amperean_self(c.base(), 0.02);
    EXPECT_NEAR(e.value, kPi, 0.01 * kPi);
    EXPECT_EQ(e.route, Route::Grid);
}

TEST(Self, DoubledCircleIsFourPi) {
    auto c = test::polygon_circle(2048, 1.0, {0.3, -0.2}, 2);
    EXPECT_NEAR(amperean_self(c.base(), 0.02).value, 4 * kPi, 0.04 * kPi);
}

TEST(Self, OrientationDoesNotMatter) {
    auto a = test::polygon_circle(1024, 0.7, {0, 0}, 1);
    auto b = test::polygon_circle(1024, 0.7, {0, 0}, -1);
    EXPECT_NEAR(amperean_self(a.base(), 0.05).value, amperean_self(b.base(), 0.05).value, 1e-9);
}

TEST(Self, ResolutionWarning) {
    auto w = sample_brownian(1.0, 64, 5);
    Resolution r;
    EXPECT_TRUE(amperean_self(w, 0.05, r).resolution_warning);
    r.h = 0.05 / 2;
    auto fine = sample_brownian(1.0, 1024, 5);
    EXPECT_TRUE(amperean_self(fine, 0.05, r).resolution_warning);
    EXPECT_FALSE(amperean_self(fine, 0.1).resolution_warning);
}

TEST(Cross, DisjointLoopsVanish) {
    auto a = test::polygon_circle(512, 0.5, {0, 0});
    auto b = test::polygon_circle(512, 0.5, {3, 0});
    EXPECT_NEAR(amperean_cross(a.base(), b.base(), 0.1, 0.1, Route::Grid).value, 0.0, 1e-12);
    EXPECT_NEAR(amperean_cross(a.base(), b.base(), 0.1, 0.1, Route::StratIterated).value, 0.0, 1e-6);
}

TEST(Cross, ConcentricCirclesGiveInnerArea) {
    auto a = test::polygon_circle(2048, 1.0);
    auto b = test::polygon_circle(2048, 0.5);
    double exact = kPi * 0.25;
    EXPECT_NEAR(amperean_cross(a.base(), b.base(), 0.02, 0.02, Route::Grid).value, exact, 0.01 * exact);
    EXPECT_NEAR(amperean_cross(a.base(), b.base(), 0.02, 0.02, Route::StratIterated).value, exact, 0.01 * exact);
}

TEST(Cross, RoutesAgreeOnBrownianPair) {
    for (std::uint64_t s = 0; s < 3; ++s) {
        auto W = sample_brownian(1.0, 1024, rng::derive_seed(91, s, 0));
        auto W2 = sample_brownian(1.0, 1024, rng::derive_seed(91, s, 1));
        auto r = amperean_cross_all(W, W2, 0.2, 0.2);
        double scale = std::sqrt(r.self_w * r.self_w2);
        ASSERT_GT(scale, 0);
        EXPECT_LT(std::abs(r.grid.value - r.strat.value) / scale, 0.05) << s;
        EXPECT_LT(std::abs(r.ito.value - r.strat.value) / scale, 0.05) << s;
        EXPECT_GE(r.intersection, 0.0);
        EXPECT_NEAR(amperean_cross(W, W2, 0.2, 0.2, Route::Grid).value, r.grid.value, 1e-12);
    }
}

TEST(Cross, SymmetricInTheLoops) {
    auto W = sample_brownian(1.0, 512, 11);
    auto W2 = sample_brownian(1.0, 512, 12);
    double a = amperean_cross(W, W2, 0.2, 0.15, Route::Grid).value;
    double b = amperean_cross(W2, W, 0.15, 0.2, Route::Grid).value;
    EXPECT_NEAR(a, b, 1e-12 * (1 + std::abs(a)));
}

TEST(Cross, RejectsNonPositiveEps) {
    auto W = sample_brownian(1.0, 64, 1);
    EXPECT_THROW(amperean_cross(W, W, 0.0, 0.1, Route::Grid), Error);
    EXPECT_THROW(amperean_self(W, -1.0), Error);
}

TEST(Routes, NamesRoundTrip) {
    for (Route r : {Route::Grid, Route::StratIterated, Route::ItoMinusLocalTime}) EXPECT_EQ(parse_route(route_name(r)), r);
    try {
        parse_route("spectral");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Config);
    }
}

TEST(Dyadic, LevelZeroIsTheWholeLoop) {
    auto W = sample_brownian(1.0, 256, 21);
    auto d = dyadic_decomposition(W, 0, 0.15);
    ASSERT_EQ(d.leaves.size(), 1u);
    EXPECT_TRUE(d.terms.empty());
    EXPECT_EQ(d.residual, 0.0);
    EXPECT_NEAR(d.total, amperean_self(W, 0.15).value, 1e-12 * d.total);
}

TEST(Dyadic, IdentityHoldsToRounding) {
    auto W = sample_brownian(1.0, 1024, 22);
    for (unsigned m : {1u, 3u}) {
        auto d = dyadic_decomposition(W, m, 0.12);
        EXPECT_EQ(d.leaves.size(), std::size_t{1} << m);
        EXPECT_EQ(d.terms.size(), (std::size_t{1} << m) - 1);
        EXPECT_LT(d.relative_residual(), 1e-12) << m;
    }
}

TEST(Dyadic, RejectsIndivisibleSteps) {
    std::vector<double> t{0, 1, 2};
    std::vector<Point> p{{0, 0}, {1, 0}, {0, 1}};
    PlanarPath w(t, p);
    try {
        dyadic_decomposition(w, 2, 0.1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Resolution);
    }
}

TEST(Dyadic, LeafSumMatchesDecompositionLeaves) {
    auto W = sample_brownian(1.0, 512, 23);
    auto d = dyadic_decomposition(W, 2, 0.1);
    double own = leaf_sum(W, 2, 0.1);
    double shared = 0;
    for (double a : d.leaves) shared += a;
    // own grids differ from the shared grid only by sampling
    EXPECT_NEAR(own, shared, 0.02 * shared);
}

TEST(Dyadic, TriangleTermMatchesSharedGrid) {
    auto W = sample_brownian(1.0, 256, 24);
    auto d = dyadic_decomposition(W, 1, 0.1);
    EXPECT_NEAR(triangle_term(W, {0, 1}, 0.1), d.terms[0].T, 0.02 * d.terms[0].T);
}

TEST(Accumulator, MergeMatchesSequential) {
    std::mt19937_64 g(4);
    std::gamma_distribution<double> gam(2.0, 1.5);
    std::vector<double> xs(1000);
    for (double& x : xs) x = gam(g);
    MCAccumulator all, a, b;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        all.add(xs[i]);
        (i < 377 ? a : b).add(xs[i]);
    }
    a.merge(b);
    EXPECT_EQ(a.count(), all.count());
    EXPECT_NEAR(a.mean(), all.mean(), 1e-12 * all.mean());
    EXPECT_NEAR(a.variance(), all.variance(), 1e-10 * all.variance());
    EXPECT_NEAR(a.variance_se(), all.variance_se(), 1e-9 * all.variance_se());
}

TEST(Accumulator, VarianceSeForGaussian) {
    std::mt19937_64 g(8);
    std::normal_distribution<double> n(0, 2);
    MCAccumulator acc;
    for (int i = 0; i < 200000; ++i) acc.add(n(g));
    // Var of the sample variance is 2 sigma^4 / n for a Gaussian
    EXPECT_NEAR(acc.variance_se(), std::sqrt(2 * 16.0 / 200000), 0.03 * std::sqrt(2 * 16.0 / 200000));
}

TEST(ExpMomentTest, ZeroBetaIsOne) {
    std::vector<double> xs{1, 5, -3, 20};
    auto m = exp_moment(xs, 0.0, 1.0);
    EXPECT_EQ(m.estimate, 1.0);
    EXPECT_EQ(m.se, 0.0);
}

TEST(ExpMomentTest, ClampAndTailFlags) {
    std::vector<double> xs(100, 0.0);
    xs[3] = 1e6;
    auto m = exp_moment(xs, 1.0, 1.0);
    EXPECT_EQ(m.clamped, 1u);
    EXPECT_TRUE(m.unstable);
    EXPECT_TRUE(std::isfinite(m.estimate));
}

TEST(ExpMomentTest, GaussianMgf) {
    std::mt19937_64 g(3);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> xs(100000);
    for (double& x : xs) x = n(g);
    auto m = exp_moment(xs, 0.5, 1.0);
    EXPECT_NEAR(m.estimate, std::exp(0.125), 4 * m.se);
    EXPECT_FALSE(m.unstable);
}

TEST(Fit, RecoversSlopeUnderCommonNoise) {
    std::vector<double> eps{0.25, 0.125, 0.0625, 0.03125};
    std::mt19937_64 g(5);
    std::normal_distribution<double> n(0, 1);
    std::vector<std::vector<double>> vals(4000);
    for (auto& row : vals) {
        double shared = n(g);
        for (double e : eps) row.push_back(0.7 + 0.4 * std::log(1 / e) + shared + 0.05 * n(g));
    }
    auto fit = fit_counterterm(1.0, eps, vals);
    EXPECT_NEAR(fit.slope, 0.4, 4 * fit.slope_se);
    EXPECT_NEAR(fit.intercept, 0.7, 4 * fit.intercept_se);
    // the shared term cancels in the slope
    EXPECT_LT(fit.slope_se, 0.2 * fit.slope_se_naive);
}

TEST(Fit, ValidatesEpsList) {
    std::vector<double> three{0.3, 0.2, 0.1};
    std::vector<double> unsorted{0.3, 0.1, 0.2, 0.05};
    for (auto* l : {&three, &unsorted}) {
        try {
            counterterm_fit(1.0, *l, 10, 1);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::Config);
        }
    }
}

TEST(Fit, SamplesAreReproducibleAndIndexed) {
    std::vector<double> eps{0.4, 0.3, 0.2, 0.15};
    auto all = counterterm_samples(1.0, eps, 0, 4, 77);
    auto tail = counterterm_samples(1.0, eps, 2, 2, 77);
    EXPECT_EQ(all[2], tail[0]);
    EXPECT_EQ(all[3], tail[1]);
    EXPECT_EQ(counterterm_steps(1.0, eps), steps_for_dt(1.0, 0.25 * 0.15 * 0.15));
}

TEST(Cutoff, ZeroAndFullTruncation) {
    auto W = sample_brownian(1.0, 2048, 31);
    auto W2 = sample_brownian(1.0, 2048, 32);
    std::array<std::span<const Point>, 2> sets{W.points(), W2.points()};
    GridOptions o;
    o.h = 0.01;
    GridSpec spec = grid_for_points(sets, 0.01, 1.0, o);
    auto a = winding_field(LoopView{W.points()}, spec);
    auto b = winding_field(LoopView{W2.points()}, spec);
    auto zero = cutoff_sums(a, b, 0, 0);
    EXPECT_EQ(zero.cross, 0.0);
    EXPECT_EQ(zero.self_w, 0.0);
    int big = zero.max_winding;
    auto full = cutoff_sums(a, b, big, big);
    EXPECT_DOUBLE_EQ(full.cross, field_inner_product(a, b));
    EXPECT_DOUBLE_EQ(full.self_w, field_inner_product(a, a));
    EXPECT_DOUBLE_EQ(full.self_w2, field_inner_product(b, b));
    auto via_path = cutoff_sums(W, W2, spec, 1, 2);
    auto direct = cutoff_sums(a, b, 1, 2);
    EXPECT_EQ(via_path.cross, direct.cross);
}

TEST(Cutoff, MonotoneSelfSums) {
    auto W = sample_brownian(1.0, 2048, 33);
    GridOptions o;
    o.h = 0.01;
    GridSpec spec = grid_for_loop(LoopView{W.points()}, 0.01, 1.0, o);
    auto a = winding_field(LoopView{W.points()}, spec);
    double prev = 0;
    for (int k = 0; k <= 5; ++k) {
        double s = cutoff_sums(a, a, k, k).self_w;
        EXPECT_GE(s, prev);
        prev = s;
    }
}

TEST(Jitter, InUnitSquareAndDeterministic) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        Vec2 j = seed_jitter(s, 3);
        EXPECT_GE(j.x, 0);
        EXPECT_LT(j.x, 1);
        EXPECT_GE(j.y, 0);
        EXPECT_LT(j.y, 1);
        EXPECT_EQ(j, seed_jitter(s, 3));
    }
    EXPECT_NE(seed_jitter(1, 0), seed_jitter(1, 1));
}

TEST(Output, CsvAndJson) {
    auto W = sample_brownian(1.0, 256, 41);
    std::vector<AmpereanEstimate> rows{amperean_self(W, 0.2, {}, 41)};
    auto file = std::filesystem::temp_directory_path() / "amperean_est.csv";
    write_estimates_csv(rows, file);
    std::ifstream in(file);
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    EXPECT_EQ(header, "route,epsilon,epsilon2,h,dt,value,seed");
    EXPECT_EQ(line.substr(0, 5), "grid,");
    EXPECT_NE(line.find(",41"), std::string::npos);
    std::filesystem::remove(file);
    EXPECT_NE(estimate_json(rows[0]).find("\"route\":\"grid\""), std::string::npos);
}
