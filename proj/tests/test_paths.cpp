#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "amperean/paths.hpp"
#include "amperean/rng.hpp"

using namespace amperean;

// ---- counter-based generator ----

TEST(Philox, KnownAnswerVectors) {
    auto zero = rng::philox4x32({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(zero, (rng::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    auto ones = rng::philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(ones, (rng::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    auto pi = rng::philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(pi, (rng::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, NormalQuantile) {
    EXPECT_NEAR(rng::normal_quantile(0.5), 0.0, 1e-15);
    EXPECT_NEAR(rng::normal_quantile(0.975), 1.959963984540054, 1e-12);
    EXPECT_NEAR(rng::normal_quantile(1e-10), -6.361340902404056, 1e-9);
}

TEST(Philox, DerivedSeedsDiffer) {
    EXPECT_NE(rng::derive_seed(1, 0), rng::derive_seed(1, 1));
    EXPECT_NE(rng::derive_seed(1, 0), rng::derive_seed(2, 0));
    EXPECT_NE(rng::derive_seed(1, 0, 0), rng::derive_seed(1, 0, 1));
    EXPECT_EQ(rng::derive_seed(7, 3), rng::derive_seed(7, 3));
}

// ---- sampling ----

TEST(SampleBrownian, ConstructionAndValidation) {
    auto p = sample_brownian(1.0, 2, 11);
    EXPECT_EQ(p.size(), 3u);
    EXPECT_EQ(p.times()[0], 0.0);
    EXPECT_EQ(p.times()[2], 1.0);
    EXPECT_EQ(p.start(), (Point{0, 0}));
    EXPECT_THROW(sample_brownian(1.0, 3, 1), Error);
    EXPECT_THROW(sample_brownian(1.0, 1, 1), Error);
    EXPECT_THROW(sample_brownian(0.0, 4, 1), Error);
    auto q = sample_brownian(1.0, 8, 11, {2.0, -1.0});
    EXPECT_EQ(q.start(), (Point{2.0, -1.0}));
}

TEST(SampleBrownian, Reproducible) {
    auto a = sample_brownian(1.0, 1024, 99);
    auto b = sample_brownian(1.0, 1024, 99);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.points()[i], b.points()[i]);
}

TEST(SampleBrownian, ScalingWithSharedNormals) {
    auto big = sample_brownian(4.0, 4, 5);
    auto unit = sample_brownian(1.0, 4, 5);
    for (std::size_t i = 0; i < big.size(); ++i) {
        EXPECT_EQ(big.points()[i].x, 2.0 * unit.points()[i].x);
        EXPECT_EQ(big.points()[i].y, 2.0 * unit.points()[i].y);
    }
}

TEST(SampleBrownian, EndpointVariance) {
    const int n = 100000;
    double sum = 0, sum2 = 0, sum4 = 0;
    for (int s = 0; s < n; ++s) {
        double x = sample_brownian(1.0, 2, rng::derive_seed(2024, s)).end().x;
        sum += x;
        sum2 += x * x;
        sum4 += x * x * x * x;
    }
    double var = sum2 / n - (sum / n) * (sum / n);
    double se = std::sqrt((sum4 / n - (sum2 / n) * (sum2 / n)) / n);
    EXPECT_NEAR(var, 1.0, 3 * se);
}

TEST(SampleBrownian, IncrementLaw) {
    const int samples = 400;
    const std::size_t steps = 256;
    double dt = 1.0 / steps;
    double sum = 0, sum2 = 0, sum4 = 0;
    std::size_t count = 0;
    for (int s = 0; s < samples; ++s) {
        auto p = sample_brownian(1.0, steps, rng::derive_seed(77, s));
        for (std::size_t i = 0; i < steps; ++i) {
            for (double d : {p.points()[i + 1].x - p.points()[i].x, p.points()[i + 1].y - p.points()[i].y}) {
                sum += d;
                sum2 += d * d;
                sum4 += d * d * d * d;
                ++count;
            }
        }
    }
    double n = static_cast<double>(count);
    double mean = sum / n;
    double var = sum2 / n;
    EXPECT_NEAR(mean, 0.0, 4 * std::sqrt(dt / n));
    EXPECT_NEAR(var, dt, 4 * std::sqrt((sum4 / n - var * var) / n));
}

// ---- refinement ----

TEST(RefineDyadic, KeepsExistingPoints) {
    auto p = sample_brownian(1.0, 2, 3);
    auto r = refine_dyadic(p, 3);
    ASSERT_EQ(r.steps(), 4u);
    EXPECT_EQ(r.points()[0], p.points()[0]);
    EXPECT_EQ(r.points()[2], p.points()[1]);
    EXPECT_EQ(r.points()[4], p.points()[2]);
    EXPECT_DOUBLE_EQ(r.times()[2], 0.5);
    auto rr = refine_dyadic(r, 3);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(rr.points()[4 * i], p.points()[i]);
}

TEST(RefineDyadic, MatchesDirectSamplingAtFinerLevel) {
    auto coarse = sample_brownian(1.0, 64, 41);
    auto fine = sample_brownian(1.0, 128, 41);
    auto refined = refine_dyadic(coarse, 41);
    for (std::size_t i = 0; i < fine.size(); ++i) EXPECT_EQ(refined.points()[i], fine.points()[i]);
}

TEST(RefineDyadic, BridgeVariance) {
    const int n = 40000;
    double sum2 = 0, sum4 = 0;
    for (int s = 0; s < n; ++s) {
        auto seed = rng::derive_seed(8, s);
        auto r = refine_dyadic(sample_brownian(2.0, 2, seed), seed);
        double dev = r.points()[1].x - 0.5 * (r.points()[0].x + r.points()[2].x);
        sum2 += dev * dev;
        sum4 += dev * dev * dev * dev;
    }
    double var = sum2 / n;
    // coarse step 1.0, bridge variance 1/4
    EXPECT_NEAR(var, 0.25, 3 * std::sqrt((sum4 / n - var * var) / n));
}

// ---- restriction and closure ----

TEST(Restrict, TrivialAndPartition) {
    auto p = sample_brownian(1.0, 16, 2);
    auto whole = restrict_path(p, {0, 1});
    ASSERT_EQ(whole.size(), p.size());
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(whole.points()[i], p.points()[i]);

    auto left = restrict_path(p, {1, 1});
    auto right = restrict_path(p, {1, 2});
    EXPECT_EQ(left.size() + right.size() - 1, p.size());
    for (std::size_t i = 0; i < left.size(); ++i) EXPECT_EQ(left.points()[i], p.points()[i]);
    for (std::size_t i = 0; i < right.size(); ++i) EXPECT_EQ(right.points()[i], p.points()[i + 8]);
    EXPECT_DOUBLE_EQ(right.duration(), 0.5);
    EXPECT_EQ(right.times()[0], 0.0);
}

TEST(Restrict, ContinuityAndErrors) {
    auto p = sample_brownian(1.0, 32, 9);
    for (std::uint64_t j = 2; j <= 8; ++j) EXPECT_EQ(restrict_path(p, {3, j}).start(), restrict_path(p, {3, j - 1}).end());
    EXPECT_THROW(restrict_path(p, {6, 1}), Error);
    try {
        restrict_path(p, {6, 1});
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Resolution);
    }
    EXPECT_THROW(DyadicIndex(2, 5), Error);
    EXPECT_THROW(DyadicIndex(2, 0), Error);
    DyadicIndex idx(2, 3);
    EXPECT_EQ(idx.minus(), DyadicIndex(3, 5));
    EXPECT_EQ(idx.plus(), DyadicIndex(3, 6));
}

TEST(Restrict, DyadicConsistencyUnderRefinement) {
    auto p = sample_brownian(1.0, 8, 21);
    auto r = refine_dyadic(p, 21);
    auto a = restrict_path(p, {2, 3});
    auto b = restrict_path(r, {2, 3});
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(b.points()[2 * i], a.points()[i]);
}

TEST(CloseLoop, Segments) {
    PlanarPath line({0.0, 1.0}, {{0, 0}, {1, 0}});
    auto loop = close_loop(line);
    EXPECT_EQ(loop.closing_from(), (Point{1, 0}));
    EXPECT_EQ(loop.closing_to(), (Point{0, 0}));
    PlanarPath closed({0.0, 1.0, 2.0}, {{0, 0}, {1, 0}, {0, 0}});
    auto c = close_loop(closed);
    EXPECT_EQ(c.closing_from(), c.closing_to());
}

TEST(PathIo, BinaryAndCsvRoundTrip) {
    auto p = sample_brownian(2.0, 64, 4);
    auto dir = std::filesystem::temp_directory_path() / "amperean_path_io";
    std::filesystem::create_directories(dir);
    write_path_binary(p, dir / "p.bin");
    EXPECT_EQ(std::filesystem::file_size(dir / "p.bin"), 4u + 8u + 65u * 16u);
    auto q = read_path_binary(dir / "p.bin");
    ASSERT_EQ(q.size(), p.size());
    EXPECT_EQ(q.duration(), 2.0);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(q.points()[i], p.points()[i]);
    write_path_csv(p, dir / "p.csv");
    EXPECT_GT(std::filesystem::file_size(dir / "p.csv"), 100u);
    EXPECT_THROW(read_path_binary(dir / "missing.bin"), Error);
    std::filesystem::remove_all(dir);
}
