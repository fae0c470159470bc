#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <unistd.h>

#include "amperean/campaigns.hpp"
#include "amperean/common.hpp"
#include "amperean/oracles.hpp"
#include "amperean/parallel.hpp"

using namespace amperean;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("amperean_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

Config small_decompose() {
    Config c;
    c.set("run.samples", "3");
    c.set("run.seed", "17");
    c.set("decompose.m", "2");
    c.set("decompose.eps", "0.3");
    c.set("decompose.scaling_levels", "1");
    return c;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Table, CsvRoundTripKeepsQuotingAndDigits) {
    Table t("t", {{"k", Table::Kind::Integer}, {"name", Table::Kind::Text}, {"v"}}, "k");
    t.add_row({std::int64_t{0}, std::string("plain"), 0.1});
    t.add_row({std::int64_t{1}, std::string("a,\"b\"\nc"), -1.0 / 3.0});
    fs::path dir = scratch("csv");
    fs::create_directories(dir);
    t.write_csv(dir / "t.csv");
    auto rows = read_csv(dir / "t.csv");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"k", "name", "v"}));
    EXPECT_EQ(rows[2][1], "a,\"b\"\nc");
    EXPECT_EQ(std::stod(rows[2][2]), -1.0 / 3.0);
    EXPECT_EQ(rows[1][2], format_real(0.1));
    fs::remove_all(dir);
}

TEST(Table, RejectsArityAndKindMismatch) {
    Table t("t", {{"k", Table::Kind::Integer}, {"v"}});
    EXPECT_EQ(code_of([&] { t.add_row({std::int64_t{0}}); }), ErrorCode::Shape);
    EXPECT_EQ(code_of([&] { t.add_row({std::string("x"), 1.0}); }), ErrorCode::Shape);
    EXPECT_EQ(code_of([&] { (void)t.column("missing"); }), ErrorCode::Shape);
}

TEST(Config, DefaultsAreRecordedAndUnknownKeysRejected) {
    Config c;
    c.set("a.x", "2.5");
    c.set("a.typo", "1");
    EXPECT_EQ(c.real("a.x", 0.0), 2.5);
    EXPECT_EQ(c.integer("a.n", 7), 7);
    EXPECT_TRUE(c.has("a.n"));
    EXPECT_EQ(c.reals("a.list", {1.0, 0.5}), (std::vector<double>{1.0, 0.5}));
    EXPECT_EQ(code_of([&] { c.reject_unread(); }), ErrorCode::Config);
    (void)c.text("a.typo", "");
    EXPECT_NO_THROW(c.reject_unread());
}

TEST(Config, MalformedNumbersAreConfigErrors) {
    Config c;
    c.set("a.x", "1.5abc");
    c.set("a.n", "3.2");
    EXPECT_EQ(code_of([&] { (void)c.real("a.x", 0.0); }), ErrorCode::Config);
    EXPECT_EQ(code_of([&] { (void)c.integer("a.n", 0); }), ErrorCode::Config);
}

TEST(Campaign, UnknownNameOrKeyIsConfigError) {
    EXPECT_EQ(code_of([] { run_campaign("nope", Config{}); }), ErrorCode::Config);
    Config c = small_decompose();
    c.set("decompose.bogus", "1");
    EXPECT_EQ(code_of([&] { run_campaign("decompose", c); }), ErrorCode::Config);
}

TEST(Campaign, ExplicitResolutionViolationIsResolutionError) {
    Config c = small_decompose();
    c.set("resolution.h", "0.2");
    EXPECT_EQ(code_of([&] { run_campaign("decompose", c); }), ErrorCode::Resolution);
    Config d = small_decompose();
    d.set("decompose.steps", "8");
    EXPECT_EQ(code_of([&] { run_campaign("decompose", d); }), ErrorCode::Resolution);
}

TEST(Campaign, DecomposeIdentityHolds) {
    CampaignResult r = run_campaign("decompose", small_decompose());
    ASSERT_FALSE(r.checks.empty());
    for (const auto& c : r.checks) EXPECT_TRUE(c.pass) << c.name << ": " << c.detail;
    EXPECT_TRUE(r.config.has("decompose.steps"));
    EXPECT_TRUE(r.config.has("mollifier.K"));
}

TEST(Campaign, RecomputedUnitsMatchTheFullRun) {
    CampaignResult r = run_campaign("decompose", small_decompose());
    std::vector<std::int64_t> pick{1};
    auto fresh = recompute_units("decompose", r.config, pick);
    const Table& full = r.tables[0];
    const Table& one = fresh[0];
    ASSERT_EQ(full.name(), one.name());
    std::size_t kc = full.column(full.key());
    std::size_t q = 0;
    for (std::size_t row = 0; row < full.rows(); ++row) {
        if (full.integer(row, kc) != 1) continue;
        ASSERT_LT(q, one.rows());
        for (std::size_t c = 0; c < full.columns().size(); ++c) EXPECT_EQ(full.format(row, c), one.format(q, c));
        ++q;
    }
    EXPECT_EQ(q, one.rows());
}

TEST(Campaign, ResultsDoNotDependOnThreadCount) {
    unsigned saved = thread_count();
    set_thread_count(1);
    CampaignResult a = run_campaign("decompose", small_decompose());
    set_thread_count(3);
    CampaignResult b = run_campaign("decompose", small_decompose());
    set_thread_count(saved);
    ASSERT_EQ(a.tables.size(), b.tables.size());
    for (std::size_t k = 0; k < a.tables.size(); ++k) {
        ASSERT_EQ(a.tables[k].rows(), b.tables[k].rows());
        for (std::size_t row = 0; row < a.tables[k].rows(); ++row)
            for (std::size_t c = 0; c < a.tables[k].columns().size(); ++c)
                EXPECT_EQ(a.tables[k].format(row, c), b.tables[k].format(row, c));
    }
    EXPECT_EQ(a.summary_json, b.summary_json);
}

TEST(Verify, FreshRunPassesAndTamperingIsDetected) {
    CampaignResult r = run_campaign("decompose", small_decompose());
    fs::path dir = scratch("verify");
    write_run(r, RunInfo{"2026-01-01T00:00:00Z", 1.0, 1, {"amplab", "decompose"}}, dir);
    EXPECT_TRUE(fs::exists(dir / "manifest.json"));
    EXPECT_TRUE(fs::exists(dir / "plots"));

    VerifyReport ok = verify_run(dir, 1.0);
    EXPECT_TRUE(ok.ok());
    EXPECT_EQ(ok.campaign, "decompose");
    EXPECT_EQ(ok.units_checked, 3u);
    EXPECT_GT(ok.rows_checked, 0u);

    auto rows = read_csv(dir / (r.tables[0].name() + ".csv"));
    ASSERT_GE(rows.size(), 2u);
    std::size_t last = rows[1].size() - 1;
    rows[1][last] = format_real(std::stod(rows[1][last]) * (1 + 1e-15) + 1e-300);
    {
        std::ofstream out(dir / (r.tables[0].name() + ".csv"), std::ios::binary);
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
            out << "\r\n";
        }
    }
    VerifyReport bad = verify_run(dir, 1.0);
    EXPECT_FALSE(bad.ok());
    fs::remove_all(dir);
}

TEST(Verify, MissingManifestIsIoError) {
    fs::path dir = scratch("empty");
    fs::create_directories(dir);
    EXPECT_EQ(code_of([&] { verify_run(dir); }), ErrorCode::Io);
    fs::remove_all(dir);
}

TEST(Campaign, SmoothLoopHasOneRowPerCase) {
    Config c;
    c.set("smoothloop.h", "0.01");
    CampaignResult r = run_campaign("smoothloop", c);
    EXPECT_EQ(r.tables[0].rows(), smooth_battery_size());
    EXPECT_FALSE(r.summary_json.empty());
}
