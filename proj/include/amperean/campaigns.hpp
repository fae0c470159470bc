#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace amperean {

const char* version_string();

class Table {
public:
    enum class Kind { Real, Integer, Text };
    struct Column {
        std::string name;
        Kind kind = Kind::Real;
    };
    using Cell = std::variant<double, std::int64_t, std::string>;

    Table() = default;
    // key: name of the column holding the unit (sample) index, empty if the table is derived.
    Table(std::string name, std::vector<Column> columns, std::string key = {});

    const std::string& name() const { return name_; }
    const std::string& key() const { return key_; }
    const std::vector<Column>& columns() const { return columns_; }
    std::size_t rows() const { return cells_.size(); }

    void add_row(std::vector<Cell> row);   // throws Shape on arity or kind mismatch
    void append(const Table& other);       // same columns required
    const Cell& cell(std::size_t r, std::size_t c) const { return cells_[r][c]; }
    double real(std::size_t r, std::size_t c) const;    // Integer cells convert
    std::int64_t integer(std::size_t r, std::size_t c) const;
    const std::string& text(std::size_t r, std::size_t c) const;
    std::size_t column(std::string_view name) const;     // throws Shape
    std::string format(std::size_t r, std::size_t c) const;

    // RFC-4180, header row, reals as %.17g.
    void write_csv(const std::filesystem::path& file) const;

private:
    std::string name_, key_;
    std::vector<Column> columns_;
    std::vector<std::vector<Cell>> cells_;
};

std::string format_real(double v);
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& file);

// Flat key/value configuration; INI sections become "section.key". Reads with a default
// record the default, so the map doubles as the resolved snapshot.
class Config {
public:
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

    std::string text(const std::string& key, const std::string& def);
    double real(const std::string& key, double def);
    std::int64_t integer(const std::string& key, std::int64_t def);
    bool flag(const std::string& key, bool def);
    std::vector<double> reals(const std::string& key, const std::vector<double>& def);
    std::vector<std::string> words(const std::string& key, const std::string& def);

    // Config error naming every key that no read has touched.
    void reject_unread() const;

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> read_;
};

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct PlotScript {
    std::string file;   // relative to plots/
    std::string text;
};

struct CampaignResult {
    std::string campaign;
    Config config;                  // resolved snapshot
    std::vector<Table> tables;      // keyed tables first, then derived ones
    std::string summary_json;
    std::vector<Check> checks;
    std::vector<PlotScript> plots;
};

const std::vector<std::string>& campaign_names();

// Throws Config for unknown campaigns or keys, Resolution for coupling violations.
CampaignResult run_campaign(const std::string& name, Config cfg);
// Keyed tables restricted to the given unit indices, recomputed from the resolved config.
std::vector<Table> recompute_units(const std::string& name, Config cfg, std::span<const std::int64_t> units);

struct RunInfo {
    std::string started;     // ISO-8601 UTC
    double seconds = 0.0;
    unsigned threads = 1;
    std::vector<std::string> command;
};

// manifest.json, one CSV per table and plots/*.plt under dir (created if missing).
void write_run(const CampaignResult& r, const RunInfo& info, const std::filesystem::path& dir);

struct VerifyReport {
    std::string campaign;
    std::size_t units_checked = 0;
    std::size_t rows_checked = 0;
    std::vector<std::string> diffs;
    std::vector<Check> checks;   // as recorded in the manifest
    bool ok() const { return diffs.empty(); }
};
// Re-runs a spot-check subset (fraction of the units of every keyed table, at least one)
// and compares the formatted cells with the CSV files.
VerifyReport verify_run(const std::filesystem::path& dir, double fraction = 0.01);

}  // namespace amperean
