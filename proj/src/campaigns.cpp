#include "amperean/campaigns.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>

#include "amperean/estimators.hpp"
#include "amperean/mollifier.hpp"
#include "amperean/oracles.hpp"
#include "amperean/parallel.hpp"
#include "amperean/rng.hpp"
#include "amperean/stochint.hpp"

#ifndef AMPEREAN_VERSION
#define AMPEREAN_VERSION "0.0.0"
#endif

namespace amperean {

using json = nlohmann::json;
using Kind = Table::Kind;

const char* version_string() { return AMPEREAN_VERSION; }

// ---- tables ----

Table::Table(std::string name, std::vector<Column> columns, std::string key)
    : name_(std::move(name)), key_(std::move(key)), columns_(std::move(columns)) {
    if (!key_.empty()) column(key_);
}

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size()) throw Error(ErrorCode::Shape, "row arity differs from table " + name_);
    for (std::size_t c = 0; c < row.size(); ++c)
        if (row[c].index() != static_cast<std::size_t>(columns_[c].kind))
            throw Error(ErrorCode::Shape, "cell kind mismatch in column " + columns_[c].name + " of " + name_);
    cells_.push_back(std::move(row));
}

void Table::append(const Table& other) {
    if (other.columns_.size() != columns_.size()) throw Error(ErrorCode::Shape, "appending a table with other columns");
    for (std::size_t c = 0; c < columns_.size(); ++c)
        if (other.columns_[c].name != columns_[c].name || other.columns_[c].kind != columns_[c].kind)
            throw Error(ErrorCode::Shape, "appending a table with other columns");
    cells_.insert(cells_.end(), other.cells_.begin(), other.cells_.end());
}

double Table::real(std::size_t r, std::size_t c) const {
    const Cell& x = cells_.at(r).at(c);
    if (auto* d = std::get_if<double>(&x)) return *d;
    if (auto* i = std::get_if<std::int64_t>(&x)) return static_cast<double>(*i);
    throw Error(ErrorCode::Shape, "text cell read as a number");
}

std::int64_t Table::integer(std::size_t r, std::size_t c) const {
    const Cell& x = cells_.at(r).at(c);
    if (auto* i = std::get_if<std::int64_t>(&x)) return *i;
    throw Error(ErrorCode::Shape, "cell is not an integer");
}

const std::string& Table::text(std::size_t r, std::size_t c) const {
    const Cell& x = cells_.at(r).at(c);
    if (auto* s = std::get_if<std::string>(&x)) return *s;
    throw Error(ErrorCode::Shape, "cell is not text");
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t c = 0; c < columns_.size(); ++c)
        if (columns_[c].name == name) return c;
    throw Error(ErrorCode::Shape, "no column '" + std::string(name) + "' in " + name_);
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string Table::format(std::size_t r, std::size_t c) const {
    const Cell& x = cells_.at(r).at(c);
    if (auto* d = std::get_if<double>(&x)) return format_real(*d);
    if (auto* i = std::get_if<std::int64_t>(&x)) return std::to_string(*i);
    return std::get<std::string>(x);
}

namespace {

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace

void Table::write_csv(const std::filesystem::path& file) const {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + file.string());
    for (std::size_t c = 0; c < columns_.size(); ++c) out << (c ? "," : "") << csv_quote(columns_[c].name);
    out << "\r\n";
    for (std::size_t r = 0; r < rows(); ++r) {
        for (std::size_t c = 0; c < columns_.size(); ++c) out << (c ? "," : "") << csv_quote(format(r, c));
        out << "\r\n";
    }
    if (!out) throw Error(ErrorCode::Io, "write failed for " + file.string());
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + file.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < data.size(); ++i) {
        char ch = data[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
            continue;
        }
        if (ch == '"') {
            quoted = true;
            any = true;
        } else if (ch == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (ch == '\r' || ch == '\n') {
            if (ch == '\r' && i + 1 < data.size() && data[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field += ch;
            any = true;
        }
    }
    if (quoted) throw Error(ErrorCode::Io, "unterminated quote in " + file.string());
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---- config ----

std::string Config::text(const std::string& key, const std::string& def) {
    read_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) {
        values_[key] = def;
        return def;
    }
    return it->second;
}

double Config::real(const std::string& key, double def) {
    std::string s = text(key, format_real(def));
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::Config, "key " + key + ": '" + s + "' is not a number");
    }
}

std::int64_t Config::integer(const std::string& key, std::int64_t def) {
    std::string s = text(key, std::to_string(def));
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::Config, "key " + key + ": '" + s + "' is not an integer");
    }
}

bool Config::flag(const std::string& key, bool def) {
    std::string s = text(key, def ? "true" : "false");
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw Error(ErrorCode::Config, "key " + key + ": '" + s + "' is not a boolean");
}

std::vector<std::string> Config::words(const std::string& key, const std::string& def) {
    std::string s = text(key, def);
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string w;
    while (std::getline(ss, w, ',')) {
        auto b = w.find_first_not_of(" \t"), e = w.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(w.substr(b, e - b + 1));
    }
    return out;
}

std::vector<double> Config::reals(const std::string& key, const std::vector<double>& def) {
    std::string d;
    for (std::size_t i = 0; i < def.size(); ++i) d += (i ? "," : "") + format_real(def[i]);
    std::vector<double> out;
    for (const std::string& w : words(key, d)) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(w, &pos));
            if (pos != w.size()) throw std::invalid_argument(w);
        } catch (const std::exception&) {
            throw Error(ErrorCode::Config, "key " + key + ": '" + w + "' is not a number");
        }
    }
    return out;
}

void Config::reject_unread() const {
    std::string bad;
    for (const auto& [k, v] : values_)
        if (!read_.count(k)) bad += (bad.empty() ? "" : ", ") + k;
    if (!bad.empty()) throw Error(ErrorCode::Config, "unknown configuration keys: " + bad);
}

// ---- campaigns ----

namespace {

using Row = std::vector<Table::Cell>;
using I = std::int64_t;

std::string seed_text(std::uint64_t s) { return std::to_string(s); }

struct Common {
    std::uint64_t seed = 1;
    std::size_t samples = 0;
    Resolution res;
    bool jitter = true;

    Resolution for_sample(std::uint64_t sample_seed, std::uint32_t tag) const {
        Resolution r = res;
        if (jitter) r.jitter = seed_jitter(sample_seed, tag);
        return r;
    }
};

Common read_common(Config& c, std::int64_t default_samples) {
    Common out;
    // CLI-level keys live in the snapshot but do not change any number
    c.text("run.tag", "");
    c.integer("run.threads", 0);
    out.seed = static_cast<std::uint64_t>(c.integer("run.seed", 1));
    std::int64_t n = c.integer("run.samples", default_samples);
    if (n < 1) throw Error(ErrorCode::Config, "run.samples must be positive");
    out.samples = static_cast<std::size_t>(n);
    if (c.text("mollifier.kind", "bump") != "bump") throw Error(ErrorCode::Config, "mollifier.kind: only 'bump' is available");
    out.res.K = c.real("mollifier.K", 1.0);
    if (!(out.res.K > 0)) throw Error(ErrorCode::Config, "mollifier.K must be positive");
    out.res.h = c.real("resolution.h", 0.0);
    out.res.dt = c.real("resolution.dt", 0.0);
    std::int64_t rows = c.integer("resolution.sub_rows", 8);
    if (rows < 1) throw Error(ErrorCode::Config, "resolution.sub_rows must be positive");
    out.res.sub_rows = static_cast<std::size_t>(rows);
    out.jitter = c.flag("resolution.jitter", true);
    return out;
}

void positive(double v, const std::string& what) {
    if (!(v > 0)) throw Error(ErrorCode::Config, what + " must be positive");
}

void positive_list(const std::vector<double>& v, const std::string& what) {
    if (v.empty()) throw Error(ErrorCode::Config, what + " is empty");
    for (double x : v) positive(x, what);
}

// explicit h, dt or step counts must respect h <= eps / 4 and dt <= eps^2 / 4
void check_coupling(const Resolution& res, double eps_min, double T, std::size_t steps) {
    if (res.h > 0 && res.h > 0.25 * eps_min)
        throw Error(ErrorCode::Resolution, "resolution.h = " + format_real(res.h) + " exceeds eps/4 for eps = " + format_real(eps_min));
    double dt_max = 0.25 * eps_min * eps_min;
    if (res.dt > 0 && res.dt > dt_max)
        throw Error(ErrorCode::Resolution, "resolution.dt = " + format_real(res.dt) + " exceeds eps^2/4 for eps = " + format_real(eps_min));
    if (steps > 0 && T / static_cast<double>(steps) > dt_max * (1 + 1e-12))
        throw Error(ErrorCode::Resolution, "step count " + std::to_string(steps) + " gives dt above eps^2/4 for eps = " + format_real(eps_min));
}

std::size_t resolve_steps(Config& c, const std::string& key, double T, double eps_min, const Resolution& res, std::size_t min_steps = 2) {
    std::int64_t s = c.integer(key, 0);
    if (s < 0) throw Error(ErrorCode::Config, key + " must be nonnegative");
    std::size_t steps = s > 0 ? static_cast<std::size_t>(s) : steps_for_dt(T, res.dt_for(eps_min));
    steps = std::max(steps, min_steps);
    check_coupling(res, eps_min, T, s > 0 ? steps : 0);
    return steps;
}

double min_of(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

class Campaign {
public:
    virtual ~Campaign() = default;
    virtual std::vector<Table> schema() const = 0;
    virtual std::vector<I> unit_ids() const = 0;
    virtual std::vector<Table> unit(I u) const = 0;   // same order as schema()
    virtual void finish(CampaignResult& r) const = 0;
};

std::vector<I> iota_ids(std::size_t n) {
    std::vector<I> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<I>(i);
    return v;
}

json checks_json(const std::vector<Check>& checks) {
    json a = json::array();
    for (const auto& c : checks) a.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    return a;
}

const char* kCsvPreamble = "set datafile separator ','\nset key autotitle columnhead\n";

// -- sample --

class SampleCampaign : public Campaign {
public:
    explicit SampleCampaign(Config& c) {
        com_ = read_common(c, 4);
        T_ = c.real("sample.T", 1.0);
        positive(T_, "sample.T");
        std::int64_t n = c.integer("sample.steps", 1024);
        if (n < 2) throw Error(ErrorCode::Config, "sample.steps must be at least 2");
        steps_ = static_cast<std::size_t>(n);
    }
    std::vector<Table> schema() const override {
        return {Table("paths", {{"sample", Kind::Integer}, {"seed", Kind::Text}, {"index", Kind::Integer}, {"t"}, {"x"}, {"y"}}, "sample")};
    }
    std::vector<I> unit_ids() const override { return iota_ids(com_.samples); }
    std::vector<Table> unit(I u) const override {
        auto t = schema();
        std::uint64_t s = rng::derive_seed(com_.seed, static_cast<std::uint64_t>(u));
        PlanarPath W = sample_brownian(T_, steps_, s);
        for (std::size_t i = 0; i < W.size(); ++i)
            t[0].add_row({u, seed_text(s), static_cast<I>(i), W.times()[i], W.points()[i].x, W.points()[i].y});
        return t;
    }
    void finish(CampaignResult& r) const override {
        const Table& p = r.tables[0];
        MCAccumulator end2;
        std::size_t ix = p.column("index"), cx = p.column("x"), cy = p.column("y");
        for (std::size_t q = 0; q < p.rows(); ++q)
            if (p.integer(q, ix) == static_cast<I>(steps_)) end2.add((p.real(q, cx) * p.real(q, cx) + p.real(q, cy) * p.real(q, cy)) / (2 * T_));
        r.summary_json = json{{"samples", com_.samples}, {"steps", steps_}, {"T", T_}, {"endpoint_norm_sq_over_2T", end2.mean()},
                              {"endpoint_norm_sq_over_2T_se", end2.se()}}.dump();
        std::string s = kCsvPreamble;
        s += "set size ratio -1\nset title 'Brownian paths'\n";
        s += "plot for [k=0:" + std::to_string(com_.samples - 1) +
             "] '../paths.csv' using ($1==k ? $5 : 1/0):6 with lines title sprintf('sample %d', k)\n";
        r.plots.push_back({"paths.plt", s});
    }

private:
    Common com_;
    double T_;
    std::size_t steps_;
};

// -- field --

class FieldCampaign : public Campaign {
public:
    explicit FieldCampaign(Config& c) {
        com_ = read_common(c, 1);
        T_ = c.real("field.T", 1.0);
        positive(T_, "field.T");
        eps_ = c.real("field.eps", 0.1);
        positive(eps_, "field.eps");
        sample_ = c.integer("field.sample", 0);
        if (sample_ < 0) throw Error(ErrorCode::Config, "field.sample must be nonnegative");
        steps_ = resolve_steps(c, "field.steps", T_, eps_, com_.res);
    }
    std::vector<Table> schema() const override {
        return {Table("field", {{"sample", Kind::Integer}, {"i", Kind::Integer}, {"j", Kind::Integer}, {"x"}, {"y"},
                                {"winding", Kind::Integer}, {"on_curve", Kind::Integer}, {"mollified"}}, "sample"),
                Table("level_sets", {{"sample", Kind::Integer}, {"k", Kind::Integer}, {"area"}}, "sample"),
                Table("field_totals", {{"sample", Kind::Integer}, {"seed", Kind::Text}, {"epsilon"}, {"h"}, {"dt"},
                                       {"levy_area"}, {"amperean_area"}}, "sample")};
    }
    std::vector<I> unit_ids() const override { return {sample_}; }
    std::vector<Table> unit(I u) const override {
        auto t = schema();
        std::uint64_t s = rng::derive_seed(com_.seed, static_cast<std::uint64_t>(u));
        PlanarPath W = sample_brownian(T_, steps_, s);
        Resolution res = com_.for_sample(s, 0);
        LoopView loop{W.points()};
        GridSpec spec = grid_for_loop(loop, eps_, res.K, res.grid_options(eps_));
        GridField n = winding_field(loop, spec);
        GridField m = mollified_field_convolution(loop, eps_, spec, res.K, res.sub_rows);
        for (std::size_t j = 0; j < spec.ny; ++j)
            for (std::size_t i = 0; i < spec.nx; ++i) {
                std::size_t q = j * spec.nx + i;
                t[0].add_row({u, static_cast<I>(i), static_cast<I>(j), spec.x(i), spec.y(j), static_cast<I>(std::llround(n.values[q])),
                              static_cast<I>(n.mask[q]), m.values[q]});
            }
        LevelSetAreas ls = level_set_areas(n, 64);
        for (const auto& [k, a] : ls.areas)
            if (a > 0) t[1].add_row({u, static_cast<I>(k), a});
        t[2].add_row({u, seed_text(s), eps_, spec.h, T_ / static_cast<double>(steps_), field_integral(n), field_inner_product(m, m)});
        return t;
    }
    void finish(CampaignResult& r) const override {
        const Table& tot = r.tables[2];
        r.summary_json = json{{"sample", sample_}, {"epsilon", eps_}, {"steps", steps_}, {"levy_area", tot.real(0, tot.column("levy_area"))},
                              {"amperean_area", tot.real(0, tot.column("amperean_area"))}}.dump();
        std::string s = kCsvPreamble;
        s += "set view map\nset size ratio -1\nset title 'mollified winding field'\n";
        s += "splot '../field.csv' using 4:5:8 with image notitle\n";
        r.plots.push_back({"field.plt", s});
        std::string l = kCsvPreamble;
        l += "set logscale y\nset xlabel 'k'\nset ylabel 'area of {n = k}'\nplot '../level_sets.csv' using 2:3 with linespoints notitle\n";
        r.plots.push_back({"level_sets.plt", l});
    }

private:
    Common com_;
    double T_, eps_;
    I sample_;
    std::size_t steps_;
};

// -- cross --

class CrossCampaign : public Campaign {
public:
    explicit CrossCampaign(Config& c) {
        com_ = read_common(c, 200);
        T_ = c.real("cross.T", 1.0);
        positive(T_, "cross.T");
        eps_ = c.reals("cross.eps", {0.1});
        positive_list(eps_, "cross.eps");
        eps2_ = c.reals("cross.eps2", eps_);
        positive_list(eps2_, "cross.eps2");
        if (eps2_.size() != eps_.size()) throw Error(ErrorCode::Config, "cross.eps and cross.eps2 need equal lengths");
        std::string setting = c.text("cross.setting", "both");
        if (setting == "both") settings_ = {"halves", "independent"};
        else if (setting == "halves" || setting == "independent") settings_ = {setting};
        else throw Error(ErrorCode::Config, "cross.setting must be halves, independent or both");
        betas_ = c.reals("cross.betas", {0.0, 0.2, 1.0, 5.0});
        double lo = std::min(min_of(eps_), min_of(eps2_));
        // halves use every other block of the full path, so both pieces keep dt
        steps_ = resolve_steps(c, "cross.steps", T_, lo, com_.res, 4);
        if (steps_ % 2) throw Error(ErrorCode::Config, "cross.steps must be even");
    }
    std::vector<Table> schema() const override {
        return {Table("cross", {{"sample", Kind::Integer}, {"setting", Kind::Text}, {"route", Kind::Text}, {"epsilon"}, {"epsilon2"},
                                {"h"}, {"dt"}, {"value"}, {"seed", Kind::Text}}, "sample"),
                Table("cross_aux", {{"sample", Kind::Integer}, {"setting", Kind::Text}, {"epsilon"}, {"epsilon2"}, {"intersection"},
                                    {"self_w"}, {"self_w2"}}, "sample")};
    }
    std::vector<I> unit_ids() const override { return iota_ids(com_.samples); }
    std::vector<Table> unit(I u) const override {
        auto t = schema();
        std::uint64_t s0 = rng::derive_seed(com_.seed, static_cast<std::uint64_t>(u), 0);
        std::uint64_t s1 = rng::derive_seed(com_.seed, static_cast<std::uint64_t>(u), 1);
        for (const std::string& setting : settings_) {
            PlanarPath W, W2;
            if (setting == "halves") {
                PlanarPath full = sample_brownian(T_, steps_, s0);
                W = restrict_path(full, {1, 1});
                W2 = restrict_path(full, {1, 2});
            } else {
                W = sample_brownian(T_, steps_, s0);
                W2 = sample_brownian(T_, steps_, s1);
            }
            for (std::size_t q = 0; q < eps_.size(); ++q) {
                Resolution res = com_.for_sample(s0, static_cast<std::uint32_t>(q));
                CrossRoutes cr = amperean_cross_all(W, W2, eps_[q], eps2_[q], res, s0);
                for (const AmpereanEstimate* e : {&cr.grid, &cr.strat, &cr.ito})
                    t[0].add_row({u, setting, std::string(route_name(e->route)), e->eps, e->eps2, e->h, e->dt, e->value, seed_text(s0)});
                t[1].add_row({u, setting, eps_[q], eps2_[q], cr.intersection, cr.self_w, cr.self_w2});
            }
        }
        return t;
    }
    void finish(CampaignResult& r) const override {
        const Table& x = r.tables[0];
        const Table& aux = r.tables[1];
        Table stats("cross_stats", {{"setting", Kind::Text}, {"route", Kind::Text}, {"epsilon"}, {"epsilon2"}, {"n", Kind::Integer},
                                    {"mean"}, {"se"}, {"z"}});
        Table agree("route_agreement", {{"setting", Kind::Text}, {"epsilon"}, {"epsilon2"}, {"median_scaled_diff"}, {"max_scaled_diff"}});
        Table expm("exp_moments", {{"setting", Kind::Text}, {"epsilon"}, {"epsilon2"}, {"beta"}, {"normaliser"}, {"n", Kind::Integer},
                                   {"estimate"}, {"se"}, {"estimate_half"}, {"se_half"}, {"clamped", Kind::Integer},
                                   {"unstable", Kind::Integer}});
        std::size_t cs = x.column("setting"), cr = x.column("route"), ce = x.column("epsilon"), ce2 = x.column("epsilon2"),
                    cv = x.column("value");
        json sj = json::array();
        for (const std::string& setting : settings_) {
            for (std::size_t q = 0; q < eps_.size(); ++q) {
                std::map<std::string, std::vector<double>> by_route;
                for (std::size_t row = 0; row < x.rows(); ++row)
                    if (x.text(row, cs) == setting && x.real(row, ce) == eps_[q] && x.real(row, ce2) == eps2_[q])
                        by_route[x.text(row, cr)].push_back(x.real(row, cv));
                for (const char* route : {"grid", "strat_iterated", "ito_minus_localtime"}) {
                    MCAccumulator acc;
                    for (double v : by_route[route]) acc.add(v);
                    double z = acc.se() > 0 ? acc.mean() / acc.se() : 0.0;
                    stats.add_row({setting, std::string(route), eps_[q], eps2_[q], static_cast<I>(acc.count()), acc.mean(), acc.se(), z});
                    if (setting == "halves" && std::string(route) == "grid")
                        r.checks.push_back({"halves_cross_mean_zero_eps" + format_real(eps_[q]), std::abs(z) <= 3.0,
                                            "z = " + format_real(z)});
                }
                // differences scaled by sqrt(A_W A_W'), the Cauchy-Schwarz bound of the cross term
                std::vector<double> diffs;
                std::size_t k = 0;
                for (std::size_t row = 0; row < aux.rows(); ++row) {
                    if (aux.text(row, aux.column("setting")) != setting || aux.real(row, aux.column("epsilon")) != eps_[q] ||
                        aux.real(row, aux.column("epsilon2")) != eps2_[q])
                        continue;
                    double scale = std::sqrt(aux.real(row, aux.column("self_w")) * aux.real(row, aux.column("self_w2")));
                    double g = by_route["grid"][k], st = by_route["strat_iterated"][k], it = by_route["ito_minus_localtime"][k];
                    ++k;
                    if (scale > 0) diffs.push_back(std::max({std::abs(g - st), std::abs(g - it), std::abs(st - it)}) / scale);
                }
                if (!diffs.empty()) {
                    std::vector<double> d = diffs;
                    std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
                    agree.add_row({setting, eps_[q], eps2_[q], d[d.size() / 2], *std::max_element(diffs.begin(), diffs.end())});
                }
                const auto& grid = by_route["grid"];
                double span = setting == "halves" ? 0.5 * T_ : T_;   // sqrt(T T') of the pair
                for (double beta : betas_) {
                    ExpMoment all = exp_moment(grid, beta, span);
                    std::span<const double> half(grid.data(), grid.size() / 2);
                    ExpMoment h = exp_moment(half, beta, span);
                    expm.add_row({setting, eps_[q], eps2_[q], beta, span, static_cast<I>(all.n), all.estimate, all.se, h.estimate, h.se,
                                  static_cast<I>(all.clamped), static_cast<I>(all.unstable)});
                }
            }
        }
        for (std::size_t row = 0; row < stats.rows(); ++row)
            sj.push_back({{"setting", stats.text(row, 0)}, {"route", stats.text(row, 1)}, {"epsilon", stats.real(row, 2)},
                          {"mean", stats.real(row, 5)}, {"se", stats.real(row, 6)}});
        r.tables.push_back(std::move(stats));
        r.tables.push_back(std::move(agree));
        r.tables.push_back(std::move(expm));
        r.summary_json = json{{"samples", com_.samples}, {"steps", steps_}, {"T", T_}, {"means", sj}}.dump();
        std::string s = kCsvPreamble;
        s += "set title 'cross term by route'\nset style data histograms\n";
        s += "plot '../cross.csv' using ($3 eq \"grid\" ? $8 : 1/0) bins=40 with boxes title 'grid'\n";
        r.plots.push_back({"cross_hist.plt", s});
    }

private:
    Common com_;
    double T_;
    std::vector<double> eps_, eps2_, betas_;
    std::vector<std::string> settings_;
    std::size_t steps_;
};

// -- counterterm --

std::vector<double> default_eps_ladder() {
    std::vector<double> v;
    for (int n = 4; n <= 9; ++n) v.push_back(std::pow(2.0, -0.5 * n));
    return v;
}

class CountertermCampaign : public Campaign {
public:
    explicit CountertermCampaign(Config& c) {
        com_ = read_common(c, 500);
        T_ = c.real("counterterm.T", 1.0);
        positive(T_, "counterterm.T");
        eps_ = c.reals("counterterm.eps", default_eps_ladder());
        positive_list(eps_, "counterterm.eps");
        if (eps_.size() < 4) throw Error(ErrorCode::Config, "counterterm.eps needs at least 4 values");
        for (std::size_t k = 1; k < eps_.size(); ++k)
            if (!(eps_[k] < eps_[k - 1])) throw Error(ErrorCode::Config, "counterterm.eps must be strictly decreasing");
        if (com_.samples < 2) throw Error(ErrorCode::Config, "counterterm needs at least two samples");
        steps_ = resolve_steps(c, "counterterm.steps", T_, eps_.back(), com_.res);
    }
    std::vector<Table> schema() const override {
        return {Table("samples", {{"sample", Kind::Integer}, {"seed", Kind::Text}, {"epsilon"}, {"h"}, {"dt"}, {"value"}}, "sample")};
    }
    std::vector<I> unit_ids() const override { return iota_ids(com_.samples); }
    std::vector<Table> unit(I u) const override {
        auto t = schema();
        std::uint64_t s = rng::derive_seed(com_.seed, static_cast<std::uint64_t>(u));
        PlanarPath W = sample_brownian(T_, steps_, s);
        for (std::size_t k = 0; k < eps_.size(); ++k) {
            AmpereanEstimate e = amperean_self(W, eps_[k], com_.for_sample(s, static_cast<std::uint32_t>(k)), s);
            t[0].add_row({u, seed_text(s), e.eps, e.h, e.dt, e.value});
        }
        return t;
    }
    void finish(CampaignResult& r) const override {
        const Table& x = r.tables[0];
        std::size_t K = eps_.size();
        std::vector<std::vector<double>> values(x.rows() / K, std::vector<double>(K));
        std::size_t cv = x.column("value");
        for (std::size_t row = 0; row < x.rows(); ++row) values[row / K][row % K] = x.real(row, cv);
        CountertermFit fit = fit_counterterm(T_, eps_, values);
        Table ft("fit", {{"epsilon"}, {"mean"}, {"se"}, {"n", Kind::Integer}});
        for (const auto& p : fit.points) ft.add_row({p.eps, p.mean, p.se, static_cast<I>(p.n)});
        r.tables.push_back(std::move(ft));
        json j = json::parse(fit_summary_json(fit));
        j["samples"] = com_.samples;
        j["steps"] = steps_;
        r.summary_json = j.dump();
        double lo = 0.135 * T_, hi = 0.185 * T_;
        r.checks.push_back({"slope_in_band", fit.slope >= lo && fit.slope <= hi,
                            "slope " + format_real(fit.slope) + " +- " + format_real(fit.slope_se) + ", band [" + format_real(lo) + ", " +
                                format_real(hi) + "]"});
        std::string s = kCsvPreamble;
        s += "set xlabel 'log(1/eps)'\nset ylabel 'mean Amperean area'\nset title 'counterterm'\n";
        s += "f(x) = " + format_real(fit.intercept) + " + " + format_real(fit.slope) + " * x\n";
        s += "plot '../fit.csv' using (log(1/$1)):2:3 with yerrorbars title 'MC mean', f(x) title 'WLS fit'\n";
        r.plots.push_back({"counterterm.plt", s});
    }

private:
    Common com_;
    double T_;
    std::vector<double> eps_;
    std::size_t steps_;
};

// -- decompose --

class DecomposeCampaign : public Campaign {
public:
    explicit DecomposeCampaign(Config& c) {
        com_ = read_common(c, 20);
        std::int64_t m = c.integer("decompose.m", 3);
        if (m < 0 || m > 20) throw Error(ErrorCode::Config, "decompose.m must lie in [0, 20]");
        m_ = static_cast<unsigned>(m);
        eps_ = c.real("decompose.eps", 0.1);
        positive(eps_, "decompose.eps");
        std::int64_t lv = c.integer("decompose.scaling_levels", 3);
        if (lv < 0 || lv > 12) throw Error(ErrorCode::Config, "decompose.scaling_levels must lie in [0, 12]");
        levels_ = static_cast<unsigned>(lv);
        // the scaling check mollifies level k at eps 2^{-k/2}, so the step must resolve the finest one
        double eps_min = eps_ * std::pow(2.0, -0.5 * std::max<double>(0.0, static_cast<double>(levels_) - 1.0));
        steps_ = resolve_steps(c, "decompose.steps", 1.0, std::min(eps_, eps_min), com_.res,
                               std::size_t{1} << std::max(m_, levels_ + 1));
        std::size_t div = std::size_t{1} << std::max(m_, levels_);
        if (steps_ % div) throw Error(ErrorCode::Resolution, "decompose.steps must be divisible by 2^m");
    }
    std::vector<Table> schema() const override {
        return {Table("terms", {{"sample", Kind::Integer}, {"k", Kind::Integer}, {"j", Kind::Integer}, {"B"}, {"T"}, {"c_minus"},
                                {"c_plus"}}, "sample"),
                Table("identity", {{"sample", Kind::Integer}, {"seed", Kind::Text}, {"m", Kind::Integer}, {"epsilon"}, {"h"}, {"total"},
                                   {"assembled"}, {"residual"}, {"relative_residual"}}, "sample"),
                Table("scaling", {{"sample", Kind::Integer}, {"k", Kind::Integer}, {"j", Kind::Integer}, {"epsilon"}, {"T"}}, "sample")};
    }
    std::vector<I> unit_ids() const override { return iota_ids(com_.samples); }
    std::vector<Table> unit(I u) const override {
        auto t = schema();
        std::uint64_t s = rng::derive_seed(com_.seed, static_cast<std::uint64_t>(u));
        PlanarPath W = sample_brownian(1.0, steps_, s);
        Resolution res = com_.for_sample(s, 0);
        DyadicComponents d = dyadic_decomposition(W, m_, eps_, res);
        for (const DyadicTerm& x : d.terms)
            t[0].add_row({u, static_cast<I>(x.idx.k), static_cast<I>(x.idx.j), x.B, x.T, x.c_minus, x.c_plus});
        t[1].add_row({u, seed_text(s), static_cast<I>(m_), eps_, d.h, d.total, d.assembled, d.residual, d.relative_residual()});
        for (unsigned k = 0; k < levels_; ++k) {
            double ek = eps_ * std::pow(2.0, -0.5 * k);
            for (std::uint64_t j = 1; j <= (std::uint64_t{1} << k); ++j)
                t[2].add_row({u, static_cast<I>(k), static_cast<I>(j), ek, triangle_term(W, {k, j}, ek, com_.for_sample(s, 1 + k))});
        }
        return t;
    }
    void finish(CampaignResult& r) const override {
        const Table& id = r.tables[1];
        double worst = 0;
        for (std::size_t row = 0; row < id.rows(); ++row) worst = std::max(worst, id.real(row, id.column("relative_residual")));
        r.checks.push_back({"decomposition_residual", worst <= 1e-9, "max relative residual " + format_real(worst)});
        const Table& sc = r.tables[2];
        std::vector<MCAccumulator> lev(levels_);
        for (std::size_t row = 0; row < sc.rows(); ++row)
            lev[static_cast<std::size_t>(sc.integer(row, sc.column("k")))].add(sc.real(row, sc.column("T")));
        Table st("triangle_scaling", {{"k", Kind::Integer}, {"epsilon"}, {"mean_T"}, {"se"}, {"ratio_2k"}, {"ratio_se"}});
        json ratios = json::array();
        for (unsigned k = 0; k < levels_; ++k) {
            double base = lev[0].mean(), f = std::pow(2.0, k);
            double ratio = base > 0 ? f * lev[k].mean() / base : 0.0;
            double rse = base > 0 ? ratio * std::hypot(lev[k].se() / std::max(lev[k].mean(), 1e-300), lev[0].se() / base) : 0.0;
            st.add_row({static_cast<I>(k), eps_ * std::pow(2.0, -0.5 * k), lev[k].mean(), lev[k].se(), ratio, rse});
            ratios.push_back(ratio);
        }
        r.tables.push_back(std::move(st));
        r.summary_json = json{{"m", m_}, {"epsilon", eps_}, {"steps", steps_}, {"samples", com_.samples},
                              {"max_relative_residual", worst}, {"triangle_scaling_ratio", ratios}}.dump();
        std::string s = kCsvPreamble;
        s += "set logscale y\nset xlabel 'sample'\nset ylabel 'relative residual'\n";
        s += "plot '../identity.csv' using 1:(abs($9) > 0 ? abs($9) : 1e-18) with points title 'residual'\n";
        r.plots.push_back({"identity.plt", s});
    }

private:
    Common com_;
    unsigned m_, levels_;
    double eps_;
    std::size_t steps_;
};

// -- smoothloop --

class SmoothLoopCampaign : public Campaign {
public:
    explicit SmoothLoopCampaign(Config& c) {
        c.text("run.tag", "");
        c.integer("run.threads", 0);
        c.integer("run.seed", 1);
        if (c.text("smoothloop.battery", "default") != "default") throw Error(ErrorCode::Config, "smoothloop.battery: only 'default'");
        h_ = c.real("smoothloop.h", 0.004);
        positive(h_, "smoothloop.h");
        std::int64_t outer = c.integer("smoothloop.outer_panels", 128);
        if (outer < 4) throw Error(ErrorCode::Config, "smoothloop.outer_panels must be at least 4");
        quad_.outer_panels = static_cast<std::size_t>(outer);
    }
    std::vector<Table> schema() const override {
        return {Table("battery", {{"case", Kind::Integer}, {"name", Kind::Text}, {"lhs"}, {"rhs"}, {"exact"}, {"mismatch"},
                                  {"zero_case", Kind::Integer}}, "case")};
    }
    std::vector<I> unit_ids() const override { return iota_ids(smooth_battery_size()); }
    std::vector<Table> unit(I u) const override {
        auto t = schema();
        SmoothBatteryRow b = smooth_battery_case(static_cast<std::size_t>(u), h_, quad_);
        t[0].add_row({u, b.name, b.lhs, b.rhs, b.exact, b.mismatch, static_cast<I>(b.zero_case)});
        return t;
    }
    void finish(CampaignResult& r) const override {
        const Table& b = r.tables[0];
        double worst_rel = 0, worst_zero = 0;
        for (std::size_t row = 0; row < b.rows(); ++row) {
            double m = b.real(row, b.column("mismatch"));
            if (b.integer(row, b.column("zero_case"))) worst_zero = std::max(worst_zero, m);
            else worst_rel = std::max(worst_rel, m);
        }
        r.checks.push_back({"battery_relative", worst_rel <= 1e-2, "max relative mismatch " + format_real(worst_rel)});
        r.checks.push_back({"battery_zero_case", worst_zero <= 1e-4, "max absolute mismatch " + format_real(worst_zero)});
        r.summary_json = json{{"h", h_}, {"max_relative_mismatch", worst_rel}, {"max_zero_case_mismatch", worst_zero}}.dump();
        std::string s = kCsvPreamble;
        s += "set style data histograms\nset style fill solid\nset title 'smooth-loop battery'\n";
        s += "plot '../battery.csv' using 3:xtic(2) title 'grid LHS', '' using 4 title 'line-integral RHS'\n";
        r.plots.push_back({"battery.plt", s});
    }

private:
    double h_;
    SmoothQuadrature quad_;
};

// -- cutoff --

class CutoffCampaign : public Campaign {
public:
    explicit CutoffCampaign(Config& c) {
        com_ = read_common(c, 20);
        T_ = c.real("cutoff.T", 1.0);
        positive(T_, "cutoff.T");
        h_ = c.real("cutoff.h", 0.01);
        positive(h_, "cutoff.h");
        for (double k : c.reals("cutoff.k0", {0, 1, 2, 3, 4, 6, 8})) {
            if (k < 0 || k != std::floor(k)) throw Error(ErrorCode::Config, "cutoff.k0 entries must be nonnegative integers");
            k0_.push_back(static_cast<int>(k));
        }
        eps_ = c.reals("cutoff.eps", {0.2, 0.1, 0.05});
        positive_list(eps_, "cutoff.eps");
        steps_ = resolve_steps(c, "cutoff.steps", T_, min_of(eps_), com_.res);
    }
    std::vector<Table> schema() const override {
        return {Table("truncated", {{"sample", Kind::Integer}, {"k0", Kind::Integer}, {"cross"}, {"self_w"}, {"self_w2"},
                                    {"max_winding", Kind::Integer}}, "sample"),
                Table("mollified", {{"sample", Kind::Integer}, {"epsilon"}, {"h"}, {"cross"}, {"self_w"}, {"self_w2"}}, "sample")};
    }
    std::vector<I> unit_ids() const override { return iota_ids(com_.samples); }
    std::vector<Table> unit(I u) const override {
        auto t = schema();
        std::uint64_t s0 = rng::derive_seed(com_.seed, static_cast<std::uint64_t>(u), 0);
        std::uint64_t s1 = rng::derive_seed(com_.seed, static_cast<std::uint64_t>(u), 1);
        PlanarPath W = sample_brownian(T_, steps_, s0), W2 = sample_brownian(T_, steps_, s1);
        std::array<std::span<const Point>, 2> sets{W.points(), W2.points()};
        GridOptions o;
        o.h = h_;
        if (com_.jitter) o.jitter = seed_jitter(s0, 0);
        GridSpec spec = grid_for_points(sets, h_, 1.0, o);
        GridField a = winding_field(LoopView{W.points()}, spec), b = winding_field(LoopView{W2.points()}, spec);
        for (int k0 : k0_) {
            CutoffSums cs = cutoff_sums(a, b, k0, k0);
            t[0].add_row({u, static_cast<I>(k0), cs.cross, cs.self_w, cs.self_w2, static_cast<I>(cs.max_winding)});
        }
        for (std::size_t q = 0; q < eps_.size(); ++q) {
            Resolution res = com_.for_sample(s0, 1 + static_cast<std::uint32_t>(q));
            GridSpec ms = grid_for_points(sets, eps_[q], res.K, res.grid_options(eps_[q]));
            GridField fa = mollified_field_convolution(LoopView{W.points()}, eps_[q], ms, res.K, res.sub_rows);
            GridField fb = mollified_field_convolution(LoopView{W2.points()}, eps_[q], ms, res.K, res.sub_rows);
            t[1].add_row({u, eps_[q], ms.h, field_inner_product(fa, fb), field_inner_product(fa, fa), field_inner_product(fb, fb)});
        }
        return t;
    }
    void finish(CampaignResult& r) const override {
        Table trend("cutoff_trend", {{"kind", Kind::Text}, {"parameter"}, {"mean_cross"}, {"se_cross"}, {"mean_self"}, {"se_self"}});
        auto summarise = [&](const Table& x, const std::string& kind, const std::string& col, std::vector<double> params) {
            for (double p : params) {
                MCAccumulator c, s;
                for (std::size_t row = 0; row < x.rows(); ++row)
                    if (x.real(row, x.column(col)) == p) {
                        c.add(x.real(row, x.column("cross")));
                        s.add(x.real(row, x.column("self_w")));
                    }
                trend.add_row({kind, p, c.mean(), c.se(), s.mean(), s.se()});
            }
        };
        std::vector<double> ks(k0_.begin(), k0_.end());
        summarise(r.tables[0], "truncated_k0", "k0", ks);
        summarise(r.tables[1], "mollified_eps", "epsilon", eps_);
        json rows = json::array();
        for (std::size_t row = 0; row < trend.rows(); ++row)
            rows.push_back({{"kind", trend.text(row, 0)}, {"parameter", trend.real(row, 1)}, {"mean_cross", trend.real(row, 2)},
                            {"mean_self", trend.real(row, 4)}});
        r.tables.push_back(std::move(trend));
        r.summary_json = json{{"samples", com_.samples}, {"steps", steps_}, {"h", h_}, {"trend", rows}}.dump();
        std::string s = kCsvPreamble;
        s += "set xlabel 'k0'\nset ylabel 'mean truncated self sum'\n";
        s += "plot '../cutoff_trend.csv' using ($1 eq \"truncated_k0\" ? $2 : 1/0):5:6 with yerrorbars title 'sum k^2 A_k'\n";
        r.plots.push_back({"cutoff.plt", s});
    }

private:
    Common com_;
    double T_, h_;
    std::vector<int> k0_;
    std::vector<double> eps_;
    std::size_t steps_;
};

// -- oracle --

GridSpec centred_nodes(double half, double h) {
    GridSpec s;
    std::size_t m = static_cast<std::size_t>(std::ceil(half / h));
    s.origin = {-static_cast<double>(m) * h, -static_cast<double>(m) * h};
    s.h = h;
    s.nx = s.ny = 2 * m + 1;
    return s;
}

std::size_t nearest(double v, double origin, double h) { return static_cast<std::size_t>(std::lround((v - origin) / h)); }

class OracleCampaign : public Campaign {
public:
    explicit OracleCampaign(Config& c) {
        com_ = read_common(c, 2000);
        T_ = c.real("oracle.T", 1.0);
        positive(T_, "oracle.T");
        for (const std::string& w : c.words("oracle.z", "0.5:0,1:0")) {
            auto colon = w.find(':');
            if (colon == std::string::npos) throw Error(ErrorCode::Config, "oracle.z entries are x:y pairs");
            try {
                z_.push_back({std::stod(w.substr(0, colon)), std::stod(w.substr(colon + 1))});
            } catch (const std::exception&) {
                throw Error(ErrorCode::Config, "oracle.z: cannot parse '" + w + "'");
            }
        }
        eps_ = c.reals("oracle.eps", {0.2, 0.1});
        positive_list(eps_, "oracle.eps");
        brute_ = c.flag("oracle.brute", true);
        defect_eps_ = c.reals("oracle.defect_eps", {0.4, 0.2, 0.1, 0.05});
        positive_list(defect_eps_, "oracle.defect_eps");
        steps_ = resolve_steps(c, "oracle.steps", T_, min_of(eps_), com_.res);
    }
    std::vector<Table> schema() const override {
        return {Table("isometry_samples", {{"sample", Kind::Integer}, {"case", Kind::Integer}, {"z_x"}, {"z_y"}, {"epsilon"}, {"value"}},
                      "sample")};
    }
    std::vector<I> unit_ids() const override { return iota_ids(com_.samples); }
    std::vector<Table> unit(I u) const override {
        auto t = schema();
        std::uint64_t s = rng::derive_seed(com_.seed, static_cast<std::uint64_t>(u));
        PlanarPath W = sample_brownian(T_, steps_, s);
        I q = 0;
        for (Point z : z_)
            for (double e : eps_) {
                double v = open_line_integral(W.points(), [&](Vec2 x) { return theta_eps(x, e, com_.res.K); }, z);
                t[0].add_row({u, q++, z.x, z.y, e, v});
            }
        return t;
    }
    void finish(CampaignResult& r) const override {
        const Table& x = r.tables[0];
        std::size_t cases = z_.size() * eps_.size();
        std::vector<MCAccumulator> acc(cases);
        for (std::size_t row = 0; row < x.rows(); ++row)
            acc[static_cast<std::size_t>(x.integer(row, x.column("case")))].add(x.real(row, x.column("value")));
        Table iso("isometry", {{"case", Kind::Integer}, {"z_x"}, {"z_y"}, {"epsilon"}, {"oracle"}, {"mc_mean"}, {"mc_variance"},
                               {"variance_se"}, {"zscore"}});
        std::vector<double> oracle(cases);
        parallel_for(cases, [&](std::size_t q) {
            oracle[q] = ito_isometry_variance(z_[q / eps_.size()], eps_[q % eps_.size()], T_, {}, com_.res.K);
        });
        for (std::size_t q = 0; q < cases; ++q) {
            Point z = z_[q / eps_.size()];
            double e = eps_[q % eps_.size()];
            double se = acc[q].variance_se();
            double zs = se > 0 ? (acc[q].variance() - oracle[q]) / se : 0.0;
            iso.add_row({static_cast<I>(q), z.x, z.y, e, oracle[q], acc[q].mean(), acc[q].variance(), se, zs});
            r.checks.push_back({"isometry_z" + format_real(z.x) + "_" + format_real(z.y) + "_eps" + format_real(e), std::abs(zs) <= 3.0,
                                "MC " + format_real(acc[q].variance()) + " vs oracle " + format_real(oracle[q]) + ", z = " + format_real(zs)});
        }
        r.tables.push_back(std::move(iso));

        Table defect("defect", {{"epsilon"}, {"norm"}, {"tail_bound"}});
        GridSpec g;
        g.h = 0.0025;
        std::size_t n = static_cast<std::size_t>(std::lround(2.0 / g.h));
        g.origin = {-1.0 + 0.5 * g.h, -1.0 + 0.5 * g.h};
        g.nx = g.ny = n;
        bool decreasing = true;
        double prev = std::numeric_limits<double>::infinity();
        for (double e : defect_eps_) {
            LrDefect d = lr_defect_norm(e, e, 3.0, g, com_.res.K);
            defect.add_row({e, d.norm, d.tail_bound});
            decreasing = decreasing && d.norm < prev;
            prev = d.norm;
        }
        r.checks.push_back({"defect_decreasing", decreasing, "L3 norm along the eps list"});
        r.tables.push_back(std::move(defect));

        if (brute_) {
            Table bt("brute", {{"name", Kind::Text}, {"error"}, {"tolerance"}});
            auto add = [&](const std::string& name, double err, double tol) {
                bt.add_row({name, err, tol});
                r.checks.push_back({"brute_" + name, err <= tol, "error " + format_real(err)});
            };
            double eps = 0.1, h = eps / 20;
            {
                GridSpec s = centred_nodes(0.25, h);
                GridField gx = brute_convolution_2d(RadialFunction::bump(eps), BruteKernel::ThetaX, s);
                GridField gy = brute_convolution_2d(RadialFunction::bump(eps), BruteKernel::ThetaY, s);
                double worst = 0;
                for (std::size_t j = 0; j < s.ny; ++j)
                    for (std::size_t i = 0; i < s.nx; ++i) {
                        Vec2 t = theta_eps(s.node(i, j), eps);
                        worst = std::max({worst, std::abs(gx.at(i, j) - t.x), std::abs(gy.at(i, j) - t.y)});
                    }
                add("bump_theta", worst, 1e-4);
            }
            {
                GridSpec s = centred_nodes(0.3, h);
                GridField gg = brute_convolution_2d(RadialFunction::double_mollifier(eps, eps), BruteKernel::Green, s);
                double worst = 0;
                for (std::size_t j = 0; j < s.ny; ++j)
                    for (std::size_t i = 0; i < s.nx; ++i) {
                        double rr = norm(s.node(i, j));
                        if (rr >= 2 * h) worst = std::max(worst, std::abs(gg.at(i, j) - mollified_green(rr, eps, eps)));
                    }
                add("double_mollified_green", worst, 1e-5);
            }
            {
                Triangle tri{{0.1, 0.05}, {0.5, 0.2}, {0.25, 0.45}};
                double e = 0.08;
                std::vector<Point> cover{{-0.2, -0.2}, {0.8, 0.8}};
                auto field = mollified_delta_theta_field(tri, e, cover, e / 6);
                GridSpec s;
                s.h = 0.004;
                s.origin = {-0.3, -0.3};
                s.nx = s.ny = static_cast<std::size_t>(1.2 / s.h) + 1;
                GridField ind = cell_averaged_triangle(tri, s, 16);
                GridField bx = brute_convolution_2d(ind, BruteKernel::ThetaX, e, e);
                GridField by = brute_convolution_2d(ind, BruteKernel::ThetaY, e, e);
                double worst = 0;
                for (Point p : {Point{0.0, 0.0}, Point{0.3, 0.2}, Point{0.5, 0.5}, Point{0.1, 0.4}, Point{0.6, 0.1}, Point{0.25, 0.25}}) {
                    std::size_t i = nearest(p.x, s.origin.x, s.h), j = nearest(p.y, s.origin.y, s.h);
                    Vec2 v = field.interpolate(s.node(i, j));
                    worst = std::max({worst, std::abs(v.x - bx.at(i, j)), std::abs(v.y - by.at(i, j))});
                }
                add("triangle_delta_theta", worst, 1e-3);
            }
            r.tables.push_back(std::move(bt));
        }
        json iso_j = json::array();
        for (std::size_t q = 0; q < cases; ++q)
            iso_j.push_back({{"z", {z_[q / eps_.size()].x, z_[q / eps_.size()].y}}, {"epsilon", eps_[q % eps_.size()]}, {"oracle", oracle[q]},
                             {"mc_variance", acc[q].variance()}, {"variance_se", acc[q].variance_se()}});
        r.summary_json = json{{"samples", com_.samples}, {"steps", steps_}, {"isometry", iso_j}}.dump();
        std::string s = kCsvPreamble;
        s += "set xlabel 'case'\nset ylabel 'variance'\n";
        s += "plot '../isometry.csv' using 1:7:8 with yerrorbars title 'MC', '' using 1:5 with points pt 7 title 'quadrature'\n";
        r.plots.push_back({"isometry.plt", s});
    }

private:
    Common com_;
    double T_;
    std::vector<Point> z_;
    std::vector<double> eps_, defect_eps_;
    bool brute_;
    std::size_t steps_;
};

std::unique_ptr<Campaign> make_campaign(const std::string& name, Config& c) {
    std::unique_ptr<Campaign> out;
    if (name == "sample") out = std::make_unique<SampleCampaign>(c);
    else if (name == "field") out = std::make_unique<FieldCampaign>(c);
    else if (name == "cross") out = std::make_unique<CrossCampaign>(c);
    else if (name == "counterterm") out = std::make_unique<CountertermCampaign>(c);
    else if (name == "decompose") out = std::make_unique<DecomposeCampaign>(c);
    else if (name == "smoothloop") out = std::make_unique<SmoothLoopCampaign>(c);
    else if (name == "cutoff") out = std::make_unique<CutoffCampaign>(c);
    else if (name == "oracle") out = std::make_unique<OracleCampaign>(c);
    else throw Error(ErrorCode::Config, "unknown campaign '" + name + "'");
    c.reject_unread();
    return out;
}

std::vector<Table> compute(const Campaign& camp, std::span<const I> ids) {
    std::vector<std::vector<Table>> parts(ids.size());
    parallel_for(ids.size(), [&](std::size_t q) { parts[q] = camp.unit(ids[q]); });
    std::vector<Table> out = camp.schema();
    for (auto& p : parts)
        for (std::size_t t = 0; t < out.size(); ++t) out[t].append(p[t]);
    return out;
}

}  // namespace

const std::vector<std::string>& campaign_names() {
    static const std::vector<std::string> names{"sample", "field", "cross", "counterterm", "decompose", "smoothloop", "cutoff", "oracle"};
    return names;
}

CampaignResult run_campaign(const std::string& name, Config cfg) {
    auto camp = make_campaign(name, cfg);
    CampaignResult r;
    r.campaign = name;
    r.config = cfg;
    auto ids = camp->unit_ids();
    r.tables = compute(*camp, ids);
    camp->finish(r);
    return r;
}

std::vector<Table> recompute_units(const std::string& name, Config cfg, std::span<const I> units) {
    auto camp = make_campaign(name, cfg);
    auto ids = camp->unit_ids();
    for (I u : units)
        if (std::find(ids.begin(), ids.end(), u) == ids.end())
            throw Error(ErrorCode::InvalidArgument, "unit " + std::to_string(u) + " is not part of this campaign");
    return compute(*camp, units);
}

// ---- persistence ----

void write_run(const CampaignResult& r, const RunInfo& info, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "plots", ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + (dir / "plots").string() + ": " + ec.message());
    json files = json::array();
    for (const Table& t : r.tables) {
        std::string file = t.name() + ".csv";
        t.write_csv(dir / file);
        json cols = json::array();
        for (const auto& c : t.columns()) cols.push_back(c.name);
        files.push_back({{"table", t.name()}, {"file", file}, {"key", t.key()}, {"rows", t.rows()}, {"columns", cols}});
    }
    json plots = json::array();
    for (const PlotScript& p : r.plots) {
        std::ofstream out(dir / "plots" / p.file, std::ios::binary);
        out << p.text;
        if (!out) throw Error(ErrorCode::Io, "cannot write plot script " + p.file);
        plots.push_back("plots/" + p.file);
    }
    json m{{"campaign", r.campaign},
           {"version", version_string()},
           {"config", r.config.values()},
           {"timing", {{"started", info.started}, {"seconds", info.seconds}}},
           {"threads", info.threads},
           {"command", info.command},
           {"files", files},
           {"plots", plots},
           {"summary", r.summary_json.empty() ? json::object() : json::parse(r.summary_json)},
           {"checks", checks_json(r.checks)}};
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << m.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::Io, "cannot write manifest in " + dir.string());
}

VerifyReport verify_run(const std::filesystem::path& dir, double fraction) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw Error(ErrorCode::Io, "no manifest.json in " + dir.string());
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, std::string("manifest.json is not valid JSON: ") + e.what());
    }
    VerifyReport rep;
    rep.campaign = m.at("campaign").get<std::string>();
    Config cfg;
    for (const auto& [k, v] : m.at("config").items()) cfg.set(k, v.get<std::string>());
    for (const auto& c : m.value("checks", json::array()))
        rep.checks.push_back({c.at("name").get<std::string>(), c.at("pass").get<bool>(), c.value("detail", "")});

    struct Stored {
        std::string table, file, key;
        std::vector<std::vector<std::string>> csv;
    };
    std::vector<Stored> keyed;
    std::set<I> all_units;
    for (const auto& f : m.at("files")) {
        std::string key = f.value("key", "");
        if (key.empty()) continue;
        Stored s{f.at("table").get<std::string>(), f.at("file").get<std::string>(), key, read_csv(dir / f.at("file").get<std::string>())};
        if (s.csv.empty()) {
            rep.diffs.push_back(s.file + ": empty file");
            continue;
        }
        auto kc = std::find(s.csv[0].begin(), s.csv[0].end(), key);
        if (kc == s.csv[0].end()) {
            rep.diffs.push_back(s.file + ": key column '" + key + "' missing");
            continue;
        }
        std::size_t ki = static_cast<std::size_t>(kc - s.csv[0].begin());
        for (std::size_t r = 1; r < s.csv.size(); ++r) {
            try {
                all_units.insert(std::stoll(s.csv[r].at(ki)));
            } catch (const std::exception&) {
                rep.diffs.push_back(s.file + " row " + std::to_string(r) + ": bad key cell");
            }
        }
        keyed.push_back(std::move(s));
    }
    if (all_units.empty()) return rep;
    std::vector<I> units(all_units.begin(), all_units.end());
    std::size_t want = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(units.size()))));
    want = std::min(want, units.size());
    std::vector<I> pick;
    for (std::size_t q = 0; q < want; ++q) pick.push_back(units[q * units.size() / want]);
    rep.units_checked = pick.size();

    std::vector<Table> fresh = recompute_units(rep.campaign, cfg, pick);
    for (const Stored& s : keyed) {
        auto it = std::find_if(fresh.begin(), fresh.end(), [&](const Table& t) { return t.name() == s.table; });
        if (it == fresh.end()) {
            rep.diffs.push_back(s.file + ": table not produced by the campaign");
            continue;
        }
        const Table& t = *it;
        std::vector<std::string> header;
        for (const auto& c : t.columns()) header.push_back(c.name);
        if (s.csv[0] != header) {
            rep.diffs.push_back(s.file + ": header differs");
            continue;
        }
        std::size_t ki = t.column(s.key);
        for (I u : pick) {
            std::vector<std::size_t> stored_rows, fresh_rows;
            for (std::size_t r = 1; r < s.csv.size(); ++r)
                if (s.csv[r].size() > ki && s.csv[r][ki] == std::to_string(u)) stored_rows.push_back(r);
            for (std::size_t r = 0; r < t.rows(); ++r)
                if (t.integer(r, ki) == u) fresh_rows.push_back(r);
            if (stored_rows.size() != fresh_rows.size()) {
                rep.diffs.push_back(s.file + " unit " + std::to_string(u) + ": " + std::to_string(stored_rows.size()) + " rows stored, " +
                                    std::to_string(fresh_rows.size()) + " recomputed");
                continue;
            }
            for (std::size_t q = 0; q < fresh_rows.size(); ++q) {
                const auto& row = s.csv[stored_rows[q]];
                ++rep.rows_checked;
                if (row.size() != header.size()) {
                    rep.diffs.push_back(s.file + " line " + std::to_string(stored_rows[q] + 1) + ": wrong field count");
                    continue;
                }
                for (std::size_t c = 0; c < header.size(); ++c) {
                    std::string now = t.format(fresh_rows[q], c);
                    if (row[c] != now)
                        rep.diffs.push_back(s.file + " line " + std::to_string(stored_rows[q] + 1) + " column " + header[c] + ": stored " +
                                            row[c] + ", recomputed " + now);
                }
            }
        }
    }
    return rep;
}

}  // namespace amperean
