#include "amperean/amperean.h"

#include <string>
#include <vector>

#include "amperean/campaigns.hpp"
#include "amperean/estimators.hpp"
#include "amperean/fields.hpp"
#include "amperean/parallel.hpp"
#include "amperean/paths.hpp"
#include "amperean/rng.hpp"

struct amp_path {
    amperean::PlanarPath path;
};
struct amp_field {
    amperean::GridField field;
};
struct amp_accumulator {
    amperean::MCAccumulator acc;
};
struct amp_config {
    amperean::Config cfg;
};
struct amp_table {
    const amperean::Table* table;
};
struct amp_run {
    amperean::CampaignResult result;
    std::vector<amp_table> tables;
    std::vector<std::pair<std::string, std::string>> config;
};
struct amp_verify {
    amperean::VerifyReport report;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_cell;

amp_status fail(amp_status s, const std::string& what) {
    g_error = what;
    return s;
}

template <class F>
amp_status guard(F&& f) {
    try {
        g_error.clear();
        f();
        return AMP_OK;
    } catch (const amperean::Error& e) {
        return fail(static_cast<amp_status>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(AMP_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(AMP_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(AMP_ERR_INTERNAL, "unknown exception");
    }
}

#define AMP_REQUIRE(cond, msg) \
    if (!(cond)) return fail(AMP_ERR_INVALID_ARGUMENT, msg)

amperean::Resolution to_res(const amp_resolution* r) {
    amperean::Resolution out;
    if (!r) return out;
    out.h = r->h;
    out.dt = r->dt;
    out.K = r->K > 0 ? r->K : 1.0;
    out.sub_rows = r->sub_rows > 0 ? r->sub_rows : 8;
    out.jitter = {r->jitter_x, r->jitter_y};
    return out;
}

}  // namespace

extern "C" {

const char* amp_version(void) { return amperean::version_string(); }
const char* amp_last_error(void) { return g_error.c_str(); }

const char* amp_status_name(amp_status s) {
    switch (s) {
        case AMP_OK: return "ok";
        case AMP_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case AMP_ERR_RESOLUTION: return "resolution";
        case AMP_ERR_ON_CURVE: return "on_curve";
        case AMP_ERR_DOMAIN: return "domain";
        case AMP_ERR_SHAPE: return "shape";
        case AMP_ERR_CONFIG: return "config";
        case AMP_ERR_IO: return "io";
        case AMP_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

void amp_set_threads(unsigned n) { amperean::set_thread_count(n); }
unsigned amp_threads(void) { return amperean::thread_count(); }

amp_resolution amp_resolution_default(void) { return {0.0, 0.0, 1.0, 8, 0.0, 0.0}; }

uint64_t amp_derive_seed(uint64_t run_seed, uint64_t index, uint32_t stream) {
    return amperean::rng::derive_seed(run_seed, index, stream);
}

// ---- paths ----

amp_status amp_path_sample(double T, size_t steps, uint64_t seed, amp_path** out) {
    AMP_REQUIRE(out, "null output");
    *out = nullptr;
    return guard([&] { *out = new amp_path{amperean::sample_brownian(T, steps, seed)}; });
}

amp_status amp_path_from_points(const double* t, const double* xy, size_t n, amp_path** out) {
    AMP_REQUIRE(t && xy && out, "null argument");
    *out = nullptr;
    return guard([&] {
        std::vector<double> times(t, t + n);
        std::vector<amperean::Point> pts(n);
        for (size_t i = 0; i < n; ++i) pts[i] = {xy[2 * i], xy[2 * i + 1]};
        *out = new amp_path{amperean::PlanarPath(std::move(times), std::move(pts))};
    });
}

amp_status amp_path_restrict(const amp_path* p, unsigned k, uint64_t j, amp_path** out) {
    AMP_REQUIRE(p && out, "null argument");
    *out = nullptr;
    return guard([&] { *out = new amp_path{amperean::restrict_path(p->path, amperean::DyadicIndex(k, j))}; });
}

size_t amp_path_size(const amp_path* p) { return p ? p->path.size() : 0; }

amp_status amp_path_point(const amp_path* p, size_t i, double* t, double* x, double* y) {
    AMP_REQUIRE(p, "null path");
    if (i >= p->path.size()) return fail(AMP_ERR_INVALID_ARGUMENT, "point index out of range");
    if (t) *t = p->path.times()[i];
    if (x) *x = p->path.points()[i].x;
    if (y) *y = p->path.points()[i].y;
    return AMP_OK;
}

amp_status amp_path_write_csv(const amp_path* p, const char* file) {
    AMP_REQUIRE(p && file, "null argument");
    return guard([&] { amperean::write_path_csv(p->path, file); });
}

void amp_path_free(amp_path* p) { delete p; }

// ---- fields ----

amp_status amp_field_winding(const amp_path* p, double h, double margin, amp_field** out) {
    AMP_REQUIRE(p && out, "null argument");
    *out = nullptr;
    return guard([&] {
        amperean::GridOptions o;
        o.h = h;
        amperean::LoopView loop{p->path.points()};
        auto spec = amperean::grid_for_loop(loop, margin, 1.0, o);
        *out = new amp_field{amperean::winding_field(loop, spec)};
    });
}

amp_status amp_field_mollified(const amp_path* p, double eps, const amp_resolution* res, amp_field** out) {
    AMP_REQUIRE(p && out, "null argument");
    *out = nullptr;
    return guard([&] {
        auto r = to_res(res);
        amperean::LoopView loop{p->path.points()};
        auto spec = amperean::grid_for_loop(loop, eps, r.K, r.grid_options(eps));
        *out = new amp_field{amperean::mollified_field_convolution(loop, eps, spec, r.K, r.sub_rows)};
    });
}

amp_status amp_field_shape(const amp_field* f, size_t* nx, size_t* ny, double* x0, double* y0, double* h) {
    AMP_REQUIRE(f, "null field");
    const auto& s = f->field.spec;
    if (nx) *nx = s.nx;
    if (ny) *ny = s.ny;
    if (x0) *x0 = s.origin.x;
    if (y0) *y0 = s.origin.y;
    if (h) *h = s.h;
    return AMP_OK;
}

const double* amp_field_values(const amp_field* f) { return f ? f->field.values.data() : nullptr; }

amp_status amp_field_inner_product(const amp_field* f, const amp_field* g, double* out) {
    AMP_REQUIRE(f && g && out, "null argument");
    if (!(f->field.spec == g->field.spec)) return fail(AMP_ERR_SHAPE, "fields live on different grids");
    return guard([&] { *out = amperean::field_inner_product(f->field, g->field); });
}

amp_status amp_field_write_text(const amp_field* f, const char* file) {
    AMP_REQUIRE(f && file, "null argument");
    return guard([&] { amperean::write_field_text(f->field, file); });
}

void amp_field_free(amp_field* f) { delete f; }

// ---- estimators ----

amp_status amp_amperean_self(const amp_path* p, double eps, const amp_resolution* res, double* value, int* warning) {
    AMP_REQUIRE(p && value, "null argument");
    return guard([&] {
        auto e = amperean::amperean_self(p->path, eps, to_res(res));
        *value = e.value;
        if (warning) *warning = e.resolution_warning ? 1 : 0;
    });
}

amp_status amp_amperean_cross(const amp_path* w, const amp_path* w2, double eps, double eps2, const char* route,
                              const amp_resolution* res, double* value) {
    AMP_REQUIRE(w && w2 && route && value, "null argument");
    return guard([&] { *value = amperean::amperean_cross(w->path, w2->path, eps, eps2, amperean::parse_route(route), to_res(res)).value; });
}

amp_status amp_dyadic_decomposition(const amp_path* p, unsigned m, double eps, const amp_resolution* res, double* total,
                                    double* assembled, double* relative_residual) {
    AMP_REQUIRE(p, "null path");
    return guard([&] {
        auto d = amperean::dyadic_decomposition(p->path, m, eps, to_res(res));
        if (total) *total = d.total;
        if (assembled) *assembled = d.assembled;
        if (relative_residual) *relative_residual = d.relative_residual();
    });
}

// ---- accumulator ----

amp_accumulator* amp_accumulator_new(void) { return new (std::nothrow) amp_accumulator{}; }
void amp_accumulator_add(amp_accumulator* a, double x) {
    if (a) a->acc.add(x);
}
amp_status amp_accumulator_merge(amp_accumulator* into, const amp_accumulator* from) {
    AMP_REQUIRE(into && from, "null accumulator");
    into->acc.merge(from->acc);
    return AMP_OK;
}
amp_status amp_accumulator_stats(const amp_accumulator* a, size_t* n, double* mean, double* variance, double* se) {
    AMP_REQUIRE(a, "null accumulator");
    if (n) *n = a->acc.count();
    if (mean) *mean = a->acc.mean();
    if (variance) *variance = a->acc.variance();
    if (se) *se = a->acc.se();
    return AMP_OK;
}
void amp_accumulator_free(amp_accumulator* a) { delete a; }

// ---- config and campaigns ----

amp_config* amp_config_new(void) { return new (std::nothrow) amp_config{}; }
amp_status amp_config_set(amp_config* c, const char* key, const char* value) {
    AMP_REQUIRE(c && key && value, "null argument");
    return guard([&] { c->cfg.set(key, value); });
}
void amp_config_free(amp_config* c) { delete c; }

size_t amp_campaign_count(void) { return amperean::campaign_names().size(); }
const char* amp_campaign_name(size_t i) {
    const auto& n = amperean::campaign_names();
    return i < n.size() ? n[i].c_str() : nullptr;
}

amp_status amp_campaign_run(const char* name, const amp_config* c, amp_run** out) {
    AMP_REQUIRE(name && out, "null argument");
    *out = nullptr;
    return guard([&] {
        auto r = std::make_unique<amp_run>();
        r->result = amperean::run_campaign(name, c ? c->cfg : amperean::Config{});
        for (const auto& t : r->result.tables) r->tables.push_back({&t});
        for (const auto& [k, v] : r->result.config.values()) r->config.emplace_back(k, v);
        *out = r.release();
    });
}

const char* amp_run_summary(const amp_run* r) { return r ? r->result.summary_json.c_str() : ""; }
size_t amp_run_config_count(const amp_run* r) { return r ? r->config.size() : 0; }
amp_status amp_run_config_entry(const amp_run* r, size_t i, const char** key, const char** value) {
    AMP_REQUIRE(r && i < r->config.size(), "config entry out of range");
    if (key) *key = r->config[i].first.c_str();
    if (value) *value = r->config[i].second.c_str();
    return AMP_OK;
}
size_t amp_run_table_count(const amp_run* r) { return r ? r->tables.size() : 0; }
const amp_table* amp_run_table(const amp_run* r, size_t i) { return r && i < r->tables.size() ? &r->tables[i] : nullptr; }
size_t amp_run_check_count(const amp_run* r) { return r ? r->result.checks.size() : 0; }
amp_status amp_run_check(const amp_run* r, size_t i, const char** name, int* pass, const char** detail) {
    AMP_REQUIRE(r && i < r->result.checks.size(), "check index out of range");
    const auto& c = r->result.checks[i];
    if (name) *name = c.name.c_str();
    if (pass) *pass = c.pass ? 1 : 0;
    if (detail) *detail = c.detail.c_str();
    return AMP_OK;
}

amp_status amp_run_write(const amp_run* r, const char* dir, const char* started, double seconds, unsigned threads,
                         const char* const* argv, size_t argc) {
    AMP_REQUIRE(r && dir, "null argument");
    return guard([&] {
        amperean::RunInfo info;
        info.started = started ? started : "";
        info.seconds = seconds;
        info.threads = threads;
        for (size_t i = 0; i < argc; ++i)
            if (argv[i]) info.command.emplace_back(argv[i]);
        amperean::write_run(r->result, info, dir);
    });
}

void amp_run_free(amp_run* r) { delete r; }

// ---- tables ----

const char* amp_table_name(const amp_table* t) { return t ? t->table->name().c_str() : ""; }
size_t amp_table_rows(const amp_table* t) { return t ? t->table->rows() : 0; }
size_t amp_table_columns(const amp_table* t) { return t ? t->table->columns().size() : 0; }
const char* amp_table_column_name(const amp_table* t, size_t c) {
    return t && c < t->table->columns().size() ? t->table->columns()[c].name.c_str() : nullptr;
}
amp_status amp_table_real(const amp_table* t, size_t r, size_t c, double* out) {
    AMP_REQUIRE(t && out, "null argument");
    if (r >= t->table->rows() || c >= t->table->columns().size()) return fail(AMP_ERR_INVALID_ARGUMENT, "cell out of range");
    return guard([&] { *out = t->table->real(r, c); });
}
const char* amp_table_cell(const amp_table* t, size_t r, size_t c) {
    if (!t || r >= t->table->rows() || c >= t->table->columns().size()) {
        g_error = "cell out of range";
        return nullptr;
    }
    g_cell = t->table->format(r, c);
    return g_cell.c_str();
}
amp_status amp_table_write_csv(const amp_table* t, const char* file) {
    AMP_REQUIRE(t && file, "null argument");
    return guard([&] { t->table->write_csv(file); });
}

// ---- verify ----

amp_status amp_verify_run(const char* dir, double fraction, amp_verify** out) {
    AMP_REQUIRE(dir && out, "null argument");
    AMP_REQUIRE(fraction > 0 && fraction <= 1, "fraction must lie in (0, 1]");
    *out = nullptr;
    return guard([&] { *out = new amp_verify{amperean::verify_run(dir, fraction)}; });
}
const char* amp_verify_campaign(const amp_verify* v) { return v ? v->report.campaign.c_str() : ""; }
size_t amp_verify_units(const amp_verify* v) { return v ? v->report.units_checked : 0; }
size_t amp_verify_rows(const amp_verify* v) { return v ? v->report.rows_checked : 0; }
size_t amp_verify_diff_count(const amp_verify* v) { return v ? v->report.diffs.size() : 0; }
const char* amp_verify_diff(const amp_verify* v, size_t i) {
    return v && i < v->report.diffs.size() ? v->report.diffs[i].c_str() : nullptr;
}
size_t amp_verify_check_count(const amp_verify* v) { return v ? v->report.checks.size() : 0; }
amp_status amp_verify_check(const amp_verify* v, size_t i, const char** name, int* pass, const char** detail) {
    AMP_REQUIRE(v && i < v->report.checks.size(), "check index out of range");
    const auto& c = v->report.checks[i];
    if (name) *name = c.name.c_str();
    if (pass) *pass = c.pass ? 1 : 0;
    if (detail) *detail = c.detail.c_str();
    return AMP_OK;
}
void amp_verify_free(amp_verify* v) { delete v; }

}  // extern "C"
