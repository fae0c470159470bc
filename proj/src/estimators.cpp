#include "amperean/estimators.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "amperean/parallel.hpp"
#include "amperean/rng.hpp"
#include "amperean/stochint.hpp"

namespace amperean {

const char* route_name(Route r) {
    switch (r) {
        case Route::Grid: return "grid";
        case Route::StratIterated: return "strat_iterated";
        case Route::ItoMinusLocalTime: return "ito_minus_localtime";
    }
    return "?";
}

Route parse_route(const std::string& name) {
    if (name == "grid") return Route::Grid;
    if (name == "strat_iterated") return Route::StratIterated;
    if (name == "ito_minus_localtime") return Route::ItoMinusLocalTime;
    throw Error(ErrorCode::Config, "unknown route '" + name + "'");
}

GridOptions Resolution::grid_options(double eps) const {
    GridOptions o;
    o.h = h_for(eps);
    o.jitter = jitter;
    return o;
}

namespace {

double max_step(const PlanarPath& p) {
    auto t = p.times();
    double m = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) m = std::max(m, t[i] - t[i - 1]);
    return m;
}

GridField loop_field(const PlanarPath& p, double eps, const GridSpec& spec, const Resolution& res) {
    return mollified_field_convolution(LoopView{p.points()}, eps, spec, res.K, res.sub_rows);
}

double self_on_own_grid(const PlanarPath& p, double eps, const Resolution& res) {
    GridSpec spec = grid_for_loop(LoopView{p.points()}, eps, res.K, res.grid_options(eps));
    GridField f = loop_field(p, eps, spec, res);
    return field_inner_product(f, f);
}

}  // namespace

AmpereanEstimate amperean_self(const PlanarPath& path, double eps, const Resolution& res, std::uint64_t seed) {
    if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
    GridSpec spec = grid_for_loop(LoopView{path.points()}, eps, res.K, res.grid_options(eps));
    GridField f = loop_field(path, eps, spec, res);
    AmpereanEstimate e;
    e.value = field_inner_product(f, f);
    e.route = Route::Grid;
    e.eps = e.eps2 = eps;
    e.h = spec.h;
    e.dt = max_step(path);
    e.seed = seed;
    e.resolution_warning = spec.h > 0.25 * eps || e.dt > 0.25 * eps * eps;
    return e;
}

namespace {

GridSpec shared_grid(const PlanarPath& W, const PlanarPath& W2, double eps, double eps2, const Resolution& res) {
    std::array<std::span<const Point>, 2> sets{W.points(), W2.points()};
    GridOptions o = res.grid_options(std::min(eps, eps2));
    return grid_for_points(sets, std::max(eps, eps2), res.K, o);
}

AmpereanEstimate blank(Route r, const PlanarPath& W, const PlanarPath& W2, double eps, double eps2, std::uint64_t seed) {
    AmpereanEstimate e;
    e.route = r;
    e.eps = eps;
    e.eps2 = eps2;
    e.dt = std::max(max_step(W), max_step(W2));
    e.seed = seed;
    double lo = std::min(eps, eps2);
    e.resolution_warning = e.dt > 0.25 * lo * lo;
    return e;
}

}  // namespace

AmpereanEstimate amperean_cross(const PlanarPath& W, const PlanarPath& W2, double eps, double eps2, Route route,
                                const Resolution& res, std::uint64_t seed) {
    if (!(eps > 0) || !(eps2 > 0)) throw Error(ErrorCode::InvalidArgument, "eps and eps2 must be positive");
    AmpereanEstimate e = blank(route, W, W2, eps, eps2, seed);
    switch (route) {
        case Route::Grid: {
            GridSpec spec = shared_grid(W, W2, eps, eps2, res);
            e.value = field_inner_product(loop_field(W, eps, spec, res), loop_field(W2, eps2, spec, res));
            e.h = spec.h;
            e.resolution_warning = e.resolution_warning || spec.h > 0.25 * std::min(eps, eps2);
            break;
        }
        case Route::StratIterated:
            e.value = strat_double_integral(LoopView{W.points()}, LoopView{W2.points()}, ScalarKernel::mollified_green(eps, eps2, res.K));
            break;
        case Route::ItoMinusLocalTime: {
            double ito = ito_double_integral(LoopView{W.points()}, LoopView{W2.points()}, ScalarKernel::mollified_green(eps, eps2, res.K));
            e.value = ito - 0.25 * mollified_intersection_time(W, W2, eps, eps2, res.K);
            break;
        }
    }
    return e;
}

CrossRoutes amperean_cross_all(const PlanarPath& W, const PlanarPath& W2, double eps, double eps2, const Resolution& res,
                               std::uint64_t seed) {
    if (!(eps > 0) || !(eps2 > 0)) throw Error(ErrorCode::InvalidArgument, "eps and eps2 must be positive");
    CrossRoutes out;
    out.grid = blank(Route::Grid, W, W2, eps, eps2, seed);
    GridSpec spec = shared_grid(W, W2, eps, eps2, res);
    GridField f1 = loop_field(W, eps, spec, res), f2 = loop_field(W2, eps2, spec, res);
    out.grid.value = field_inner_product(f1, f2);
    out.grid.h = spec.h;
    out.grid.resolution_warning = out.grid.resolution_warning || spec.h > 0.25 * std::min(eps, eps2);
    out.self_w = field_inner_product(f1, f1);
    out.self_w2 = field_inner_product(f2, f2);

    DoubleIntegrals d = double_integrals(W, W2, eps, eps2, res.K);
    out.strat = blank(Route::StratIterated, W, W2, eps, eps2, seed);
    out.strat.value = d.strat;
    out.ito = blank(Route::ItoMinusLocalTime, W, W2, eps, eps2, seed);
    out.ito.value = d.corrected();
    out.intersection = d.intersection;
    return out;
}

DyadicComponents dyadic_decomposition(const PlanarPath& path, unsigned m, double eps, const Resolution& res) {
    if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
    if (m >= 63 || path.steps() % (std::uint64_t{1} << m) != 0)
        throw Error(ErrorCode::Resolution, "2^m must divide the number of steps");
    GridSpec spec = grid_for_loop(LoopView{path.points()}, eps, res.K, res.grid_options(eps));

    DyadicComponents out;
    out.m = m;
    out.eps = eps;
    out.h = spec.h;

    std::vector<PlanarPath> level{path};
    std::vector<GridField> fields{loop_field(path, eps, spec, res)};
    out.total = field_inner_product(fields[0], fields[0]);
    CompensatedSum assembled, scale;
    scale.add(std::abs(out.total));

    for (unsigned k = 0; k < m; ++k) {
        std::size_t count = level.size();
        std::vector<PlanarPath> next(2 * count);
        std::vector<GridField> next_fields(2 * count);
        std::vector<DyadicTerm> terms(count);
        parallel_for(count, [&](std::size_t q) {
            const PlanarPath& sub = level[q];
            DyadicIndex idx(k, q + 1);
            PlanarPath minus = restrict_path(path, idx.minus());
            PlanarPath plus = restrict_path(path, idx.plus());
            auto pts = sub.points();
            Triangle tri{pts.front(), pts[pts.size() / 2], pts.back()};
            GridField fm = loop_field(minus, eps, spec, res);
            GridField fp = loop_field(plus, eps, spec, res);
            GridField fd = triangle_field_convolution(tri, eps, spec, res.K, res.sub_rows);
            DyadicTerm t;
            t.idx = idx;
            t.B = field_inner_product(fm, fp);
            t.T = field_inner_product(fd, fd);
            t.c_minus = field_inner_product(fm, fd);
            t.c_plus = field_inner_product(fp, fd);
            terms[q] = t;
            next[2 * q] = std::move(minus);
            next[2 * q + 1] = std::move(plus);
            next_fields[2 * q] = std::move(fm);
            next_fields[2 * q + 1] = std::move(fp);
        });
        for (const DyadicTerm& t : terms) {
            assembled.add(-t.T);
            assembled.add(2.0 * t.B);
            assembled.add(2.0 * t.C());
            scale.add(std::abs(t.T) + 2.0 * std::abs(t.B) + 2.0 * std::abs(t.C()));
            out.terms.push_back(t);
        }
        level = std::move(next);
        fields = std::move(next_fields);
    }
    for (const GridField& f : fields) {
        double a = field_inner_product(f, f);
        out.leaves.push_back(a);
        assembled.add(a);
        scale.add(std::abs(a));
    }
    out.assembled = assembled.value();
    out.residual = out.total - out.assembled;
    out.scale = scale.value();
    return out;
}

double triangle_term(const PlanarPath& path, DyadicIndex idx, double eps, const Resolution& res) {
    PlanarPath sub = restrict_path(path, idx);
    auto pts = sub.points();
    if (pts.size() < 3) throw Error(ErrorCode::Resolution, "sub-path too short for a triangle");
    Triangle tri{pts.front(), pts[pts.size() / 2], pts.back()};
    std::array<Point, 3> corners{tri.a, tri.b, tri.c};
    GridSpec spec = grid_for_loop(LoopView{corners}, eps, res.K, res.grid_options(eps));
    GridField f = triangle_field_convolution(tri, eps, spec, res.K, res.sub_rows);
    return field_inner_product(f, f);
}

double leaf_sum(const PlanarPath& path, unsigned m, double eps, const Resolution& res) {
    if (m >= 63 || path.steps() % (std::uint64_t{1} << m) != 0)
        throw Error(ErrorCode::Resolution, "2^m must divide the number of steps");
    std::uint64_t n = std::uint64_t{1} << m;
    CompensatedSum acc;
    for (std::uint64_t j = 1; j <= n; ++j) acc.add(self_on_own_grid(restrict_path(path, {m, j}), eps, res));
    return acc.value();
}

void MCAccumulator::add(double x) {
    MCAccumulator one;
    one.n_ = 1;
    one.mean_ = x;
    merge(one);
}

// pairwise update of the central moments up to order four
void MCAccumulator::merge(const MCAccumulator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    double na = static_cast<double>(n_), nb = static_cast<double>(o.n_), n = na + nb;
    double d = o.mean_ - mean_;
    double d2 = d * d, d3 = d2 * d, d4 = d2 * d2;
    double m2 = m2_ + o.m2_ + d2 * na * nb / n;
    double m3 = m3_ + o.m3_ + d3 * na * nb * (na - nb) / (n * n) + 3.0 * d * (na * o.m2_ - nb * m2_) / n;
    double m4 = m4_ + o.m4_ + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                6.0 * d2 * (na * na * o.m2_ + nb * nb * m2_) / (n * n) + 4.0 * d * (na * o.m3_ - nb * m3_) / n;
    mean_ += d * nb / n;
    m2_ = m2;
    m3_ = m3;
    m4_ = m4;
    n_ += o.n_;
}

double MCAccumulator::variance_se() const {
    if (n_ < 4) return 0.0;
    double n = static_cast<double>(n_);
    double mu2 = m2_ / n, mu4 = m4_ / n;
    return std::sqrt(std::max(0.0, (mu4 - mu2 * mu2 * (n - 3.0) / (n - 1.0)) / n));
}

ExpMoment exp_moment(std::span<const double> samples, double beta, double normaliser) {
    if (!(normaliser > 0)) throw Error(ErrorCode::InvalidArgument, "normaliser must be positive");
    ExpMoment out;
    out.beta = beta;
    out.n = samples.size();
    MCAccumulator all, half;
    double biggest = 0.0;
    CompensatedSum sum;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double a = beta * samples[i] / normaliser;
        if (a > kExpClamp) {
            a = kExpClamp;
            ++out.clamped;
        }
        double v = std::exp(a);
        all.add(v);
        if (2 * i < samples.size()) half.add(v);
        biggest = std::max(biggest, v);
        sum.add(v);
    }
    out.estimate = all.mean();
    out.se = all.se();
    out.se_half = half.se();
    out.tail_share = sum.value() > 0 ? biggest / sum.value() : 0.0;
    out.unstable = out.clamped > 0 || out.tail_share > 0.2 || (out.se_half > 0 && out.se >= 0.9 * out.se_half);
    return out;
}

CountertermFit fit_counterterm(double T, std::span<const double> eps_list, const std::vector<std::vector<double>>& values) {
    std::size_t K = eps_list.size();
    if (K < 2) throw Error(ErrorCode::Config, "need at least two eps values to fit");
    if (values.size() < 2) throw Error(ErrorCode::Config, "need at least two samples to fit");
    CountertermFit fit;
    fit.T = T;
    std::vector<MCAccumulator> acc(K);
    for (const auto& row : values) {
        if (row.size() != K) throw Error(ErrorCode::Shape, "sample row length differs from the eps list");
        for (std::size_t k = 0; k < K; ++k) acc[k].add(row[k]);
    }
    std::vector<double> x(K), w(K);
    double sw = 0, swx = 0;
    for (std::size_t k = 0; k < K; ++k) {
        CountertermPoint p{eps_list[k], acc[k].mean(), acc[k].se(), acc[k].count()};
        fit.points.push_back(p);
        x[k] = std::log(1.0 / eps_list[k]);
        w[k] = p.se > 0 ? 1.0 / (p.se * p.se) : 1.0;
        sw += w[k];
        swx += w[k] * x[k];
    }
    double xbar = swx / sw, sxx = 0;
    for (std::size_t k = 0; k < K; ++k) sxx += w[k] * (x[k] - xbar) * (x[k] - xbar);
    if (!(sxx > 0)) throw Error(ErrorCode::Config, "eps values must be distinct");
    // slope and intercept are fixed linear combinations of the means; applying the same
    // combinations per sample gives their spread including the correlation between eps values
    std::vector<double> cs(K), ci(K);
    for (std::size_t k = 0; k < K; ++k) {
        cs[k] = w[k] * (x[k] - xbar) / sxx;
        ci[k] = w[k] / sw - xbar * cs[k];
    }
    MCAccumulator slopes, intercepts;
    for (const auto& row : values) {
        CompensatedSum s, i;
        for (std::size_t k = 0; k < K; ++k) {
            s.add(cs[k] * row[k]);
            i.add(ci[k] * row[k]);
        }
        slopes.add(s.value());
        intercepts.add(i.value());
    }
    fit.slope = slopes.mean();
    fit.slope_se = slopes.se();
    fit.intercept = intercepts.mean();
    fit.intercept_se = intercepts.se();
    fit.slope_se_naive = std::sqrt(1.0 / sxx);
    return fit;
}

Vec2 seed_jitter(std::uint64_t seed, std::uint32_t tag) {
    rng::GaussianStream g(seed);
    return {g.uniform(0x6a17u, 2 * std::uint64_t{tag}), g.uniform(0x6a17u, 2 * std::uint64_t{tag} + 1)};
}

std::size_t counterterm_steps(double T, std::span<const double> eps_list, const Resolution& res) {
    double lo = *std::min_element(eps_list.begin(), eps_list.end());
    return steps_for_dt(T, res.dt_for(lo));
}

std::vector<std::vector<double>> counterterm_samples(double T, std::span<const double> eps_list, std::size_t first,
                                                     std::size_t count, std::uint64_t seed, const Resolution& res) {
    std::size_t n = counterterm_steps(T, eps_list, res);
    std::vector<std::vector<double>> out(count);
    parallel_for(count, [&](std::size_t q) {
        std::uint64_t s = rng::derive_seed(seed, first + q);
        PlanarPath W = sample_brownian(T, n, s);
        std::vector<double> row(eps_list.size());
        for (std::size_t k = 0; k < eps_list.size(); ++k) {
            Resolution r = res;
            r.jitter = seed_jitter(s, static_cast<std::uint32_t>(k));
            row[k] = amperean_self(W, eps_list[k], r, s).value;
        }
        out[q] = std::move(row);
    });
    return out;
}

CountertermFit counterterm_fit(double T, std::span<const double> eps_list, std::size_t n_samples, std::uint64_t seed,
                               const Resolution& res) {
    if (!(T > 0)) throw Error(ErrorCode::Config, "T must be positive");
    if (eps_list.size() < 4) throw Error(ErrorCode::Config, "the counterterm fit needs at least 4 eps values");
    for (std::size_t k = 1; k < eps_list.size(); ++k)
        if (!(eps_list[k] < eps_list[k - 1])) throw Error(ErrorCode::Config, "eps list must be strictly decreasing");
    if (!(eps_list.back() > 0)) throw Error(ErrorCode::Config, "eps values must be positive");
    if (n_samples < 2) throw Error(ErrorCode::Config, "need at least two samples");
    return fit_counterterm(T, eps_list, counterterm_samples(T, eps_list, 0, n_samples, seed, res));
}

CutoffSums cutoff_sums(const GridField& a, const GridField& b, int k0, int j0) {
    if (!(a.spec == b.spec)) throw Error(ErrorCode::Shape, "fields live on different grids");
    if (k0 < 0 || j0 < 0) throw Error(ErrorCode::InvalidArgument, "cut-offs must be nonnegative");
    // integer counts first, so the untruncated sum reproduces the grid inner product exactly
    long long cross = 0, sa = 0, sb = 0;
    int biggest = 0;
    for (std::size_t q = 0; q < a.values.size(); ++q) {
        if (a.mask[q] || b.mask[q]) continue;
        long long k = std::llround(a.values[q]), j = std::llround(b.values[q]);
        biggest = std::max<int>(biggest, static_cast<int>(std::max(std::llabs(k), std::llabs(j))));
        bool kin = std::llabs(k) <= k0, jin = std::llabs(j) <= j0;
        if (kin && jin) cross += k * j;
        if (kin) sa += k * k;
        if (jin) sb += j * j;
    }
    double h2 = a.spec.h * a.spec.h;
    CutoffSums out;
    out.cross = static_cast<double>(cross) * h2;
    out.self_w = static_cast<double>(sa) * h2;
    out.self_w2 = static_cast<double>(sb) * h2;
    out.max_winding = biggest;
    return out;
}

CutoffSums cutoff_sums(const PlanarPath& W, const PlanarPath& W2, const GridSpec& spec, int k0, int j0) {
    return cutoff_sums(winding_field(LoopView{W.points()}, spec), winding_field(LoopView{W2.points()}, spec), k0, j0);
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + file.string());
    return out;
}

nlohmann::json estimate_obj(const AmpereanEstimate& e) {
    return {{"route", route_name(e.route)}, {"epsilon", e.eps}, {"epsilon2", e.eps2}, {"h", e.h},
            {"dt", e.dt}, {"value", e.value}, {"seed", e.seed}, {"resolution_warning", e.resolution_warning}};
}

}  // namespace

void write_estimates_csv(std::span<const AmpereanEstimate> rows, const std::filesystem::path& file) {
    auto out = open_out(file);
    out << "route,epsilon,epsilon2,h,dt,value,seed\n";
    for (const auto& e : rows)
        out << route_name(e.route) << ',' << fmt(e.eps) << ',' << fmt(e.eps2) << ',' << fmt(e.h) << ',' << fmt(e.dt) << ','
            << fmt(e.value) << ',' << e.seed << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed for " + file.string());
}

std::string estimate_json(const AmpereanEstimate& e) { return estimate_obj(e).dump(); }

void write_fit_csv(const CountertermFit& fit, const std::filesystem::path& file) {
    auto out = open_out(file);
    out << "epsilon,mean,se,n\n";
    for (const auto& p : fit.points) out << fmt(p.eps) << ',' << fmt(p.mean) << ',' << fmt(p.se) << ',' << p.n << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed for " + file.string());
}

std::string fit_summary_json(const CountertermFit& fit) {
    nlohmann::json j{{"T", fit.T},
                     {"slope", fit.slope},
                     {"slope_se", fit.slope_se},
                     {"intercept", fit.intercept},
                     {"intercept_se", fit.intercept_se},
                     {"slope_se_naive", fit.slope_se_naive},
                     {"target_slope", fit.T / kTwoPi}};
    return j.dump();
}

}  // namespace amperean
