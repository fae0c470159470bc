// amplab: experiment runner over the amperean C API.
#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "amperean/amperean.h"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3 };

int exit_for(amp_status s) {
    switch (s) {
        case AMP_OK: return kOk;
        case AMP_ERR_CONFIG:
        case AMP_ERR_RESOLUTION:
        case AMP_ERR_INVALID_ARGUMENT: return kConfig;
        case AMP_ERR_IO: return kIo;
        default: return kFailure;
    }
}

int report(amp_status s, const std::string& what) {
    std::cerr << "amplab: " << what << " failed (" << amp_status_name(s) << "): " << amp_last_error() << "\n";
    return exit_for(s);
}

struct Common {
    std::string config_file;
    std::optional<long long> seed, samples;
    std::optional<unsigned> threads;
    std::string out = "runs";
    std::string tag;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_file, "INI file; sections become key prefixes")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "run seed (run.seed)");
    app->add_option("--samples", c.samples, "sample count (run.samples)");
    app->add_option("--threads", c.threads, "worker count; defaults to $AMPEREAN_THREADS or the hardware count");
    app->add_option("--out", c.out, "parent directory of the run directory");
    app->add_option("--tag", c.tag, "suffix of the run directory name");
    app->allow_extras();
}

// "--name value" or "--name=value"; short names are taken relative to the campaign section
std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& extras, const std::string& section) {
    std::map<std::string, std::string> out;
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& a = extras[i];
        if (a.rfind("--", 0) != 0 || a.size() < 3) throw CLI::ValidationError("unexpected argument " + a);
        std::string name = a.substr(2), value;
        auto eq = name.find('=');
        if (eq != std::string::npos) {
            value = name.substr(eq + 1);
            name = name.substr(0, eq);
        } else {
            if (i + 1 >= extras.size()) throw CLI::ValidationError("missing value for --" + name);
            value = extras[++i];
        }
        if (name.find('.') == std::string::npos) name = section + "." + name;
        out[name] = value;
    }
    return out;
}

std::map<std::string, std::string> read_ini(const std::string& file) {
    std::map<std::string, std::string> out;
    boost::property_tree::ptree tree;
    boost::property_tree::ini_parser::read_ini(file, tree);
    for (const auto& [section, node] : tree) {
        if (node.empty()) {
            out[section] = node.data();
            continue;
        }
        for (const auto& [key, leaf] : node) out[section + "." + key] = leaf.data();
    }
    return out;
}

std::string utc_stamp(const char* fmt) {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[64];
    std::strftime(buf, sizeof buf, fmt, &tm);
    return buf;
}

fs::path fresh_run_dir(const fs::path& root, const std::string& tag) {
    std::string base = utc_stamp("%Y%m%dT%H%M%SZ") + "-" + tag;
    fs::path dir = root / base;
    for (int k = 2; fs::exists(dir); ++k) dir = root / (base + "-" + std::to_string(k));
    return dir;
}

int run_campaign(const std::string& name, const Common& c, const std::vector<std::string>& extras, int argc, char** argv) {
    std::map<std::string, std::string> values;
    try {
        if (!c.config_file.empty()) values = read_ini(c.config_file);
        for (auto& [k, v] : parse_overrides(extras, name)) values[k] = v;
    } catch (const boost::property_tree::ini_parser_error& e) {
        std::cerr << "amplab: config: " << e.what() << "\n";
        return kConfig;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "amplab: " << e.what() << "\n";
        return kConfig;
    }
    if (c.seed) values["run.seed"] = std::to_string(*c.seed);
    if (c.samples) values["run.samples"] = std::to_string(*c.samples);
    if (c.threads) values["run.threads"] = std::to_string(*c.threads);
    std::string tag = c.tag.empty() ? name : c.tag;
    values["run.tag"] = tag;
    if (c.threads) amp_set_threads(*c.threads);

    amp_config* cfg = amp_config_new();
    for (const auto& [k, v] : values) amp_config_set(cfg, k.c_str(), v.c_str());
    std::string started = utc_stamp("%Y-%m-%dT%H:%M:%SZ");
    auto t0 = std::chrono::steady_clock::now();
    amp_run* run = nullptr;
    amp_status s = amp_campaign_run(name.c_str(), cfg, &run);
    amp_config_free(cfg);
    if (s != AMP_OK) return report(s, name);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::path dir = fresh_run_dir(c.out, tag);
    std::vector<const char*> args(argv, argv + argc);
    s = amp_run_write(run, dir.string().c_str(), started.c_str(), seconds, amp_threads(), args.data(), args.size());
    if (s != AMP_OK) {
        amp_run_free(run);
        return report(s, "writing " + dir.string());
    }
    std::cout << "run directory: " << dir.string() << "\n";
    std::cout << "summary: " << amp_run_summary(run) << "\n";
    for (std::size_t i = 0; i < amp_run_check_count(run); ++i) {
        const char *cn, *detail;
        int pass;
        amp_run_check(run, i, &cn, &pass, &detail);
        std::printf("  [%s] %s: %s\n", pass ? "PASS" : "FAIL", cn, detail);
    }
    std::printf("%.1f s on %u worker(s)\n", seconds, amp_threads());
    amp_run_free(run);
    return kOk;
}

int run_verify(const std::string& dir, double fraction, std::optional<unsigned> threads) {
    if (threads) amp_set_threads(*threads);
    amp_verify* v = nullptr;
    amp_status s = amp_verify_run(dir.c_str(), fraction, &v);
    if (s != AMP_OK) return report(s, "verify");
    std::printf("campaign %s: %zu unit(s), %zu row(s) recomputed on %u worker(s)\n", amp_verify_campaign(v), amp_verify_units(v),
                amp_verify_rows(v), amp_threads());
    std::size_t nd = amp_verify_diff_count(v);
    for (std::size_t i = 0; i < nd; ++i) std::printf("  DIFF %s\n", amp_verify_diff(v, i));
    std::printf("%-44s %s\n", "check", "result");
    std::printf("%-44s %s\n", "spot_check_bit_identical", nd == 0 ? "PASS" : "FAIL");
    for (std::size_t i = 0; i < amp_verify_check_count(v); ++i) {
        const char *cn, *detail;
        int pass;
        amp_verify_check(v, i, &cn, &pass, &detail);
        std::printf("%-44s %s  (%s)\n", cn, pass ? "PASS" : "FAIL", detail);
    }
    amp_verify_free(v);
    return nd == 0 ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"amplab: Monte Carlo campaigns for mollified Amperean areas of planar Brownian loops"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(amp_version()));

    const char* about[][2] = {
        {"sample", "emit Brownian paths"},
        {"field", "winding and mollified fields for one sample"},
        {"cross", "cross-term campaign over the three routes"},
        {"counterterm", "log(1/eps) counterterm fit"},
        {"decompose", "dyadic decomposition identity and triangle scaling"},
        {"smoothloop", "smooth-loop battery: grid integral against line integral"},
        {"cutoff", "truncated level-set sums next to mollified values"},
        {"oracle", "brute convolutions, mollifier defect and isometry variance"},
    };
    std::map<std::string, Common> opts;
    std::map<std::string, CLI::App*> subs;
    for (auto& a : about) {
        CLI::App* sub = app.add_subcommand(a[0], a[1]);
        add_common(sub, opts[a[0]]);
        subs[a[0]] = sub;
    }
    std::string verify_dir;
    double fraction = 0.01;
    std::optional<unsigned> verify_threads;
    CLI::App* verify = app.add_subcommand("verify", "re-run a spot check of a run directory and compare bit for bit");
    verify->add_option("dir", verify_dir, "run directory")->required()->check(CLI::ExistingDirectory);
    verify->add_option("--fraction", fraction, "share of the sample units to recompute")->check(CLI::Range(1e-6, 1.0));
    verify->add_option("--threads", verify_threads, "worker count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }
    if (verify->parsed()) return run_verify(verify_dir, fraction, verify_threads);
    for (auto& [name, sub] : subs)
        if (sub->parsed()) return run_campaign(name, opts[name], sub->remaining(), argc, argv);
    return kFailure;
}
