// Command-line front end. Talks to the core only through the C interface.
#include "slung_c.h"

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kPass = 0;
constexpr int kGateFail = 1;
constexpr int kError = 2;

int report(slung_status s, const char* what)
{
    std::fprintf(stderr, "slungctl: %s: %s\n", what, slung_last_error());
    return s == SLUNG_OK ? kPass : kError;
}

std::string take(char* p)
{
    std::string s = p ? p : "";
    slung_free(p);
    return s;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"slung-load formation simulator"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "simulate one configuration and write artifacts");
    std::string config_path, variant, out_dir = "out/run";
    std::vector<std::string> sets;
    bool full_trace = false, schema = false, dump = false;
    run->add_option("config", config_path, "key = value config file");
    run->add_option("--variant", variant, "start from a built-in variant (V1..V6)");
    run->add_option("--set", sets, "override, key=value (repeatable)");
    run->add_option("-o,--out", out_dir, "output directory");
    run->add_flag("--full-trace", full_trace, "also write the full-rate trace");
    run->add_flag("--schema", schema, "print the config schema and exit");
    run->add_flag("--dump-config", dump, "print the resolved config and exit");

    // campaign
    auto* camp = app.add_subcommand("campaign", "run the campaign matrix");
    std::string selection = "all", camp_out = "out/campaign";
    int jobs = 1;
    camp->add_option("-s,--select", selection, "all, or comma list of groups/tags");
    camp->add_option("-o,--out", camp_out, "output directory");
    camp->add_option("-j,--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    // certify
    auto* cert = app.add_subcommand("certify", "print the stability certificate");
    std::string cert_cfg;
    std::vector<std::string> cert_sets;
    cert->add_option("config", cert_cfg, "config file (defaults when omitted)");
    cert->add_option("--set", cert_sets, "override, key=value (repeatable)");

    // gates
    auto* gates = app.add_subcommand("gates", "domain gates and thresholds from a run directory");
    std::string gates_dir;
    gates->add_option("run_dir", gates_dir, "run directory")->required();

    // metrics
    auto* met = app.add_subcommand("metrics", "recompute metrics from stored traces");
    std::string met_dir;
    bool check = false;
    met->add_option("run_dir", met_dir, "run directory")->required();
    met->add_flag("--check", check, "compare with the stored metrics.json byte for byte");

    CLI11_PARSE(app, argc, argv);

    auto load = [](const std::string& path, const std::string& var, const std::vector<std::string>& kv,
                   slung_config** cfg) -> slung_status {
        slung_status s;
        if (!var.empty()) s = slung_config_variant(var.c_str(), cfg);
        else s = slung_config_default(cfg);
        if (s != SLUNG_OK) return s;
        if (!path.empty()) {
            std::ifstream probe(path);
            if (!probe) {
                std::fprintf(stderr, "slungctl: cannot open %s\n", path.c_str());
                return SLUNG_E_IO;
            }
            s = slung_config_apply(*cfg, read_file(path).c_str());
            if (s != SLUNG_OK) return s;
        }
        for (const auto& item : kv) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) {
                std::fprintf(stderr, "slungctl: --set expects key=value, got '%s'\n", item.c_str());
                return SLUNG_E_ARG;
            }
            s = slung_config_set(*cfg, item.substr(0, eq).c_str(), item.substr(eq + 1).c_str());
            if (s != SLUNG_OK) return s;
        }
        return SLUNG_OK;
    };

    if (*run) {
        if (schema) {
            char* out = nullptr;
            if (slung_config_schema(&out) != SLUNG_OK) return report(SLUNG_E_INTERNAL, "schema");
            std::cout << take(out) << "\n";
            return kPass;
        }
        slung_config* cfg = nullptr;
        slung_status s = load(config_path, variant, sets, &cfg);
        if (s != SLUNG_OK) {
            slung_config_free(cfg);
            return report(s, "config");
        }
        if (full_trace) slung_config_set(cfg, "full_rate_trace", "on");
        if (dump) {
            char* out = nullptr;
            slung_config_serialize(cfg, &out);
            std::cout << take(out);
            slung_config_free(cfg);
            return kPass;
        }
        slung_run* r = nullptr;
        s = slung_run_execute(cfg, &r);
        slung_config_free(cfg);
        if (!r) return report(s, "run");
        int code = kPass;
        if (s != SLUNG_OK) {
            std::fprintf(stderr, "slungctl: run failed: %s\n", slung_last_error());
            code = kError;
        }
        if (slung_run_write(r, out_dir.c_str()) != SLUNG_OK) {
            std::fprintf(stderr, "slungctl: %s\n", slung_last_error());
            code = kError;
        }
        char* js = nullptr;
        slung_run_json(r, &js);
        std::cout << take(js) << "\n";
        if (code == kPass && !slung_run_gates_pass(r)) code = kGateFail;
        slung_run_free(r);
        return code;
    }

    if (*camp) {
        slung_campaign* c = nullptr;
        auto progress = [](const char* tag, int ok, double wall, void*) {
            std::fprintf(stderr, "%-24s %s %6.1fs\n", tag, ok ? "ok  " : "FAIL", wall);
        };
        const slung_status s = slung_campaign_execute(selection.c_str(), camp_out.c_str(), jobs, progress, nullptr, &c);
        if (!c) return report(s, "campaign");
        char* js = nullptr;
        slung_campaign_summary_json(c, &js);
        std::cout << take(js) << "\n";
        int code = kPass;
        if (s != SLUNG_OK || slung_campaign_errors(c) > 0) code = kError;
        else if (!slung_campaign_pass(c)) code = kGateFail;
        slung_campaign_free(c);
        return code;
    }

    if (*cert) {
        slung_config* cfg = nullptr;
        slung_status s = load(cert_cfg, "", cert_sets, &cfg);
        if (s != SLUNG_OK) {
            slung_config_free(cfg);
            return report(s, "config");
        }
        char* js = nullptr;
        s = slung_certify_json(cfg, &js);
        slung_config_free(cfg);
        if (s != SLUNG_OK) return report(s, "certify");
        std::cout << take(js) << "\n";
        return kPass;
    }

    if (*gates) {
        char* js = nullptr;
        int pass = 0;
        const slung_status s = slung_gates_from_dir(gates_dir.c_str(), &js, &pass);
        if (s != SLUNG_OK) return report(s, "gates");
        std::cout << take(js) << "\n";
        return pass ? kPass : kGateFail;
    }

    if (*met) {
        char* js = nullptr;
        const slung_status s = slung_metrics_recompute(met_dir.c_str(), &js);
        if (s != SLUNG_OK) return report(s, "metrics");
        const std::string fresh = take(js);
        std::cout << fresh;
        if (check) {
            const std::string stored = read_file(met_dir + "/metrics.json");
            if (stored != fresh) {
                std::fprintf(stderr, "slungctl: recomputed metrics differ from stored metrics.json\n");
                return kGateFail;
            }
        }
        return kPass;
    }
    return kError;
}
