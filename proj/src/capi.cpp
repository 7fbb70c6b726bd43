#include "slung_c.h"

#include "slung/analysis.hpp"
#include "slung/campaign.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

struct slung_config {
    slung::RunConfig cfg;
};

struct slung_run {
    slung::RunArtifacts art;
};

struct slung_campaign {
    std::vector<slung::CampaignRun> runs;
};

namespace {

thread_local std::string g_error;

slung_status fail(slung_status s, const std::string& msg)
{
    g_error = msg;
    return s;
}

char* dup(const std::string& s)
{
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p) std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

slung_status give(const std::string& s, char** out)
{
    if (!out) return fail(SLUNG_E_ARG, "null output pointer");
    *out = dup(s);
    return *out ? SLUNG_OK : fail(SLUNG_E_INTERNAL, "out of memory");
}

template <class F>
slung_status guard(F&& f)
{
    try {
        return f();
    } catch (const slung::ConfigError& e) {
        return fail(SLUNG_E_CONFIG, e.what());
    } catch (const slung::NotHurwitzError& e) {
        return fail(SLUNG_E_NOT_HURWITZ, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(SLUNG_E_IO, e.what());
    } catch (const std::exception& e) {
        return fail(SLUNG_E_INTERNAL, e.what());
    }
}

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::filesystem::filesystem_error("cannot read", p, std::make_error_code(std::errc::no_such_file_or_directory));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

slung::RunArtifacts artifacts_from_dir(const char* run_dir)
{
    namespace fs = std::filesystem;
    const fs::path dir(run_dir);
    slung::RunArtifacts a;
    a.config = slung::parse_config(read_file(dir / "config.cfg"));
    const fs::path full = dir / "trace_full.csv";
    a.trace = slung::read_trace_csv(read_file(fs::exists(full) ? full : dir / "trace.csv"));
    a.t_end = a.trace.t.empty() ? 0.0 : a.trace.t.back();
    a.ok = a.t_end >= a.config.sim.duration - 1e-9;
    std::vector<slung::FaultEvent> seen;
    for (const auto& f : slung::snapped_faults(a.config))
        if (f.t_star <= a.t_end + 1e-12) seen.push_back(f);
    a.metrics = slung::compute_metrics(a.trace, seen, slung::metrics_options(a.config));
    return a;
}

} // namespace

extern "C" {

const char* slung_last_error(void)
{
    return g_error.c_str();
}

int slung_schema_version(void)
{
    return slung::kSchemaVersion;
}

void slung_free(void* p)
{
    std::free(p);
}

slung_status slung_config_default(slung_config** out)
{
    if (!out) return fail(SLUNG_E_ARG, "null output pointer");
    return guard([&] {
        auto* c = new slung_config;
        slung::resolve(c->cfg);
        *out = c;
        return SLUNG_OK;
    });
}

slung_status slung_config_variant(const char* tag, slung_config** out)
{
    if (!tag || !out) return fail(SLUNG_E_ARG, "null argument");
    return guard([&] {
        *out = new slung_config{slung::variant_config(tag)};
        return SLUNG_OK;
    });
}

slung_status slung_config_load(const char* path, slung_config** out)
{
    if (!path || !out) return fail(SLUNG_E_ARG, "null argument");
    return guard([&] {
        std::ifstream in(path);
        if (!in) return fail(SLUNG_E_IO, std::string("cannot open config file '") + path + "'");
        *out = new slung_config{slung::load_config(path)};
        return SLUNG_OK;
    });
}

slung_status slung_config_apply(slung_config* cfg, const char* text)
{
    if (!cfg || !text) return fail(SLUNG_E_ARG, "null argument");
    return guard([&] {
        cfg->cfg = slung::parse_config(text, cfg->cfg);
        return SLUNG_OK;
    });
}

slung_status slung_config_set(slung_config* cfg, const char* key, const char* value)
{
    if (!cfg || !key || !value) return fail(SLUNG_E_ARG, "null argument");
    const std::string line = std::string(key) + " = " + value;
    return slung_config_apply(cfg, line.c_str());
}

slung_status slung_config_serialize(const slung_config* cfg, char** out)
{
    if (!cfg) return fail(SLUNG_E_ARG, "null config");
    return guard([&] { return give(slung::serialize_config(cfg->cfg), out); });
}

slung_status slung_config_schema(char** out)
{
    return guard([&] {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& k : slung::config_schema())
            j.push_back({{"name", k.name}, {"type", k.type}, {"doc", k.doc}});
        return give(j.dump(2), out);
    });
}

void slung_config_free(slung_config* cfg)
{
    delete cfg;
}

slung_status slung_run_execute(const slung_config* cfg, slung_run** out)
{
    if (!cfg || !out) return fail(SLUNG_E_ARG, "null argument");
    return guard([&] {
        auto* r = new slung_run{slung::run(cfg->cfg)};
        *out = r;
        if (!r->art.ok) return fail(SLUNG_E_RUN, r->art.error);
        return SLUNG_OK;
    });
}

int slung_run_ok(const slung_run* run)
{
    return run && run->art.ok ? 1 : 0;
}

int slung_run_gates_pass(const slung_run* run)
{
    if (!run) return 0;
    return slung::gates_json(run->art)["pass"].get<bool>() ? 1 : 0;
}

uint64_t slung_run_hash(const slung_run* run)
{
    return run ? run->art.hash : 0;
}

slung_status slung_run_write(const slung_run* run, const char* dir)
{
    if (!run || !dir) return fail(SLUNG_E_ARG, "null argument");
    return guard([&] {
        try {
            slung::write_artifacts(run->art, dir);
        } catch (const std::runtime_error& e) {
            return fail(SLUNG_E_IO, e.what());
        }
        return SLUNG_OK;
    });
}

slung_status slung_run_json(const slung_run* run, char** out)
{
    if (!run) return fail(SLUNG_E_ARG, "null run");
    return guard([&] { return give(slung::run_json(run->art).dump(2), out); });
}

slung_status slung_run_metrics_json(const slung_run* run, char** out)
{
    if (!run) return fail(SLUNG_E_ARG, "null run");
    return guard([&] { return give(slung::metrics_json(run->art.metrics).dump(2) + "\n", out); });
}

void slung_run_free(slung_run* run)
{
    delete run;
}

slung_status slung_campaign_execute(const char* selection, const char* out_dir, int jobs,
                                    slung_progress_fn progress, void* user, slung_campaign** out)
{
    if (!out) return fail(SLUNG_E_ARG, "null output pointer");
    return guard([&] {
        const auto entries = slung::campaign_matrix(selection ? selection : "all");
        auto cb = [&](const slung::CampaignRun& r) {
            if (progress) progress(r.entry.tag.c_str(), r.ok ? 1 : 0, r.wall_seconds, user);
        };
        auto* c = new slung_campaign;
        c->runs = slung::run_campaign(entries, out_dir ? out_dir : "", jobs, cb);
        *out = c;
        if (out_dir && *out_dir) {
            std::ofstream s(std::filesystem::path(out_dir) / "summary.json");
            if (!s) return fail(SLUNG_E_IO, "cannot write summary.json");
            s << slung::campaign_summary(c->runs).dump(2) << "\n";
        }
        return SLUNG_OK;
    });
}

slung_status slung_campaign_summary_json(const slung_campaign* c, char** out)
{
    if (!c) return fail(SLUNG_E_ARG, "null campaign");
    return guard([&] { return give(slung::campaign_summary(c->runs).dump(2), out); });
}

int slung_campaign_pass(const slung_campaign* c)
{
    return c && slung::campaign_pass(c->runs) ? 1 : 0;
}

int slung_campaign_errors(const slung_campaign* c)
{
    if (!c) return 0;
    int n = 0;
    for (const auto& r : c->runs) n += r.ok ? 0 : 1;
    return n;
}

void slung_campaign_free(slung_campaign* c)
{
    delete c;
}

slung_status slung_certify_json(const slung_config* cfg, char** out)
{
    return guard([&] {
        slung::RunConfig c = cfg ? cfg->cfg : slung::RunConfig{};
        slung::resolve(c);
        return give(slung::certificate_json(c.ctrl, c.sim, c.l1.gamma, c.l1.ts, c.l1.omega_c).dump(2), out);
    });
}

slung_status slung_metrics_recompute(const char* run_dir, char** out)
{
    if (!run_dir) return fail(SLUNG_E_ARG, "null run directory");
    return guard([&] {
        const slung::RunArtifacts a = artifacts_from_dir(run_dir);
        return give(slung::metrics_json(a.metrics).dump(2) + "\n", out);
    });
}

slung_status slung_gates_from_dir(const char* run_dir, char** out, int* pass)
{
    if (!run_dir) return fail(SLUNG_E_ARG, "null run directory");
    return guard([&] {
        const slung::RunArtifacts a = artifacts_from_dir(run_dir);
        const nlohmann::json g = slung::gates_json(a);
        if (pass) *pass = g["pass"].get<bool>() ? 1 : 0;
        return give(g.dump(2), out);
    });
}

} // extern "C"
