#include "slung/analysis.hpp"
#include "slung/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace slung {

namespace {

FaultSchedule schedule(std::initializer_list<FaultEvent> ev)
{
    FaultSchedule s;
    s.events = ev;
    return s;
}

std::string fmt_tag(double v)
{
    std::ostringstream o;
    o << v;
    return o.str();
}

} // namespace

RunConfig variant_config(const std::string& tag)
{
    RunConfig c;
    c.variant = tag;
    if (tag == "V1") {
        c.wind.enabled = false;
    } else if (tag == "V2") {
        c.wind.enabled = true;
    } else if (tag == "V3") {
        c.wind.enabled = true;
        c.faults = schedule({{12.0, 0}});
    } else if (tag == "V4") {
        c.wind.enabled = true;
        c.faults = schedule({{12.0, 0}, {17.0, 2}});
    } else if (tag == "V5") {
        c.wind.enabled = true;
        c.faults = schedule({{12.0, 0}, {22.0, 2}});
    } else if (tag == "V6") {
        c = variant_config("V4");
        c.variant = tag;
        c.modes.mpc = true;
        c.modes.l1 = true;
        c.modes.reshape = true;
        c.mpc.horizon = 10;
        c.mpc.t_max = 100.0;
    } else {
        throw ConfigError("unknown variant '" + tag + "'");
    }
    resolve(c);
    return c;
}

std::vector<CampaignEntry> campaign_matrix(const std::string& selection)
{
    std::vector<CampaignEntry> all;
    auto add = [&](std::string tag, std::string group, RunConfig cfg, double sweep, std::string mode) {
        cfg.variant = tag;
        resolve(cfg);
        all.push_back({std::move(tag), std::move(group), std::move(cfg), sweep, std::move(mode)});
    };

    for (const char* v : {"V1", "V2", "V3", "V4", "V5", "V6"}) add(v, "V", variant_config(v), 0.0, "baseline");

    for (const char* v : {"V3", "V4", "V5"}) {
        RunConfig c = variant_config(v);
        c.modes.ff = false;
        add(std::string("P2A-") + v, "P2A", c, 0.0, "ff-off");
    }

    for (double m : {2.5, 3.0, 3.5, 3.9}) {
        for (const char* mode : {"ff-on", "ff-off", "ff-off+l1"}) {
            RunConfig c = variant_config("V1");
            c.sim.payload_mass = m;
            c.modes.ff = std::string(mode) == "ff-on";
            c.modes.l1 = std::string(mode) == "ff-off+l1";
            add("P2B-m" + fmt_tag(m) + "-" + mode, "P2B", c, m, mode);
        }
    }

    for (double tm : {60.0, 70.0, 80.0, 90.0, 100.0}) {
        RunConfig c = variant_config("V4");
        c.modes.mpc = true;
        c.mpc.horizon = 10;
        c.mpc.t_max = tm;
        add("P2C-T" + fmt_tag(tm), "P2C", c, tm, "mpc");
    }

    for (double period : {6.0, 8.0, 10.0, 12.0}) {
        for (bool rs : {false, true}) {
            RunConfig c = variant_config("V4");
            c.ref.period = period;
            c.modes.reshape = rs;
            add("P2D-T" + fmt_tag(period) + (rs ? "-reshape" : "-fixed"), "P2D", c, period,
                rs ? "reshape" : "fixed");
        }
    }

    {
        const double tp = pendulum_period(SimParams{});
        for (double r : {0.5, 0.75, 1.0, 1.25, 1.5, 2.0}) {
            RunConfig c = variant_config("V4");
            c.faults.events[1].t_star = 12.0 + r * tp;
            c.faults.subthreshold = r < 1.0;
            add("DWELL-r" + fmt_tag(r), "DWELL", c, r, c.faults.subthreshold ? "probe" : "admissible");
        }
    }

    for (double g : {500.0, 2e3, 1e4, 3e4, 5e4, 8e4}) {
        RunConfig c = variant_config("V1");
        c.sim.payload_mass = 3.9;
        c.modes.ff = false;
        c.modes.l1 = true;
        c.l1.gamma = g;
        add("GAMMA-" + fmt_tag(g), "GAMMA", c, g, "rescue");
    }

    if (selection.empty() || selection == "all") return all;
    std::set<std::string> want;
    {
        std::stringstream ss(selection);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
            if (!item.empty()) want.insert(item);
        }
    }
    std::vector<CampaignEntry> out;
    std::set<std::string> matched;
    for (auto& e : all) {
        if (want.count(e.group) || want.count(e.tag)) {
            matched.insert(want.count(e.group) ? e.group : e.tag);
            out.push_back(e);
        }
    }
    for (const auto& w : want)
        if (!matched.count(w)) throw ConfigError("campaign: unknown group or tag '" + w + "'");
    return out;
}

std::vector<CampaignRun> run_campaign(const std::vector<CampaignEntry>& entries,
                                      const std::string& out_dir, int jobs,
                                      const std::function<void(const CampaignRun&)>& progress)
{
    std::vector<CampaignRun> runs(entries.size());
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= entries.size()) return;
            CampaignRun r;
            r.entry = entries[i];
            try {
                RunArtifacts a = run(entries[i].cfg);
                r.ok = a.ok;
                r.error = a.error;
                r.metrics = a.metrics;
                r.stats = a.stats;
                r.hash = a.hash;
                r.wall_seconds = a.stats.wall_seconds;
                if (entries[i].cfg.modes.mpc)
                    r.time_over_ceiling = time_over(a.trace.tension, a.trace.active, a.trace.t,
                                                    entries[i].cfg.window, entries[i].cfg.mpc.t_max);
                if (!out_dir.empty()) {
                    r.dir = (std::filesystem::path(out_dir) / entries[i].tag).string();
                    write_artifacts(a, r.dir);
                }
            } catch (const std::exception& e) {
                r.ok = false;
                r.error = e.what();
            }
            std::lock_guard<std::mutex> lk(mu);
            runs[i] = std::move(r);
            if (progress) progress(runs[i]);
        }
    };
    jobs = std::max(1, std::min<int>(jobs, int(entries.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return runs;
}

namespace {

const CampaignRun* find(const std::vector<CampaignRun>& runs, const std::string& tag)
{
    for (const auto& r : runs)
        if (r.entry.tag == tag) return &r;
    return nullptr;
}

bool thresholds_pass(const RunMetrics& m)
{
    return m.rmse.d3 <= 0.35 && m.peak_sag_mm <= 100.0 && m.peak_tension <= 120.0;
}

nlohmann::json nz(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

} // namespace

nlohmann::json campaign_summary(const std::vector<CampaignRun>& runs)
{
    using nlohmann::json;
    json j;
    j["schema_version"] = kSchemaVersion;

    json all = json::array();
    for (const auto& r : runs) {
        json row = {{"tag", r.entry.tag},
                    {"group", r.entry.group},
                    {"mode", r.entry.mode},
                    {"sweep", r.entry.sweep},
                    {"ok", r.ok},
                    {"error", r.error},
                    {"dir", r.dir},
                    {"wall_seconds", r.wall_seconds},
                    {"rmse_m", nz(r.metrics.rmse.d3)},
                    {"alt_rmse_m", nz(r.metrics.rmse.z)},
                    {"peak_sag_mm", nz(r.metrics.peak_sag_mm)},
                    {"rms_sag_mm", nz(r.metrics.rms_sag_mm)},
                    {"peak_tension_N", nz(r.metrics.peak_tension)},
                    {"h1a_ms", nz(r.metrics.gates.h1a_ms)},
                    {"h1b_pct", nz(r.metrics.gates.h1b_pct)},
                    {"h3_pct", nz(r.metrics.gates.h3_pct)},
                    {"rho_peak", nz(r.metrics.rho_peak)},
                    {"rho_proxy", nz(r.metrics.rho_proxy)},
                    {"max_thrust_ratio", nz(r.metrics.actuator.worst_ratio)},
                    {"mpc_failures", r.stats.mpc_failures},
                    {"time_over_ceiling", nz(r.time_over_ceiling)}};
        all.push_back(row);
    }
    j["runs"] = all;

    json perf = json::array(), audit = json::array(), rec = json::array();
    for (const char* v : {"V1", "V2", "V3", "V4", "V5", "V6"}) {
        const CampaignRun* r = find(runs, v);
        if (!r) continue;
        const auto& m = r->metrics;
        perf.push_back({{"tag", v},
                        {"rmse_m", nz(m.rmse.d3)},
                        {"rmse_pass", r->ok && m.rmse.d3 <= 0.35},
                        {"peak_sag_mm", nz(m.peak_sag_mm)},
                        {"sag_pass", r->ok && m.peak_sag_mm <= 100.0},
                        {"peak_tension_N", nz(m.peak_tension)},
                        {"tension_pass", r->ok && m.peak_tension <= 120.0},
                        {"pass", r->ok && thresholds_pass(m)}});
        audit.push_back({{"tag", v},
                         {"h1a_ms", nz(m.gates.h1a_ms)},
                         {"h1a_pass", m.gates.h1a_pass},
                         {"h1b_pct", nz(m.gates.h1b_pct)},
                         {"h1b_pass", m.gates.h1b_pass},
                         {"h3_pct", nz(m.gates.h3_pct)},
                         {"h3_pass", m.gates.h3_pass}});
        for (std::size_t k = 0; k < m.faults.size(); ++k)
            rec.push_back({{"tag", v},
                           {"fault", int(k + 1)},
                           {"t_star", m.faults[k].t_star},
                           {"drone", m.faults[k].drone},
                           {"t_rec_s", nz(m.faults[k].t_rec)},
                           {"iae_ms", nz(m.faults[k].iae)},
                           {"sag_mm", nz(m.faults[k].sag_mm)}});
    }
    j["performance"] = perf;
    j["domain_audit"] = audit;
    j["recovery_iae"] = rec;

    json ff = json::array();
    for (const char* v : {"V3", "V4", "V5"}) {
        const CampaignRun* on = find(runs, v);
        const CampaignRun* off = find(runs, std::string("P2A-") + v);
        if (!on || !off) continue;
        const double d_rmse = 100.0 * (off->metrics.rmse.d3 / on->metrics.rmse.d3 - 1.0);
        const double sag_x = on->metrics.peak_sag_mm > 0.0 ? off->metrics.peak_sag_mm / on->metrics.peak_sag_mm
                                                           : std::numeric_limits<double>::infinity();
        ff.push_back({{"schedule", v},
                      {"rmse_on_m", nz(on->metrics.rmse.d3)},
                      {"rmse_off_m", nz(off->metrics.rmse.d3)},
                      {"delta_rmse_pct", nz(d_rmse)},
                      {"sag_on_mm", nz(on->metrics.peak_sag_mm)},
                      {"sag_off_mm", nz(off->metrics.peak_sag_mm)},
                      {"sag_ratio", nz(sag_x)}});
    }
    j["ff_ablation"] = ff;

    auto group_rows = [&](const std::string& g) {
        json rows = json::array();
        for (const auto& r : runs) {
            if (r.entry.group != g) continue;
            rows.push_back({{"tag", r.entry.tag},
                            {"sweep", r.entry.sweep},
                            {"mode", r.entry.mode},
                            {"ok", r.ok},
                            {"rmse_m", nz(r.metrics.rmse.d3)},
                            {"alt_rmse_m", nz(r.metrics.rmse.z)},
                            {"rms_sag_mm", nz(r.metrics.rms_sag_mm)},
                            {"peak_sag_mm", nz(r.metrics.peak_sag_mm)},
                            {"peak_tension_N", nz(r.metrics.peak_tension)},
                            {"peak_post_fault_tension_N", nz(r.metrics.peak_post_fault_tension)},
                            {"time_over_ceiling", nz(r.time_over_ceiling)},
                            {"rho_peak", nz(r.metrics.rho_peak)},
                            {"rho_proxy", nz(r.metrics.rho_proxy)}});
        }
        return rows;
    };
    j["mpc_ceiling_sweep"] = group_rows("P2C");
    j["mass_sweep"] = group_rows("P2B");
    j["reshape_period"] = group_rows("P2D");
    j["dwell_sweep"] = group_rows("DWELL");
    j["gamma_sweep"] = group_rows("GAMMA");
    j["pass"] = campaign_pass(runs);
    return j;
}

bool campaign_pass(const std::vector<CampaignRun>& runs)
{
    for (const auto& r : runs) {
        if (!r.ok) return false;
        if (r.entry.group != "V") continue;
        if (!thresholds_pass(r.metrics) || !r.metrics.gates.pass()) return false;
    }
    return true;
}

nlohmann::json certificate_json(const ControllerParams& c, const SimParams& s, double gamma,
                                double l1_ts, double omega_c)
{
    using nlohmann::json;
    const Mat2 pv = lyap_solve(c.kp_z, c.kd_z);
    const Mat2 pxy = lyap_solve(c.kp_xy, c.kd_xy);
    const DecayRates dr = decay_rates(c.kp_z, c.kd_z, c.kp_xy, c.kd_xy);
    const PendulumConstants pc = pendulum_constants(s.rope_length, s.g);
    const double rho = contraction(dr.alpha_min, pc.tau_pend);
    const AntiSwing as = antiswing_constants(s.payload_mass, c.k_swing, s.rope_length, s.g);
    const double kappa_act = 0.82;
    const int faults = std::min(2, s.n_drones - 2);
    const Envelope env = actuator_envelope(s.n_drones, s.payload_mass, faults, kappa_act, s.f_max, s.g);
    const double a_max = 2.47;
    const SteadyStateBound ssb = steady_state_bound(a_max, s.rope_length, as.zeta, c.kappa(), c.kp_xy, s.g);
    const GammaWindow gw = gamma_window(l1_ts, pv(1, 1), omega_c);
    auto mat = [](const Mat2& m) { return json::array({{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}}); };
    return {{"schema_version", kSchemaVersion},
            {"gains", {{"kp_z", c.kp_z}, {"kd_z", c.kd_z}, {"kp_xy", c.kp_xy}, {"kd_xy", c.kd_xy}}},
            {"P_v", mat(pv)},
            {"P_xy", mat(pxy)},
            {"alpha_z", dr.alpha_z},
            {"alpha_xy", dr.alpha_xy},
            {"alpha_min", dr.alpha_min},
            {"lambda", dr.alpha_min / 2.0},
            {"tau_pend", pc.tau_pend},
            {"omega_p", pc.omega_p},
            {"rho", rho},
            {"antiswing", {{"b_swing", as.b_swing}, {"zeta", as.zeta}}},
            {"envelope",
             {{"n", s.n_drones},
              {"faults", faults},
              {"kappa_act", kappa_act},
              {"load_N", env.load},
              {"bound_N", env.bound},
              {"utilization", env.utilization},
              {"pass", env.pass}}},
            {"steady_state_bound",
             {{"a_max", a_max},
              {"pendulum_term_m", ssb.pendulum_term},
              {"tracking_term_m", ssb.tracking_term},
              {"total_m", ssb.total}}},
            {"gamma_window",
             {{"gamma", gamma},
              {"gamma_min", gw.gamma_min},
              {"gamma_star", gw.gamma_star},
              {"inside", gw.contains(gamma)}}}};
}

} // namespace slung
