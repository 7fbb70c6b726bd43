#include "slung/analysis.hpp"
#include "slung/campaign.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace slung {

namespace {

void put(std::string& s, double v)
{
    char buf[40];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    s.append(buf, r.ptr);
}

void put(std::string& s, long v)
{
    char buf[24];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    s.append(buf, r.ptr);
}

Vec3 euler_rpy(const Mat3& R)
{
    return {std::atan2(R(2, 1), R(2, 2)), std::asin(std::clamp(-R(2, 0), -1.0, 1.0)),
            std::atan2(R(1, 0), R(0, 0))};
}

std::string full_header(int n)
{
    std::string h = "t,pLx,pLy,pLz,refx,refy,refz";
    for (int i = 0; i < n; ++i) {
        const std::string s = std::to_string(i);
        h += ",T" + s + ",f" + s + ",code" + s + ",active" + s;
    }
    return h;
}

std::string decimated_header(int n)
{
    std::string h = full_header(n) + ",vLx,vLy,vLz";
    for (int i = 0; i < n; ++i) {
        const std::string s = std::to_string(i);
        for (const char* c : {"px", "py", "pz", "vx", "vy", "vz", "roll", "pitch", "yaw", "wx", "wy", "wz"})
            h += "," + std::string(c) + s;
    }
    h += ",gustx,gusty,gustz,FwLx,FwLy,FwLz";
    return h;
}

void append_full_row(std::string& s, const Trace& tr, std::size_t k)
{
    put(s, tr.t[k]);
    for (int j = 0; j < 3; ++j) {
        s += ',';
        put(s, tr.pL[k][j]);
    }
    for (int j = 0; j < 3; ++j) {
        s += ',';
        put(s, tr.pL_ref[k][j]);
    }
    for (int i = 0; i < tr.drones(); ++i) {
        s += ',';
        put(s, tr.tension[i][k]);
        s += ',';
        put(s, tr.thrust[i][k]);
        s += ',';
        put(s, long(tr.code[i][k]));
        s += ',';
        put(s, long(tr.active[i][k]));
    }
}

} // namespace

std::uint64_t fnv1a(const std::string& s, std::uint64_t h)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<FaultEvent> snapped_faults(const RunConfig& cfg)
{
    std::vector<FaultEvent> f = cfg.faults.events;
    for (auto& e : f) e.t_star = double(std::lround(e.t_star / cfg.sim.dt)) * cfg.sim.dt;
    std::stable_sort(f.begin(), f.end(),
                     [](const FaultEvent& a, const FaultEvent& b) { return a.t_star < b.t_star; });
    return f;
}

MetricsOptions metrics_options(const RunConfig& cfg)
{
    MetricsOptions o;
    o.window = cfg.window;
    o.tau_pend = pendulum_period(cfg.sim);
    o.f_max = cfg.sim.f_max;
    o.slack_eps = cfg.slack_eps;
    o.pv = lyap_solve(cfg.ctrl.kp_z, cfg.ctrl.kd_z);
    return o;
}

RunArtifacts run(const RunConfig& cfg, const TickHook& hook)
{
    const auto wall0 = std::chrono::steady_clock::now();
    RunArtifacts a;
    a.config = cfg;
    resolve(a.config);
    const RunConfig& c = a.config;
    const SimParams& sp = c.sim;
    const int n = sp.n_drones;
    const double dt = sp.dt;
    const long K = std::lround(sp.duration / dt);
    const long dec = std::max(1L, std::lround(1.0 / (c.trace_rate * dt)));

    a.trace.dt = dt;
    a.trace.reserve(std::size_t(K + 1), n);
    a.stats.ff_residual_bound = 1.0 - std::cos(0.75);

    const ScheduleReport rep = validate_schedule(c.faults, sp);
    if (!rep.valid) {
        a.error = "invalid fault schedule:";
        for (const auto& v : rep.violations) a.error += " " + v + ";";
        return a;
    }
    const std::vector<FaultEvent> faults = snapped_faults(c);
    for (const auto& f : faults) a.stats.fault_ticks.push_back(f.t_star);

    const Reference ref(c.ref);
    const RefSample r0 = ref.at(0.0);
    WorldState w;
    try {
        w = make_initial_world(sp, r0.p, r0.v, c.ctrl.d_rope);
    } catch (const std::exception& e) {
        a.error = e.what();
        return a;
    }

    FormationPlan plan;
    plan.n = n;
    plan.ring_radius = sp.ring_radius;
    plan.attach = w.attach;
    auto bus = std::make_shared<ReshapeBus>(n, pendulum_period(sp));

    std::vector<DroneController> ctl;
    ctl.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double ang = formation_angle(i, n);
        const Vec3 delta = sp.ring_radius * Vec3(std::cos(ang), std::sin(ang), 0.0);
        ctl.emplace_back(i, n, c.ctrl, c.modes, delta);
        if (c.modes.l1) ctl.back().attach_l1(std::make_unique<L1Adaptive>(c.l1));
        if (c.modes.mpc) ctl.back().attach_mpc(std::make_unique<MpcLayer>(c.mpc, c.ctrl));
        if (c.modes.reshape)
            ctl.back().attach_reshape(std::make_unique<ReshapeAgent>(
                i, plan, bus, c.reshape_t_trans, c.reshape_threshold, c.reshape_window, dt));
    }
    std::vector<TensionLatch> latches(n, TensionLatch(c.reshape_threshold, c.reshape_window, dt));
    std::vector<double> latch_at(n, -1.0);

    DrydenWind wind(c.wind, dt);
    StepDiag diag;
    std::vector<ControlOutput> u(n);
    std::vector<double> tension(n);
    const LumpedCable lumped{sp.k_eff(), sp.rope_length};

    a.csv = decimated_header(n) + "\n";
    a.csv.reserve(std::size_t(K / dec + 2) * std::size_t(120 + 260 * n));

    std::size_t fi = 0;
    long k = 0;
    try {
        for (k = 0; k <= K; ++k) {
            const double t = double(k) * dt;
            w.t = t;
            while (fi < faults.size() && std::lround(faults[fi].t_star / dt) <= k) {
                apply_fault(w, faults[fi]);
                ++fi;
            }
            for (int i = 0; i < n; ++i) tension[i] = w.ropes[i].severed ? 0.0 : rope_tension(w, i);

            for (int i = 0; i < n; ++i) {
                InfoSet info;
                info.t = t;
                info.self = w.drones[i];
                info.tension = tension[i];
                info.payload_velocity = w.payload.v;
                info.reference = &ref;
                u[i] = ctl[i].tick(info);
            }

            const RefSample rs = ref.at(t);
            Trace& tr = a.trace;
            tr.t.push_back(t);
            tr.pL.push_back(w.payload.p);
            tr.pL_ref.push_back(rs.p);
            for (int i = 0; i < n; ++i) {
                tr.tension[i].push_back(tension[i]);
                tr.thrust[i].push_back(u[i].f);
                tr.code[i].push_back(u[i].debug.active_code);
                tr.active[i].push_back(w.ropes[i].severed ? 0 : 1);
            }

            // run statistics
            for (int i = 0; i < n; ++i) {
                if (latches[i].observe(t, tension[i])) latch_at[i] = t;
                if (w.ropes[i].severed) continue;
                const Vec3 chord = w.drones[i].p - (w.payload.p + w.attach[i]);
                const double len = chord.norm();
                if (len > 1e-9 && tension[i] > 0.0) {
                    const double theta = std::acos(std::clamp(chord.z() / len, -1.0, 1.0));
                    if (theta <= 0.75)
                        a.stats.ff_residual_ratio_max =
                            std::max(a.stats.ff_residual_ratio_max, 1.0 - std::cos(theta));
                }
                if (t >= c.window.t0 - 1e-9 && t <= c.window.t1 + 1e-9 && len > sp.rope_length)
                    a.stats.fidelity_max_deviation = std::max(
                        a.stats.fidelity_max_deviation, std::abs(tension[i] - lumped_tension(len, lumped)));
                if (u[i].debug.mpc_status != 0) {
                    a.stats.mpc_max_slack = std::max(a.stats.mpc_max_slack, u[i].debug.mpc_slack);
                    a.stats.mpc_max_iterations =
                        std::max(a.stats.mpc_max_iterations, long(u[i].debug.mpc_iterations));
                }
            }

            WindSample ws;
            ws.enabled = c.wind.enabled;
            ws.c_drag = c.wind.c_drag;
            ws.w_max = c.wind.w_max;
            if (ws.enabled) ws.gust = wind.gust_velocity(t);

            if (k % dec == 0) {
                std::string& s = a.csv;
                append_full_row(s, tr, tr.size() - 1);
                for (int j = 0; j < 3; ++j) {
                    s += ',';
                    put(s, w.payload.v[j]);
                }
                for (int i = 0; i < n; ++i) {
                    const auto& d = w.drones[i];
                    const Vec3 rpy = euler_rpy(d.R);
                    for (const Vec3* v : {&d.p, &d.v, &rpy, &d.w})
                        for (int j = 0; j < 3; ++j) {
                            s += ',';
                            put(s, (*v)[j]);
                        }
                }
                const Vec3 fw = ws.enabled ? body_force(ws.gust, w.payload.v, ws.c_drag, ws.w_max).force
                                           : Vec3::Zero();
                for (const Vec3* v : {static_cast<const Vec3*>(&ws.gust), &fw})
                    for (int j = 0; j < 3; ++j) {
                        s += ',';
                        put(s, (*v)[j]);
                    }
                s += '\n';
            }

            if (hook) hook(w, u);
            if (k < K) step(w, u, ws, sp, dt, &diag);
        }
        a.ok = true;
    } catch (const std::exception& e) {
        a.error = std::string("t=") + std::to_string(double(k) * dt) + ": " + e.what();
    }
    a.t_end = a.trace.t.empty() ? 0.0 : a.trace.t.back();

    for (int i = 0; i < n; ++i)
        if (latch_at[i] >= 0.0) a.stats.latch_times.push_back(latch_at[i]);
    a.stats.wind_evals = diag.wind_evals;
    a.stats.clip_events = diag.clip_events;
    a.stats.clip_rate = diag.wind_evals ? double(diag.clip_events) / double(diag.wind_evals) : 0.0;
    for (const auto& d : ctl) {
        if (d.mpc()) {
            a.stats.mpc_solves += d.mpc()->solves();
            a.stats.mpc_failures += d.mpc()->failures();
        }
        if (d.l1()) a.stats.l1_projection_hits += d.l1()->projection_hits();
    }
    a.stats.reshape_messages = int(bus->log().size());
    a.stats.reshape_bits = bus->total_bits();
    a.stats.reshape_bits_per_message = bus->bits_per_message();

    std::vector<FaultEvent> seen;
    for (const auto& f : faults)
        if (f.t_star <= a.t_end + 1e-12) seen.push_back(f);
    a.metrics = compute_metrics(a.trace, seen, metrics_options(c));
    if (c.full_rate_trace) a.csv_full = full_trace_csv(a.trace);
    a.hash = fnv1a(a.csv);
    a.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return a;
}

std::string full_trace_csv(const Trace& tr)
{
    std::string s = full_header(tr.drones()) + "\n";
    s.reserve(tr.size() * std::size_t(80 + 40 * tr.drones()));
    for (std::size_t k = 0; k < tr.size(); ++k) {
        append_full_row(s, tr, k);
        s += '\n';
    }
    return s;
}

Trace read_trace_csv(const std::string& text)
{
    Trace tr;
    std::size_t pos = text.find('\n');
    if (pos == std::string::npos) throw std::runtime_error("trace: missing header");
    std::vector<std::string> cols;
    {
        std::stringstream hs(text.substr(0, pos));
        std::string c;
        while (std::getline(hs, c, ',')) cols.push_back(c);
    }
    auto col = [&](const std::string& name) {
        auto it = std::find(cols.begin(), cols.end(), name);
        if (it == cols.end()) throw std::runtime_error("trace: missing column '" + name + "'");
        return std::size_t(it - cols.begin());
    };
    int n = 0;
    while (std::find(cols.begin(), cols.end(), "T" + std::to_string(n)) != cols.end()) ++n;
    const std::size_t ct = col("t");
    const std::size_t cp[3] = {col("pLx"), col("pLy"), col("pLz")};
    const std::size_t cr[3] = {col("refx"), col("refy"), col("refz")};
    std::vector<std::size_t> cT(n), cf(n), cc(n), ca(n);
    for (int i = 0; i < n; ++i) {
        const std::string s = std::to_string(i);
        cT[i] = col("T" + s);
        cf[i] = col("f" + s);
        cc[i] = col("code" + s);
        ca[i] = col("active" + s);
    }
    tr.reserve(0, n);

    std::vector<double> vals(cols.size());
    ++pos;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        if (end == pos) {
            ++pos;
            continue;
        }
        const char* p = text.data() + pos;
        const char* e = text.data() + end;
        std::size_t j = 0;
        while (p <= e && j < vals.size()) {
            const char* q = std::find(p, e, ',');
            auto r = std::from_chars(p, q, vals[j]);
            if (r.ec != std::errc() || r.ptr != q) throw std::runtime_error("trace: bad number");
            ++j;
            p = q + 1;
        }
        if (j != vals.size()) throw std::runtime_error("trace: short row");
        tr.t.push_back(vals[ct]);
        tr.pL.emplace_back(vals[cp[0]], vals[cp[1]], vals[cp[2]]);
        tr.pL_ref.emplace_back(vals[cr[0]], vals[cr[1]], vals[cr[2]]);
        for (int i = 0; i < n; ++i) {
            tr.tension[i].push_back(vals[cT[i]]);
            tr.thrust[i].push_back(vals[cf[i]]);
            tr.code[i].push_back(int(vals[cc[i]]));
            tr.active[i].push_back(std::uint8_t(vals[ca[i]]));
        }
        pos = end + 1;
    }
    if (tr.t.size() >= 2) tr.dt = double(std::lround((tr.t[1] - tr.t[0]) * 1e9)) * 1e-9;
    return tr;
}

// ---------------------------------------------------------------- JSON

namespace {
nlohmann::json num(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}
} // namespace

nlohmann::json metrics_json(const RunMetrics& m)
{
    using nlohmann::json;
    json j;
    j["schema_version"] = kSchemaVersion;
    j["rmse_m"] = {{"d3", num(m.rmse.d3)}, {"xy", num(m.rmse.xy)}, {"z", num(m.rmse.z)}};
    j["peak_sag_mm"] = num(m.peak_sag_mm);
    j["rms_sag_mm"] = num(m.rms_sag_mm);
    j["peak_tension_N"] = num(m.peak_tension);
    j["peak_post_fault_tension_N"] = num(m.peak_post_fault_tension);
    json fs = json::array();
    for (const auto& f : m.faults)
        fs.push_back({{"t_star", f.t_star},
                      {"drone", f.drone},
                      {"peak_error_mm", num(f.peak_error_mm)},
                      {"sag_mm", num(f.sag_mm)},
                      {"t_rec_s", num(f.t_rec)},
                      {"recovered", f.recovered},
                      {"iae_ms", num(f.iae)},
                      {"chi_hat", num(f.chi_hat)}});
    j["faults"] = fs;
    j["rho_peak"] = num(m.rho_peak);
    j["rho_proxy"] = num(m.rho_proxy);
    j["gates"] = {{"h1a_ms", num(m.gates.h1a_ms)},   {"h1b_pct", num(m.gates.h1b_pct)},
                  {"h3_pct", num(m.gates.h3_pct)},   {"h1a_pass", m.gates.h1a_pass},
                  {"h1b_pass", m.gates.h1b_pass},    {"h3_pass", m.gates.h3_pass},
                  {"pass", m.gates.pass()}};
    json ar = json::array(), ta = json::array();
    for (double r : m.actuator.max_ratio) ar.push_back(num(r));
    for (double r : m.actuator.time_above) ta.push_back(num(r));
    j["actuator"] = {{"max_thrust_ratio", ar},
                     {"time_above_90pct_s", ta},
                     {"worst_ratio", num(m.actuator.worst_ratio)},
                     {"saturated", m.actuator.saturated}};
    json rms = json::array(), p95 = json::array(), pk = json::array();
    for (double v : m.asymmetry.rms) rms.push_back(num(v));
    for (double v : m.asymmetry.p95) p95.push_back(num(v));
    for (double v : m.asymmetry.peak) pk.push_back(num(v));
    j["tension_asymmetry_N"] = {{"rms", rms}, {"p95", p95}, {"peak", pk}, {"rms_all", num(m.asymmetry.rms_all)}};
    return j;
}

nlohmann::json gates_json(const RunArtifacts& a)
{
    const auto& m = a.metrics;
    const bool thresholds = m.rmse.d3 <= 0.35 && m.peak_sag_mm <= 100.0 && m.peak_tension <= 120.0;
    return {{"schema_version", kSchemaVersion},
            {"variant", a.config.variant},
            {"ok", a.ok},
            {"h1a_ms", num(m.gates.h1a_ms)},
            {"h1a_pass", m.gates.h1a_pass},
            {"h1b_pct", num(m.gates.h1b_pct)},
            {"h1b_pass", m.gates.h1b_pass},
            {"h3_pct", num(m.gates.h3_pct)},
            {"h3_pass", m.gates.h3_pass},
            {"thresholds_pass", thresholds},
            {"actuator_unsaturated", !m.actuator.saturated},
            {"pass", a.ok && m.gates.pass() && thresholds && !m.actuator.saturated}};
}

nlohmann::json run_json(const RunArtifacts& a)
{
    using nlohmann::json;
    const auto& s = a.stats;
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(a.hash));
    json j;
    j["schema_version"] = kSchemaVersion;
    j["variant"] = a.config.variant;
    j["ok"] = a.ok;
    j["error"] = a.error;
    j["t_end"] = a.t_end;
    j["trace_hash"] = hex;
    j["faults"] = json::array();
    for (double t : s.fault_ticks) j["faults"].push_back(t);
    j["stats"] = {{"wall_seconds", s.wall_seconds},
                  {"wind_evals", s.wind_evals},
                  {"clip_events", s.clip_events},
                  {"clip_rate", s.clip_rate},
                  {"mpc_solves", s.mpc_solves},
                  {"mpc_failures", s.mpc_failures},
                  {"mpc_max_iterations", s.mpc_max_iterations},
                  {"mpc_max_slack", s.mpc_max_slack},
                  {"l1_projection_hits", s.l1_projection_hits},
                  {"reshape_messages", s.reshape_messages},
                  {"reshape_bits", s.reshape_bits},
                  {"reshape_bits_per_message", s.reshape_bits_per_message},
                  {"latch_times", s.latch_times},
                  {"ff_residual_ratio_max", s.ff_residual_ratio_max},
                  {"ff_residual_bound", s.ff_residual_bound},
                  {"fidelity_max_deviation_N", s.fidelity_max_deviation}};
    j["metrics"] = metrics_json(a.metrics);
    j["gates"] = gates_json(a);
    return j;
}

void write_artifacts(const RunArtifacts& a, const std::string& dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
        out << body;
    };
    write("config.cfg", serialize_config(a.config));
    write("trace.csv", a.csv);
    if (!a.csv_full.empty()) write("trace_full.csv", a.csv_full);
    write("metrics.json", metrics_json(a.metrics).dump(2) + "\n");
    write("run.json", run_json(a).dump(2) + "\n");
}

} // namespace slung
