#include "slung/campaign.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace slung {

namespace {

std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string fmt(double v)
{
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const char* b = v.data();
    const char* e = v.data() + v.size();
    auto r = std::from_chars(b, e, out);
    if (r.ec != std::errc() || r.ptr != e)
        throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
    return out;
}

long parse_int(const std::string& key, const std::string& v)
{
    long out = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "off" || v == "0" || v == "no") return false;
    throw ConfigError("config: '" + key + "' expects on/off, got '" + v + "'");
}

std::string faults_to_string(const FaultSchedule& s)
{
    std::string out;
    for (const auto& e : s.events) {
        if (!out.empty()) out += ", ";
        out += fmt(e.t_star) + ":" + std::to_string(e.drone);
    }
    return out.empty() ? "none" : out;
}

FaultSchedule faults_from_string(const std::string& key, const std::string& v, bool probe)
{
    FaultSchedule s;
    s.subthreshold = probe;
    if (v == "none" || v.empty()) return s;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        const auto c = item.find(':');
        if (c == std::string::npos)
            throw ConfigError("config: '" + key + "' entries must be time:drone, got '" + item + "'");
        FaultEvent e;
        e.t_star = parse_double(key, trim(item.substr(0, c)));
        e.drone = int(parse_int(key, trim(item.substr(c + 1))));
        s.events.push_back(e);
    }
    return s;
}

struct Field {
    std::string name, type, doc;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

using DRef = std::function<double&(RunConfig&)>;
using IRef = std::function<int&(RunConfig&)>;
using BRef = std::function<bool&(RunConfig&)>;

Field dbl(std::string name, std::string doc, DRef ref)
{
    Field f;
    f.name = name;
    f.type = "number";
    f.doc = std::move(doc);
    f.set = [ref, name](RunConfig& c, const std::string& v) { ref(c) = parse_double(name, v); };
    f.get = [ref](const RunConfig& c) { return fmt(ref(const_cast<RunConfig&>(c))); };
    return f;
}

Field pos(std::string name, std::string doc, DRef ref)
{
    Field f = dbl(name, std::move(doc), ref);
    f.set = [ref, name](RunConfig& c, const std::string& v) {
        const double x = parse_double(name, v);
        if (!(x > 0.0)) throw ConfigError("config: '" + name + "' must be positive");
        ref(c) = x;
    };
    return f;
}

Field integer(std::string name, std::string doc, IRef ref, int lo)
{
    Field f;
    f.name = name;
    f.type = "integer";
    f.doc = std::move(doc);
    f.set = [ref, name, lo](RunConfig& c, const std::string& v) {
        const long x = parse_int(name, v);
        if (x < lo) throw ConfigError("config: '" + name + "' must be >= " + std::to_string(lo));
        ref(c) = int(x);
    };
    f.get = [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); };
    return f;
}

Field flag(std::string name, std::string doc, BRef ref)
{
    Field f;
    f.name = name;
    f.type = "on/off";
    f.doc = std::move(doc);
    f.set = [ref, name](RunConfig& c, const std::string& v) { ref(c) = parse_bool(name, v); };
    f.get = [ref](const RunConfig& c) { return ref(const_cast<RunConfig&>(c)) ? "on" : "off"; };
    return f;
}

const std::vector<Field>& fields()
{
    static const std::vector<Field> fs = [] {
        std::vector<Field> v;
        Field var;
        var.name = "variant";
        var.type = "string";
        var.doc = "run label";
        var.set = [](RunConfig& c, const std::string& s) { c.variant = s; };
        var.get = [](const RunConfig& c) { return c.variant; };
        v.push_back(var);

        // plant
        v.push_back(integer("n_drones", "number of drones", [](RunConfig& c) -> int& { return c.sim.n_drones; }, 2));
        v.push_back(pos("drone_mass", "kg", [](RunConfig& c) -> double& { return c.sim.drone_mass; }));
        v.push_back(pos("payload_mass", "kg", [](RunConfig& c) -> double& { return c.sim.payload_mass; }));
        v.push_back(pos("rope_length", "m, unstretched", [](RunConfig& c) -> double& { return c.sim.rope_length; }));
        v.push_back(pos("segment_stiffness", "N/m per segment", [](RunConfig& c) -> double& { return c.sim.segment_stiffness; }));
        v.push_back(integer("n_beads", "beads per rope", [](RunConfig& c) -> int& { return c.sim.n_beads; }, 1));
        v.push_back(pos("rope_time_constant", "s, sets bead mass k_s (tau/2pi)^2", [](RunConfig& c) -> double& { return c.sim.rope_time_constant; }));
        v.push_back(pos("shape_damping_ratio", "damping ratio of the bead element, sets segment damping", [](RunConfig& c) -> double& { return c.sim.shape_damping_ratio; }));
        v.push_back(pos("ring_radius", "m, formation ring", [](RunConfig& c) -> double& { return c.sim.ring_radius; }));
        v.push_back(dbl("attach_radius", "m, payload-side attachment ring (0 = payload centre)", [](RunConfig& c) -> double& { return c.sim.attach_radius; }));
        v.push_back(pos("gravity", "m/s^2", [](RunConfig& c) -> double& { return c.sim.g; }));
        v.push_back(dbl("f_min", "N", [](RunConfig& c) -> double& { return c.sim.f_min; }));
        v.push_back(pos("f_max", "N", [](RunConfig& c) -> double& { return c.sim.f_max; }));
        v.push_back(pos("tau_max", "N m per axis", [](RunConfig& c) -> double& { return c.sim.tau_max; }));
        v.push_back(pos("inertia_xx", "kg m^2", [](RunConfig& c) -> double& { return c.sim.inertia.x(); }));
        v.push_back(pos("inertia_yy", "kg m^2", [](RunConfig& c) -> double& { return c.sim.inertia.y(); }));
        v.push_back(pos("inertia_zz", "kg m^2", [](RunConfig& c) -> double& { return c.sim.inertia.z(); }));
        v.push_back(pos("initial_chord", "m, rope chord at t = 0", [](RunConfig& c) -> double& { return c.sim.initial_chord; }));
        v.push_back(flag("bead_gravity", "gravity on rope beads", [](RunConfig& c) -> bool& { return c.sim.bead_gravity; }));
        v.push_back(pos("dt", "s, physics and control tick (<= 1e-3)", [](RunConfig& c) -> double& { return c.sim.dt; }));
        v.push_back(integer("substeps", "RK3 substeps per tick", [](RunConfig& c) -> int& { return c.sim.substeps; }, 1));
        v.push_back(pos("duration", "s", [](RunConfig& c) -> double& { return c.sim.duration; }));

        // reference
        v.push_back(pos("ref_a", "m, lemniscate half-width", [](RunConfig& c) -> double& { return c.ref.a; }));
        v.push_back(pos("ref_period", "s", [](RunConfig& c) -> double& { return c.ref.period; }));
        v.push_back(dbl("ref_z0", "m", [](RunConfig& c) -> double& { return c.ref.z0; }));
        v.push_back(dbl("ref_hz", "m, altitude amplitude", [](RunConfig& c) -> double& { return c.ref.hz; }));

        // controller
        v.push_back(pos("kp_xy", "1/s^2", [](RunConfig& c) -> double& { return c.ctrl.kp_xy; }));
        v.push_back(pos("kd_xy", "1/s", [](RunConfig& c) -> double& { return c.ctrl.kd_xy; }));
        v.push_back(pos("kp_z", "1/s^2", [](RunConfig& c) -> double& { return c.ctrl.kp_z; }));
        v.push_back(pos("kd_z", "1/s", [](RunConfig& c) -> double& { return c.ctrl.kd_z; }));
        v.push_back(pos("kp_att", "N m/rad", [](RunConfig& c) -> double& { return c.ctrl.kp_att; }));
        v.push_back(pos("kd_att", "N m s/rad", [](RunConfig& c) -> double& { return c.ctrl.kd_att; }));
        v.push_back(pos("kp_yaw", "N m/rad", [](RunConfig& c) -> double& { return c.ctrl.kp_yaw; }));
        v.push_back(pos("kd_yaw", "N m s/rad", [](RunConfig& c) -> double& { return c.ctrl.kd_yaw; }));
        v.push_back(pos("att_rate_filter", "s, filter on attitude setpoint rate", [](RunConfig& c) -> double& { return c.ctrl.att_rate_filter; }));
        v.push_back(dbl("k_swing", "s, anti-swing shift gain", [](RunConfig& c) -> double& { return c.ctrl.k_swing; }));
        v.push_back(dbl("w_swing", "weight of the swing damping term", [](RunConfig& c) -> double& { return c.ctrl.w_swing; }));
        v.push_back(dbl("s_max", "m, shift saturation", [](RunConfig& c) -> double& { return c.ctrl.s_max; }));
        Field dr;
        dr.name = "d_rope";
        dr.type = "number|auto";
        dr.doc = "m, slot elevation; auto = vertical extent of the rope";
        dr.set = [](RunConfig& c, const std::string& s) {
            if (s == "auto") {
                c.d_rope_auto = true;
                return;
            }
            const double x = parse_double("d_rope", s);
            if (!(x > 0.0)) throw ConfigError("config: 'd_rope' must be positive");
            c.ctrl.d_rope = x;
            c.d_rope_auto = false;
        };
        dr.get = [](const RunConfig& c) { return c.d_rope_auto ? std::string("auto") : fmt(c.ctrl.d_rope); };
        v.push_back(dr);
        v.push_back(pos("w_t", "QP tracking weight", [](RunConfig& c) -> double& { return c.ctrl.w_t; }));
        v.push_back(dbl("w_e", "QP effort weight", [](RunConfig& c) -> double& { return c.ctrl.w_e; }));
        v.push_back(pos("theta_max", "rad, tilt limit", [](RunConfig& c) -> double& { return c.ctrl.theta_max; }));
        v.push_back(pos("pickup_ramp_time", "s", [](RunConfig& c) -> double& { return c.ctrl.pickup_ramp_time; }));

        // modes
        v.push_back(flag("ff", "tension feed-forward", [](RunConfig& c) -> bool& { return c.modes.ff; }));
        v.push_back(flag("l1", "L1 altitude layer", [](RunConfig& c) -> bool& { return c.modes.l1; }));
        v.push_back(flag("mpc", "MPC replaces the QP projection", [](RunConfig& c) -> bool& { return c.modes.mpc; }));
        v.push_back(flag("reshape", "formation reshape supervisor", [](RunConfig& c) -> bool& { return c.modes.reshape; }));
        v.push_back(flag("pickup_ramp", "cubic ramp on the feed-forward at start", [](RunConfig& c) -> bool& { return c.modes.pickup_ramp; }));

        // L1
        v.push_back(pos("l1_gamma", "adaptation gain", [](RunConfig& c) -> double& { return c.l1.gamma; }));
        v.push_back(pos("l1_ts", "s, adaptation step", [](RunConfig& c) -> double& { return c.l1.ts; }));
        v.push_back(pos("l1_omega_c", "rad/s, low-pass cutoff", [](RunConfig& c) -> double& { return c.l1.omega_c; }));
        v.push_back(dbl("l1_delta_min", "m/s^2, projection lower bound", [](RunConfig& c) -> double& { return c.l1.delta_min; }));
        v.push_back(dbl("l1_delta_max", "m/s^2, projection upper bound", [](RunConfig& c) -> double& { return c.l1.delta_max; }));

        // MPC
        v.push_back(integer("mpc_horizon", "steps", [](RunConfig& c) -> int& { return c.mpc.horizon; }, 1));
        v.push_back(pos("mpc_dt", "s", [](RunConfig& c) -> double& { return c.mpc.dt; }));
        v.push_back(pos("mpc_t_max", "N, tension ceiling", [](RunConfig& c) -> double& { return c.mpc.t_max; }));
        v.push_back(pos("mpc_w_s", "slack weight", [](RunConfig& c) -> double& { return c.mpc.w_s; }));
        v.push_back(pos("mpc_tol", "solver tolerance", [](RunConfig& c) -> double& { return c.mpc.tol; }));

        // reshape
        v.push_back(pos("reshape_t_trans", "s, blend duration", [](RunConfig& c) -> double& { return c.reshape_t_trans; }));
        v.push_back(pos("reshape_threshold", "N, latch threshold", [](RunConfig& c) -> double& { return c.reshape_threshold; }));
        v.push_back(pos("reshape_window", "s, latch window", [](RunConfig& c) -> double& { return c.reshape_window; }));

        // wind
        v.push_back(flag("wind", "Dryden turbulence and drag", [](RunConfig& c) -> bool& { return c.wind.enabled; }));
        Field seed;
        seed.name = "seed";
        seed.type = "integer";
        seed.doc = "turbulence seed";
        seed.set = [](RunConfig& c, const std::string& s) {
            const long x = parse_int("seed", s);
            if (x < 0) throw ConfigError("config: 'seed' must be non-negative");
            c.wind.seed = std::uint64_t(x);
        };
        seed.get = [](const RunConfig& c) { return std::to_string(c.wind.seed); };
        v.push_back(seed);
        v.push_back(dbl("wind_mean_x", "m/s", [](RunConfig& c) -> double& { return c.wind.mean.x(); }));
        v.push_back(dbl("wind_mean_y", "m/s", [](RunConfig& c) -> double& { return c.wind.mean.y(); }));
        v.push_back(dbl("wind_mean_z", "m/s", [](RunConfig& c) -> double& { return c.wind.mean.z(); }));
        v.push_back(dbl("sigma_u", "m/s", [](RunConfig& c) -> double& { return c.wind.sigma_u; }));
        v.push_back(dbl("sigma_v", "m/s", [](RunConfig& c) -> double& { return c.wind.sigma_v; }));
        v.push_back(dbl("sigma_w", "m/s", [](RunConfig& c) -> double& { return c.wind.sigma_w; }));
        v.push_back(pos("scale_u", "m", [](RunConfig& c) -> double& { return c.wind.scale_u; }));
        v.push_back(pos("scale_v", "m", [](RunConfig& c) -> double& { return c.wind.scale_v; }));
        v.push_back(pos("scale_w", "m", [](RunConfig& c) -> double& { return c.wind.scale_w; }));
        v.push_back(dbl("c_drag", "N s/m per body", [](RunConfig& c) -> double& { return c.wind.c_drag; }));
        v.push_back(pos("w_max", "N, drag clip", [](RunConfig& c) -> double& { return c.wind.w_max; }));

        // faults and evaluation
        Field fl;
        fl.name = "faults";
        fl.type = "list";
        fl.doc = "severance events as time:drone, comma separated, or none";
        fl.set = [](RunConfig& c, const std::string& s) {
            const bool probe = c.faults.subthreshold;
            c.faults = faults_from_string("faults", s, probe);
        };
        fl.get = [](const RunConfig& c) { return faults_to_string(c.faults); };
        v.push_back(fl);
        v.push_back(flag("subthreshold_probe", "allow dwell below one pendulum period", [](RunConfig& c) -> bool& { return c.faults.subthreshold; }));
        v.push_back(dbl("window_start", "s, evaluation window start", [](RunConfig& c) -> double& { return c.window.t0; }));
        v.push_back(dbl("window_end", "s, evaluation window end", [](RunConfig& c) -> double& { return c.window.t1; }));
        v.push_back(pos("slack_eps", "N, slack detection threshold", [](RunConfig& c) -> double& { return c.slack_eps; }));
        v.push_back(pos("trace_rate", "Hz, trace.csv sampling", [](RunConfig& c) -> double& { return c.trace_rate; }));
        v.push_back(flag("full_rate_trace", "also write trace_full.csv at the tick rate", [](RunConfig& c) -> bool& { return c.full_rate_trace; }));
        return v;
    }();
    return fs;
}

} // namespace

std::vector<ConfigKey> config_schema()
{
    std::vector<ConfigKey> out;
    for (const auto& f : fields()) out.push_back({f.name, f.type, f.doc});
    return out;
}

RunConfig parse_config(const std::string& text, RunConfig base)
{
    RunConfig c = std::move(base);
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    std::string fault_text;
    bool have_faults = false;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const auto& fs = fields();
        auto it = std::find_if(fs.begin(), fs.end(), [&](const Field& f) { return f.name == key; });
        if (it == fs.end())
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (key == "faults") {
            // applied last so the probe flag can appear anywhere
            fault_text = val;
            have_faults = true;
            continue;
        }
        it->set(c, val);
    }
    if (have_faults) c.faults = faults_from_string("faults", fault_text, c.faults.subthreshold);
    if (c.sim.dt > 1e-3 + 1e-15) throw ConfigError("config: dt must not exceed 1e-3 s");
    if (!(c.sim.f_min < c.sim.f_max)) throw ConfigError("config: f_min must be below f_max");
    if (c.window.t1 <= c.window.t0) throw ConfigError("config: empty evaluation window");
    resolve(c);
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c)
{
    std::string out = "# resolved run configuration\n";
    for (const auto& f : fields()) out += f.name + " = " + f.get(c) + "\n";
    return out;
}

void resolve(RunConfig& c)
{
    c.ctrl.f_min = c.sim.f_min;
    c.ctrl.f_max = c.sim.f_max;
    c.ctrl.tau_max = c.sim.tau_max;
    c.ctrl.drone_mass = c.sim.drone_mass;
    c.ctrl.g = c.sim.g;
    c.ctrl.dt = c.sim.dt;
    c.ctrl.t_nominal = c.sim.payload_mass * c.sim.g / c.sim.n_drones;
    c.l1.kp = c.ctrl.kp_z;
    c.l1.kd = c.ctrl.kd_z;
    c.l1.kappa = c.ctrl.kappa();
    c.l1.substeps = std::max(1, int(std::lround(c.sim.dt / c.l1.ts)));
    c.mpc.k_eff = c.sim.k_eff();
    if (c.d_rope_auto) c.ctrl.d_rope = c.sim.slot_elevation();
}

} // namespace slung
