// Acceptance checks 1-20. One PASS/FAIL line per criterion; exit 1 if any fails.
#include "slung/analysis.hpp"
#include "slung/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <thread>

using namespace slung;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string num(double v, int prec = 4)
{
    char b[64];
    std::snprintf(b, sizeof b, "%.*g", prec, v);
    return b;
}

bool near(double v, double want, double tol)
{
    return std::abs(v - want) <= tol;
}

// ---------------------------------------------------------------- analytic

Outcome c1()
{
    const Mat2 pv = lyap_solve(100.0, 24.0), pxy = lyap_solve(30.0, 15.0);
    const double want_v[4] = {2.224, 0.005, 0.005, 0.021};
    const double want_xy[4] = {1.283, 0.017, 0.017, 0.034};
    bool ok = true;
    for (int i = 0; i < 4; ++i) {
        ok &= near(pv(i / 2, i % 2), want_v[i], 5e-4);
        ok &= near(pxy(i / 2, i % 2), want_xy[i], 5e-4);
    }
    return {ok, "P_v=[[" + num(pv(0, 0)) + "," + num(pv(0, 1)) + "],[.," + num(pv(1, 1)) + "]] P_xy=[[" +
                    num(pxy(0, 0)) + "," + num(pxy(0, 1)) + "],[.," + num(pxy(1, 1)) + "]]"};
}

Outcome c2()
{
    const DecayRates r = decay_rates(100.0, 24.0, 30.0, 15.0);
    const PendulumConstants p = pendulum_constants(1.25);
    const double rho = contraction(r.alpha_min, p.tau_pend);
    const double lambda = r.alpha_min / 2.0;
    const bool ok = near(r.alpha_z, 5.37, 0.01) && near(r.alpha_xy, 2.38, 0.01) && near(p.tau_pend, 2.24, 0.01) &&
                    near(p.omega_p, 2.80, 0.01) && near(rho, 0.005, 0.001) && near(lambda, 1.19, 0.01);
    return {ok, "alpha_z=" + num(r.alpha_z) + " alpha_xy=" + num(r.alpha_xy) + " tau=" + num(p.tau_pend) +
                    " omega=" + num(p.omega_p) + " rho=" + num(rho) + " lambda=" + num(lambda)};
}

Outcome c3()
{
    bool ok = true;
    std::string d;
    for (int ns = 2; ns <= 5; ++ns) {
        // the shift is applied by every survivor to the same payload velocity
        const AntiSwing a = antiswing_constants(10.0, 0.8, 1.25);
        ok &= near(a.b_swing, 62.8, 0.05) && near(a.zeta, 1.12, 0.005);
        if (ns == 5) d = "B=" + num(a.b_swing) + " zeta=" + num(a.zeta) + " for N_s=2..5";
    }
    return {ok, d};
}

Outcome c4()
{
    const Envelope e = actuator_envelope(5, 10.0, 2, 0.82, 150.0);
    const bool ok = near(e.load, 32.7, 0.05) && near(e.bound, 123.0, 0.5) && near(e.utilization, 0.27, 0.005) && e.pass;
    return {ok, num(e.load) + " N <= " + num(e.bound) + " N, " + num(100 * e.utilization, 3) + "%"};
}

Outcome c5()
{
    const Mat2 pv = lyap_solve(100.0, 24.0);
    const GammaWindow w = gamma_window(2e-4, pv(1, 1), 25.0);
    const bool ok = std::abs(w.gamma_min / 1190.0 - 1.0) < 0.005 && std::abs(w.gamma_star / 4.76e5 - 1.0) < 0.005 &&
                    w.contains(2000.0);
    return {ok, "(" + num(w.gamma_min) + ", " + num(w.gamma_star) + "), 2000 inside=" + (w.contains(2000.0) ? "yes" : "no")};
}

Outcome c6()
{
    const AntiSwing a = antiswing_constants(10.0, 0.8, 1.25);
    const SteadyStateBound b = steady_state_bound(2.47, 1.25, a.zeta, 1.0 / 1.02, 30.0);
    return {near(b.total, 0.27, 0.005), num(b.total) + " m"};
}

Outcome c7()
{
    constexpr double pi = std::numbers::pi;
    const ReshapePlan p = reshape_targets({1, 2, 3}, {pi / 2, pi, 3 * pi / 2});
    bool geom = near(p.target[1], pi, 1e-12) && near(p.target[0], pi / 2 - pi / 6, 1e-12) &&
                near(p.target[2], 3 * pi / 2 + pi / 6, 1e-12);
    const double red = reshape_tension_reduction(4, 0, 0.8, 1.25);
    const bool ok = geom && near(red, 0.258, 0.005);
    return {ok, std::string("120 deg/pi/6 ") + (geom ? "ok" : "wrong") + ", reduction " + num(100 * red, 3) +
                    "% (want 25.8 +-0.5)"};
}

// ---------------------------------------------------------------- oracle / property

Outcome c8()
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> acc(-30.0, 30.0), tff(0.0, 140.0);
    ControllerParams c;
    const double h = c.g * std::tan(c.theta_max);
    double gap = 0.0, kkt = 0.0;
    for (int n = 0; n < 1000; ++n) {
        const Vec3 at(acc(rng), acc(rng), acc(rng));
        const double t_ff = tff(rng);
        const AzBounds zb = az_bounds(t_ff, c);
        const Vec3 lo0(-h, -h, zb.lo), hi0(h, h, zb.hi);
        auto cost = [&](const Vec3& a) { return c.w_t * (a - at).squaredNorm() + c.w_e * a.squaredNorm(); };
        Vec3 lo = lo0, hi = hi0, best = lo0;
        double jb = 1e300;
        for (int level = 0; level < 14; ++level) {
            const Vec3 st = (hi - lo) / 16.0;
            for (int i = 0; i <= 16; ++i)
                for (int j = 0; j <= 16; ++j)
                    for (int k = 0; k <= 16; ++k) {
                        const Vec3 a = lo + Vec3(i * st.x(), j * st.y(), k * st.z());
                        const double v = cost(a);
                        if (v < jb) {
                            jb = v;
                            best = a;
                        }
                    }
            lo = (best - 2.0 * st).cwiseMax(lo0);
            hi = (best + 2.0 * st).cwiseMin(hi0);
        }
        const Vec3 a = qp_project(at, t_ff, c).a;
        gap = std::max(gap, std::abs(jb - cost(a)));
        const Vec3 grad = 2.0 * (c.w_t + c.w_e) * a - 2.0 * c.w_t * at;
        for (int i = 0; i < 3; ++i) {
            double r;
            if (a[i] == lo0[i]) r = std::max(0.0, -grad[i]);
            else if (a[i] == hi0[i]) r = std::max(0.0, grad[i]);
            else r = std::abs(grad[i]);
            r = std::max({r, lo0[i] - a[i], a[i] - hi0[i]});
            kkt = std::max(kkt, r);
        }
    }
    return {gap < 1e-6 && kkt < 1e-9, "max objective gap " + num(gap) + ", max KKT residual " + num(kkt)};
}

WorldState lone_world(const SimParams& p)
{
    WorldState w;
    w.drones.resize(1);
    w.attach.assign(1, Vec3::Zero());
    w.survivors = {0};
    RopeBeadChain c;
    c.severed = true;
    w.ropes.push_back(c);
    return w;
}

Outcome c9()
{
    SimParams p;
    p.n_drones = 1;
    p.n_beads = 0;
    p.substeps = 1;
    auto tumble = [&](double dt) {
        WorldState w = lone_world(p);
        w.drones[0].w = Vec3(3.0, -2.0, 5.0);
        w.drones[0].v = Vec3(0.5, 0.0, 1.0);
        ControlOutput u;
        u.f = 25.0;
        u.tau = Vec3(0.05, -0.02, 0.01);
        const int n = int(std::lround(0.4 / dt));
        for (int k = 0; k < n; ++k) step(w, {u}, {}, p, dt);
        return w.drones[0];
    };
    const DroneState ref = tumble(1e-3 / 64.0);
    double prev = 0.0, slope = 1e9;
    for (double dt : {1e-3, 5e-4, 2.5e-4}) {
        const DroneState s = tumble(dt);
        const double e = (s.p - ref.p).norm() + (s.R - ref.R).norm();
        if (prev > 0.0) slope = std::min(slope, std::log2(prev / e));
        prev = e;
    }
    WorldState w = lone_world(p);
    w.payload.p = Vec3(0, 0, 50);
    w.payload.v = Vec3(1, 2, 5);
    for (int k = 0; k < 3000; ++k) step(w, {ControlOutput{}}, {}, p, 1e-3);
    const Vec3 exact(3.0, 6.0, 50.0 + 15.0 - 0.5 * p.g * 9.0);
    const double ball = (w.payload.p - exact).norm();
    return {slope >= 2.7 && ball < 1e-6, "min order slope " + num(slope) + ", ballistic error " + num(ball) + " m"};
}

Outcome c10()
{
    SimParams p;
    const SegmentParams seg = segment_params(p);
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> pos(-0.3, 0.3), vel(-20.0, 20.0);
    long pushes = 0;
    for (int n = 0; n < 100000; ++n) {
        const Vec3 pa(pos(rng), pos(rng), pos(rng)), pb(pos(rng), pos(rng), pos(rng));
        const Vec3 f = segment_force(pa, pb, Vec3(vel(rng), vel(rng), vel(rng)), Vec3(vel(rng), vel(rng), vel(rng)), seg);
        if (f.dot(pb - pa) < 0.0) ++pushes;
    }

    // hanging chain at hover chord, bead weight included, settled by damped relaxation
    const Vec3 top(p.ring_radius - p.attach_radius, 0.0, 0.0), bottom(0.0, 0.0, 0.0);
    const double chord = p.rope_length + 0.009;
    const Vec3 top_p = bottom + Vec3(top.x(), 0.0, std::sqrt(chord * chord - top.x() * top.x()));
    RopeBeadChain c = make_straight_chain(top_p, bottom, Vec3::Zero(), p);
    const int nb = p.n_beads;
    std::vector<Vec3> f(nb);
    for (int it = 0; it < 40000; ++it) {
        for (int j = 0; j < nb; ++j) {
            const Vec3 up = j == 0 ? top_p : c.bead_p[j - 1];
            const Vec3 dn = j + 1 == nb ? bottom : c.bead_p[j + 1];
            const Vec3 vu = j == 0 ? Vec3::Zero() : c.bead_v[j - 1];
            const Vec3 vd = j + 1 == nb ? Vec3::Zero() : c.bead_v[j + 1];
            f[j] = segment_force(c.bead_p[j], up, c.bead_v[j], vu, seg) + segment_force(c.bead_p[j], dn, c.bead_v[j], vd, seg) -
                   c.bead_mass * p.g * kE3;
        }
        for (int j = 0; j < nb; ++j) {
            c.bead_v[j] += 2e-5 * f[j] / c.bead_mass;
            c.bead_p[j] += 2e-5 * c.bead_v[j];
        }
    }
    const double t_true = drone_side_tension(c, top_p, Vec3::Zero());
    const double t_lumped = lumped_tension(chord, {p.k_eff(), p.rope_length});
    const double dev = std::abs(t_true - t_lumped);
    const double pole = element_shape_pole(p).real();
    const bool ok = pushes == 0 && dev <= 5 * 0.076 && std::abs(pole / -538.0 - 1.0) <= 0.10;
    return {ok, "compressive " + std::to_string(pushes) + "/100000, static |T-T_lumped| " + num(dev) +
                    " N (limit 0.38), shape pole " + num(pole) + " 1/s"};
}

Outcome c12()
{
    SimParams sp;
    ControllerParams c;
    c.d_rope = sp.slot_elevation();
    const Reference ref;
    const WorldState w = make_initial_world(sp, ref.at(0).p, ref.at(0).v, c.d_rope);
    std::mt19937_64 rng(12);
    std::normal_distribution<double> nd(0.0, 0.5);
    long diffs = 0, ticks = 0;
    for (int i = 0; i < sp.n_drones; ++i) {
        WorldState other = w;
        ModeFlags m;
        m.l1 = m.mpc = true;
        const double a = formation_angle(i, sp.n_drones);
        const Vec3 delta = sp.ring_radius * Vec3(std::cos(a), std::sin(a), 0.0);
        DroneController x(i, sp.n_drones, c, m, delta), y(i, sp.n_drones, c, m, delta);
        for (auto* d : {&x, &y}) {
            L1Params lp;
            d->attach_l1(std::make_unique<L1Adaptive>(lp));
            d->attach_mpc(std::make_unique<MpcLayer>(MpcConfig{}, c));
        }
        for (int k = 0; k < 300; ++k) {
            for (int j = 0; j < sp.n_drones; ++j) {
                if (j == i) continue;
                other.drones[j].p = w.drones[j].p + Vec3(nd(rng), nd(rng), nd(rng));
                other.drones[j].v = Vec3(nd(rng), nd(rng), nd(rng));
                other.ropes[j].severed = k % 3 == 0;
            }
            InfoSet a1{k * 1e-3, w.drones[i], rope_tension(w, i), w.payload.v, &ref};
            InfoSet a2{k * 1e-3, other.drones[i], rope_tension(other, i), other.payload.v, &ref};
            const ControlOutput o1 = x.tick(a1), o2 = y.tick(a2);
            ++ticks;
            if (std::memcmp(&o1.f, &o2.f, sizeof(double)) != 0 ||
                std::memcmp(o1.tau.data(), o2.tau.data(), 3 * sizeof(double)) != 0)
                ++diffs;
        }
    }
    return {diffs == 0, std::to_string(diffs) + " differing outputs over " + std::to_string(ticks) + " ticks"};
}

// ---------------------------------------------------------------- campaign

using Runs = std::map<std::string, const CampaignRun*>;

Outcome c11(const std::vector<CampaignRun>& runs)
{
    // smoothstep derivative polynomials at the endpoints
    auto d1 = [](double s) { return 30 * s * s - 60 * s * s * s + 30 * s * s * s * s; };
    auto d2 = [](double s) { return 60 * s - 180 * s * s + 120 * s * s * s; };
    const bool flat = d1(0) == 0.0 && d1(1) == 0.0 && d2(0) == 0.0 && d2(1) == 0.0 && smoothstep5(0.0) == 0.0 &&
                      smoothstep5(1.0) == 1.0;
    long solves = 0, fails = 0;
    for (const auto& r : runs) {
        solves += r.stats.mpc_solves;
        fails += r.stats.mpc_failures;
    }
    return {flat && fails == 0 && solves > 0, std::string("smoothstep ") + (flat ? "flat" : "NOT flat") + ", MPC " +
                                                  std::to_string(solves - fails) + "/" + std::to_string(solves) + " solved"};
}

Outcome c13(const Runs& r)
{
    bool ok = true;
    std::string d;
    for (const char* v : {"V1", "V2", "V3", "V4", "V5", "V6"}) {
        const auto& m = r.at(v)->metrics;
        const bool p = r.at(v)->ok && m.rmse.d3 <= 0.35 && m.peak_sag_mm <= 100.0 && m.peak_tension <= 120.0;
        ok &= p;
        d += std::string(v) + "(" + num(m.rmse.d3, 3) + "m," + num(m.peak_sag_mm, 3) + "mm," + num(m.peak_tension, 4) + "N) ";
    }
    return {ok, d};
}

Outcome c14(const Runs& r)
{
    bool ok = true;
    double a = 0, b = 0, c = 0;
    for (const char* v : {"V1", "V2", "V3", "V4", "V5", "V6"}) {
        const auto& g = r.at(v)->metrics.gates;
        ok &= g.pass();
        a = std::max(a, g.h1a_ms);
        b = std::max(b, g.h1b_pct);
        c = std::max(c, g.h3_pct);
    }
    return {ok, "worst H1a " + num(a) + " ms, H1b " + num(b) + " %, H3 " + num(c) + " %"};
}

Outcome c15(const Runs& r)
{
    bool ok = true;
    std::string d;
    for (const char* v : {"V3", "V4", "V5"}) {
        const auto& on = r.at(v)->metrics;
        const auto& off = r.at(std::string("P2A-") + v)->metrics;
        const double rr = off.rmse.d3 / on.rmse.d3;
        const double sr = on.peak_sag_mm > 0 ? off.peak_sag_mm / on.peak_sag_mm : (off.peak_sag_mm > 0 ? INFINITY : 0.0);
        ok &= rr >= 1.2 && sr >= 2.5;
        d += std::string(v) + " rmse x" + num(rr, 3) + " sag x" + num(sr, 3) + "; ";
    }
    return {ok, d};
}

Outcome c16(const Runs& r)
{
    const double tp = pendulum_period(SimParams{});
    bool ok = true;
    double worst = 0.0;
    int n = 0;
    for (const char* v : {"V3", "V4", "V5", "V6"})
        for (const auto& f : r.at(v)->metrics.faults) {
            ++n;
            ok &= f.recovered && f.t_rec < tp;
            worst = f.recovered ? std::max(worst, f.t_rec) : INFINITY;
        }
    return {ok, std::to_string(n) + " faults, worst t_rec " + num(worst) + " s (limit " + num(tp) + ")"};
}

Outcome c17(const Runs& r)
{
    bool ok = true;
    std::string d = "rho_hat:";
    for (const char* t : {"DWELL-r0.5", "DWELL-r0.75", "DWELL-r1", "DWELL-r1.25", "DWELL-r1.5", "DWELL-r2"}) {
        const double rho = r.at(t)->metrics.rho_peak;
        ok &= rho >= 0.0 && rho < 1.0;
        d += " " + num(rho, 3);
    }
    d += "; proxy V4 " + num(r.at("V4")->metrics.rho_proxy, 3) + " V5 " + num(r.at("V5")->metrics.rho_proxy, 3);
    for (const char* v : {"V4", "V5"}) {
        const double p = r.at(v)->metrics.rho_proxy;
        ok &= p >= 0.0 && p < 1.0;
    }
    return {ok, d};
}

Outcome c18(const Runs& r)
{
    const double masses[] = {2.5, 3.0, 3.5, 3.9};
    const char* tags[] = {"2.5", "3", "3.5", "3.9"};
    double lo = 1e9, hi = 0, prev_off = 0, worst_rec = 1e9;
    bool mono = true;
    for (int i = 0; i < 4; ++i) {
        const std::string base = std::string("P2B-m") + tags[i] + "-";
        const auto& on = r.at(base + "ff-on")->metrics;
        const auto& off = r.at(base + "ff-off")->metrics;
        const auto& l1 = r.at(base + "ff-off+l1")->metrics;
        lo = std::min(lo, on.rmse.d3);
        hi = std::max(hi, on.rmse.d3);
        if (i > 0 && off.rmse.d3 <= prev_off) mono = false;
        prev_off = off.rmse.d3;
        const double gap = off.rms_sag_mm - on.rms_sag_mm;
        worst_rec = std::min(worst_rec, gap > 0 ? (off.rms_sag_mm - l1.rms_sag_mm) / gap : 0.0);
        (void)masses[i];
    }
    const double var = (hi - lo) / lo;
    return {var < 0.05 && mono && worst_rec >= 0.25, "FF-on variation " + num(100 * var, 3) + "%, FF-off monotone " +
                                                         (mono ? "yes" : "no") + ", L1 recovers >= " +
                                                         num(100 * worst_rec, 3) + "% of sag gap"};
}

Outcome c19(const Runs& r)
{
    double lo = 1e9, hi = 0, prev = INFINITY;
    bool mono = true;
    std::string d = "time over:";
    for (const char* t : {"P2C-T60", "P2C-T70", "P2C-T80", "P2C-T90", "P2C-T100"}) {
        const auto* x = r.at(t);
        lo = std::min(lo, x->metrics.peak_tension);
        hi = std::max(hi, x->metrics.peak_tension);
        if (x->time_over_ceiling > prev || (prev > 0.0 && x->time_over_ceiling == prev)) mono = false;
        prev = x->time_over_ceiling;
        d += " " + num(x->time_over_ceiling, 3);
    }
    const double var = (hi - lo) / lo;
    return {var < 0.01 && mono, "peak tension spread " + num(100 * var, 3) + "%, " + d};
}

Outcome c20(const Runs& r)
{
    bool stable = true;
    std::string d;
    for (const char* t : {"GAMMA-500", "GAMMA-2000", "GAMMA-10000", "GAMMA-30000", "GAMMA-50000", "GAMMA-80000"}) {
        const auto* x = r.at(t);
        stable &= x->ok && std::isfinite(x->metrics.alt_rmse) && x->metrics.alt_rmse < 0.35;
        d += " " + num(x->metrics.alt_rmse, 3);
    }
    const double a = r.at("GAMMA-500")->metrics.alt_rmse, b = r.at("GAMMA-10000")->metrics.alt_rmse;
    return {stable && a > b, "altitude rmse (m):" + d};
}

} // namespace

int main()
{
    int failed = 0;
    auto report = [&](int id, const Outcome& o) {
        std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    };
    report(1, c1());
    report(2, c2());
    report(3, c3());
    report(4, c4());
    report(5, c5());
    report(6, c6());
    report(7, c7());
    report(8, c8());
    report(9, c9());
    report(10, c10());
    report(12, c12());

    const auto t0 = std::chrono::steady_clock::now();
    const int jobs = std::max(1u, std::thread::hardware_concurrency());
    const std::vector<CampaignRun> runs = run_campaign(campaign_matrix("all"), "", jobs);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Runs by;
    int errors = 0;
    for (const auto& r : runs) {
        by[r.entry.tag] = &r;
        if (!r.ok) {
            ++errors;
            std::printf("run %s failed: %s\n", r.entry.tag.c_str(), r.error.c_str());
        }
    }
    std::printf("campaign: %zu runs, %d errors, %.1f s wall on %d threads\n", runs.size(), errors, wall, jobs);

    report(11, c11(runs));
    report(13, c13(by));
    report(14, c14(by));
    report(15, c15(by));
    report(16, c16(by));
    report(17, c17(by));
    report(18, c18(by));
    report(19, c19(by));
    report(20, c20(by));
    std::printf("%d of 20 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
