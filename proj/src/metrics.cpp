#include "slung/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace slung {

void Trace::reserve(std::size_t n, int drones)
{
    t.reserve(n);
    pL.reserve(n);
    pL_ref.reserve(n);
    tension.assign(drones, {});
    thrust.assign(drones, {});
    code.assign(drones, {});
    active.assign(drones, {});
    for (int i = 0; i < drones; ++i) {
        tension[i].reserve(n);
        thrust[i].reserve(n);
        code[i].reserve(n);
        active[i].reserve(n);
    }
}

namespace {
bool in_window(double t, Window w)
{
    return t >= w.t0 - 1e-9 && t <= w.t1 + 1e-9;
}
} // namespace

std::vector<double> error_norm(const std::vector<Vec3>& p, const std::vector<Vec3>& ref)
{
    std::vector<double> e(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) e[k] = (p[k] - ref[k]).norm();
    return e;
}

Rmse rmse(const std::vector<Vec3>& p, const std::vector<Vec3>& ref, const std::vector<double>& t,
          Window w)
{
    double s3 = 0.0, sxy = 0.0, sz = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (!in_window(t[k], w)) continue;
        const Vec3 e = p[k] - ref[k];
        s3 += e.squaredNorm();
        sxy += e.x() * e.x() + e.y() * e.y();
        sz += e.z() * e.z();
        ++n;
    }
    if (n == 0) return {};
    return {std::sqrt(s3 / n), std::sqrt(sxy / n), std::sqrt(sz / n)};
}

double recovery_time(const std::vector<double>& err, const std::vector<double>& t, double t_star,
                     double thr, double hold)
{
    double start = -1.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t_star - 1e-12) continue;
        if (err[k] < thr) {
            if (start < 0.0) start = t[k];
            if (t[k] - start >= hold - 1e-9) return start - t_star;
        } else {
            start = -1.0;
        }
    }
    return -1.0;
}

double iae(const std::vector<double>& err, const std::vector<double>& t, double t_star,
           double horizon)
{
    double s = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k) {
        const double a = std::max(t[k - 1], t_star), b = std::min(t[k], t_star + horizon);
        if (b <= a) continue;
        // trapezoid on the clipped interval
        const double h = t[k] - t[k - 1];
        auto at = [&](double x) { return err[k - 1] + (err[k] - err[k - 1]) * (x - t[k - 1]) / h; };
        s += 0.5 * (at(a) + at(b)) * (b - a);
    }
    return s;
}

double peak_sag(const std::vector<Vec3>& p, const std::vector<Vec3>& ref,
                const std::vector<double>& t, double t_star, double horizon)
{
    double m = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k)
        if (t[k] >= t_star - 1e-12 && t[k] <= t_star + horizon + 1e-12)
            m = std::max(m, ref[k].z() - p[k].z());
    return m;
}

double rms_sag(const std::vector<Vec3>& p, const std::vector<Vec3>& ref,
               const std::vector<double>& t, Window w)
{
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (!in_window(t[k], w)) continue;
        const double d = std::max(0.0, ref[k].z() - p[k].z());
        s += d * d;
        ++n;
    }
    return n ? std::sqrt(s / n) : 0.0;
}

std::vector<double> lyapunov_proxy(const std::vector<double>& ez, double dt, const Mat2& pv,
                                   double smooth)
{
    const std::size_t n = ez.size();
    std::vector<double> v(n, 0.0);
    if (n == 0) return v;
    // centered moving average, then 3-point central difference
    const int half = std::max(0, int(std::lround(smooth / dt)) / 2);
    std::vector<double> pre(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) pre[k + 1] = pre[k] + ez[k];
    std::vector<double> sm(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t a = k >= std::size_t(half) ? k - half : 0;
        const std::size_t b = std::min(n - 1, k + half);
        sm[k] = (pre[b + 1] - pre[a]) / double(b - a + 1);
    }
    for (std::size_t k = 0; k < n; ++k) {
        double d = 0.0;
        if (n > 1) {
            if (k == 0) d = (sm[1] - sm[0]) / dt;
            else if (k == n - 1) d = (sm[n - 1] - sm[n - 2]) / dt;
            else d = (sm[k + 1] - sm[k - 1]) / (2.0 * dt);
        }
        const Vec2 xi(ez[k], d);
        v[k] = xi.dot(pv * xi);
    }
    return v;
}

namespace {
double horizon_after(const std::vector<double>& faults, std::size_t i, double tau_pend, double t_end)
{
    double h = tau_pend;
    if (i + 1 < faults.size()) h = std::min(h, faults[i + 1] - faults[i]);
    return std::min(h, t_end - faults[i]);
}

std::size_t index_before(const std::vector<double>& t, double ts)
{
    // last sample strictly before ts
    auto it = std::lower_bound(t.begin(), t.end(), ts - 1e-12);
    if (it == t.begin()) return 0;
    return std::size_t(it - t.begin()) - 1;
}
} // namespace

PeakRatio rho_hat_peak(const std::vector<double>& ez, const std::vector<double>& t,
                       const std::vector<double>& faults, double tau_pend, double pre)
{
    PeakRatio r;
    if (t.empty()) return r;
    for (std::size_t i = 0; i < faults.size(); ++i) {
        const double ts = faults[i];
        double dc = 0.0;
        int n = 0;
        for (std::size_t k = 0; k < t.size(); ++k)
            if (t[k] >= ts - pre - 1e-12 && t[k] < ts - 1e-12) {
                dc += ez[k];
                ++n;
            }
        dc = n ? dc / n : 0.0;
        const double h = horizon_after(faults, i, tau_pend, t.back());
        double peak = 0.0;
        for (std::size_t k = 0; k < t.size(); ++k)
            if (t[k] >= ts - 1e-12 && t[k] <= ts + h + 1e-12) peak = std::max(peak, std::abs(ez[k] - dc));
        r.peaks.push_back(peak);
    }
    if (r.peaks.size() >= 2 && r.peaks[0] > 0.0) r.rho = r.peaks[1] / r.peaks[0];
    return r;
}

double rho_hat_proxy(const std::vector<double>& v, const std::vector<double>& t,
                     const std::vector<double>& faults)
{
    if (faults.size() < 2 || t.empty()) return -1.0;
    const double v1 = v[index_before(t, faults[0])];
    const double v2 = v[index_before(t, faults[1])];
    if (!(v1 > 0.0)) return -1.0;
    return v2 / v1;
}

std::vector<double> chi_hat(const std::vector<double>& v, const std::vector<double>& t,
                            const std::vector<double>& faults, double tau_pend)
{
    std::vector<double> out;
    if (t.empty()) return out;
    for (std::size_t i = 0; i < faults.size(); ++i) {
        const double v0 = v[index_before(t, faults[i])];
        const double h = horizon_after(faults, i, tau_pend, t.back());
        double m = 0.0;
        for (std::size_t k = 0; k < t.size(); ++k)
            if (t[k] >= faults[i] - 1e-12 && t[k] <= faults[i] + h + 1e-12) m = std::max(m, v[k] - v0);
        out.push_back(m);
    }
    return out;
}

GateReport domain_gates(const std::vector<std::vector<double>>& tension,
                        const std::vector<std::vector<std::uint8_t>>& active,
                        const std::vector<std::vector<int>>& code, const std::vector<double>& t,
                        Window w, double dt, double eps)
{
    GateReport g;
    const std::size_t nr = tension.size();
    std::vector<std::vector<double>> tw(nr);
    std::vector<std::vector<std::uint8_t>> aw(nr);
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t k = 0; k < t.size(); ++k)
            if (in_window(t[k], w)) {
                tw[r].push_back(tension[r][k]);
                aw[r].push_back(active[r][k]);
            }
    const SlackAudit sa = slack_audit(tw, aw, dt, eps);
    g.h1a_ms = sa.max_run_all * 1e3;
    g.h1b_pct = sa.duty * 100.0;
    std::size_t trans = 0, ticks = 0;
    for (std::size_t d = 0; d < code.size(); ++d)
        for (std::size_t k = 1; k < t.size(); ++k) {
            if (!in_window(t[k], w) || !in_window(t[k - 1], w)) continue;
            if (!active[d][k] || !active[d][k - 1]) continue;
            ++ticks;
            if (code[d][k] != code[d][k - 1]) ++trans;
        }
    g.h3_pct = ticks ? 100.0 * double(trans) / double(ticks) : 0.0;
    g.h1a_pass = g.h1a_ms <= 40.0 + 1e-9;
    g.h1b_pass = g.h1b_pct <= 2.5;
    g.h3_pass = g.h3_pct <= 1.0;
    return g;
}

ActuatorAudit actuator_audit(const std::vector<std::vector<double>>& thrust,
                             const std::vector<double>& t, Window w, double f_max, double dt)
{
    ActuatorAudit a;
    a.max_ratio.assign(thrust.size(), 0.0);
    a.time_above.assign(thrust.size(), 0.0);
    for (std::size_t d = 0; d < thrust.size(); ++d)
        for (std::size_t k = 0; k < t.size(); ++k) {
            if (!in_window(t[k], w)) continue;
            const double r = thrust[d][k] / f_max;
            a.max_ratio[d] = std::max(a.max_ratio[d], r);
            if (r > 0.9) a.time_above[d] += dt;
            if (r >= 1.0 - 1e-12) a.saturated = true;
        }
    for (double r : a.max_ratio) a.worst_ratio = std::max(a.worst_ratio, r);
    return a;
}

double peak_tension(const std::vector<std::vector<double>>& tension,
                    const std::vector<std::vector<std::uint8_t>>& active,
                    const std::vector<double>& t, Window w)
{
    double m = 0.0;
    for (std::size_t r = 0; r < tension.size(); ++r)
        for (std::size_t k = 0; k < t.size(); ++k)
            if (in_window(t[k], w) && active[r][k]) m = std::max(m, tension[r][k]);
    return m;
}

double time_over(const std::vector<std::vector<double>>& tension,
                 const std::vector<std::vector<std::uint8_t>>& active,
                 const std::vector<double>& t, Window w, double ceiling)
{
    std::size_t over = 0, n = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (!in_window(t[k], w)) continue;
        ++n;
        for (std::size_t r = 0; r < tension.size(); ++r)
            if (active[r][k] && tension[r][k] > ceiling) {
                ++over;
                break;
            }
    }
    return n ? double(over) / double(n) : 0.0;
}

RunMetrics compute_metrics(const Trace& tr, const std::vector<FaultEvent>& faults,
                           const MetricsOptions& opt)
{
    RunMetrics m;
    const auto& t = tr.t;
    m.rmse = rmse(tr.pL, tr.pL_ref, t, opt.window);
    m.alt_rmse = m.rmse.z;
    m.rms_sag_mm = 1e3 * rms_sag(tr.pL, tr.pL_ref, t, opt.window);
    m.peak_tension = peak_tension(tr.tension, tr.active, t, opt.window);
    const std::vector<double> err = error_norm(tr.pL, tr.pL_ref);
    std::vector<double> ez(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) ez[k] = tr.pL_ref[k].z() - tr.pL[k].z();
    const std::vector<double> v = lyapunov_proxy(ez, tr.dt, opt.pv);

    std::vector<double> ft;
    for (const auto& f : faults) ft.push_back(f.t_star);
    const std::vector<double> chi = chi_hat(v, t, ft, opt.tau_pend);
    const double t_end = t.empty() ? 0.0 : t.back();
    for (std::size_t i = 0; i < faults.size(); ++i) {
        FaultMetrics fm;
        fm.t_star = faults[i].t_star;
        fm.drone = faults[i].drone;
        const double h = horizon_after(ft, i, opt.tau_pend, t_end);
        double pe = 0.0;
        for (std::size_t k = 0; k < t.size(); ++k)
            if (t[k] >= fm.t_star - 1e-12 && t[k] <= fm.t_star + h + 1e-12) pe = std::max(pe, err[k]);
        fm.peak_error_mm = 1e3 * pe;
        fm.sag_mm = 1e3 * peak_sag(tr.pL, tr.pL_ref, t, fm.t_star, h);
        fm.t_rec = recovery_time(err, t, fm.t_star);
        fm.recovered = fm.t_rec >= 0.0;
        fm.iae = iae(err, t, fm.t_star, h);
        fm.chi_hat = i < chi.size() ? chi[i] : 0.0;
        m.peak_sag_mm = std::max(m.peak_sag_mm, fm.sag_mm);
        m.faults.push_back(fm);
    }
    if (!faults.empty()) {
        Window post{faults.front().t_star, opt.window.t1};
        m.peak_post_fault_tension = peak_tension(tr.tension, tr.active, t, post);
    }
    m.rho_peak = rho_hat_peak(ez, t, ft, opt.tau_pend).rho;
    m.rho_proxy = rho_hat_proxy(v, t, ft);
    m.gates = domain_gates(tr.tension, tr.active, tr.code, t, opt.window, tr.dt, opt.slack_eps);
    m.actuator = actuator_audit(tr.thrust, t, opt.window, opt.f_max, tr.dt);
    {
        std::vector<std::vector<double>> tw(tr.tension.size());
        std::vector<std::vector<std::uint8_t>> aw(tr.tension.size());
        for (std::size_t r = 0; r < tr.tension.size(); ++r)
            for (std::size_t k = 0; k < t.size(); ++k)
                if (in_window(t[k], opt.window)) {
                    tw[r].push_back(tr.tension[r][k]);
                    aw[r].push_back(tr.active[r][k]);
                }
        m.asymmetry = tension_asymmetry(tw, aw);
    }
    return m;
}

} // namespace slung
