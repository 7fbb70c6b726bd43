#include "slung/extensions.hpp"

#include "slung/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace slung {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_pi(double a)
{
    a = std::fmod(a + std::numbers::pi, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    return a - std::numbers::pi;
}
} // namespace

GammaWindow gamma_window(double ts, double p22, double omega_c)
{
    if (!(ts > 0.0) || !(p22 > 0.0) || !(omega_c > 0.0))
        throw std::invalid_argument("gamma_window: inputs must be positive");
    return {omega_c / p22, 2.0 / (ts * p22)};
}

// ---------------------------------------------------------------- L1

L1Adaptive::L1Adaptive(const L1Params& p) : p_(p)
{
    am_ = companion(p.kp, p.kd);
    pm_ = lyap_solve(p.kp, p.kd);
}

double L1Adaptive::update(const Vec2& x)
{
    if (!init_) {
        x_hat_ = x;
        init_ = true;
    }
    const double ts = p_.ts;
    const double a_lp = 1.0 - std::exp(-p_.omega_c * ts);
    for (int k = 0; k < p_.substeps; ++k) {
        const Vec2 err = x_hat_ - x;
        // P b with b = (0, 1)
        const double grad = err.dot(pm_.col(1));
        double d = delta_hat_ + ts * p_.gamma * grad;
        if (d < p_.delta_min || d > p_.delta_max) {
            d = std::clamp(d, p_.delta_min, p_.delta_max);
            ++proj_hits_;
        }
        delta_hat_ = d;
        lp_ += a_lp * (delta_hat_ - lp_);
        const double u_ad = -lp_;
        Vec2 xdot = am_ * x_hat_;
        xdot.y() -= p_.kappa * (u_ad + delta_hat_);
        x_hat_ += ts * xdot;
    }
    return -lp_;
}

// ---------------------------------------------------------------- MPC

std::vector<double> mpc_tension_forecast(const MpcInput& in, const MpcConfig& cfg)
{
    std::vector<double> t(cfg.horizon);
    double tk = in.tension;
    for (int k = 0; k < cfg.horizon; ++k) {
        tk = std::max(0.0, tk + cfg.k_eff * in.chord_rate * cfg.dt);
        t[k] = tk;
    }
    return t;
}

qp::Problem mpc_build(const MpcInput& in, const MpcConfig& cfg, const ControllerParams& c)
{
    const int np = cfg.horizon;
    const int na = 3 * np;
    const int n = na + np;
    qp::Problem pr;
    pr.P = Eigen::MatrixXd::Zero(n, n);
    pr.q = Eigen::VectorXd::Zero(n);

    // stage targets: the PD law along the error propagated under the baseline command
    Vec3 ep = in.e_p, ev = in.e_v;
    Vec3 at = in.a_target;
    const double h = cfg.dt;
    for (int k = 0; k < np; ++k) {
        if (k > 0) {
            at = outer_pd(ep, ev, in.vL, c);
            at.z() += in.a_target.z() - (c.kp_z * in.e_p.z() + c.kd_z * in.e_v.z());
        }
        const Vec3 ab = qp_project(at, in.t_ff, c).a;
        for (int ax = 0; ax < 3; ++ax) {
            const int i = 3 * k + ax;
            pr.P(i, i) = 2.0 * (c.w_t + c.w_e);
            pr.q[i] = -2.0 * c.w_t * at[ax];
        }
        ep += h * ev - 0.5 * h * h * ab;
        ev -= h * ab;
    }
    for (int k = 0; k < np; ++k) {
        pr.P(na + k, na + k) = 2.0 * cfg.slack_reg;
        pr.q[na + k] = cfg.w_s;
    }

    const std::vector<double> tf = mpc_tension_forecast(in, cfg);
    pr.A = Eigen::MatrixXd::Zero(np, n);
    pr.l = Eigen::VectorXd::Constant(np, -qp::kInf);
    pr.u = Eigen::VectorXd(np);
    for (int k = 0; k < np; ++k) {
        // T_k <= T_max + s_k
        pr.A(k, na + k) = -1.0;
        pr.u[k] = cfg.t_max - tf[k];
    }

    const double hb = c.g * std::tan(c.theta_max);
    const AzBounds zb = az_bounds(in.t_ff, c);
    pr.lb = Eigen::VectorXd(n);
    pr.ub = Eigen::VectorXd(n);
    for (int k = 0; k < np; ++k) {
        pr.lb.segment<3>(3 * k) = Eigen::Vector3d(-hb, -hb, zb.lo);
        pr.ub.segment<3>(3 * k) = Eigen::Vector3d(hb, hb, zb.hi);
    }
    pr.lb.tail(np).setZero();
    pr.ub.tail(np).setConstant(qp::kInf);
    return pr;
}

MpcLayer::MpcLayer(const MpcConfig& cfg, const ControllerParams& c) : cfg_(cfg), c_(c)
{
    solver_.settings().eps_abs = cfg.tol;
    solver_.settings().eps_rel = cfg.tol;
}

MpcOutput MpcLayer::solve(const MpcInput& in)
{
    const qp::Problem pr = mpc_build(in, cfg_, c_);
    const qp::Result r = solver_.solve(pr);
    ++solves_;
    MpcOutput out;
    out.iterations = r.iterations;
    const int na = 3 * cfg_.horizon;
    if (r.status == qp::Status::Solved) {
        out.status = 1;
        out.a = r.x.head<3>();
        // bounds are hard; clip tiny residual violations
        const double hb = c_.g * std::tan(c_.theta_max);
        const AzBounds zb = az_bounds(in.t_ff, c_);
        out.a.x() = std::clamp(out.a.x(), -hb, hb);
        out.a.y() = std::clamp(out.a.y(), -hb, hb);
        out.a.z() = std::clamp(out.a.z(), zb.lo, zb.hi);
        out.slack = std::max(0.0, r.x[na]);
        out.max_slack = std::max(0.0, r.x.tail(cfg_.horizon).maxCoeff());
        last_a_ = out.a;
    } else {
        ++failures_;
        ++fallbacks_;
        out.status = r.status == qp::Status::MaxIter ? 2 : 3;
        out.a = last_a_;
        solver_.reset_warm_start();
    }
    return out;
}

// ---------------------------------------------------------------- reshape

TensionLatch::TensionLatch(double threshold, double window, double dt)
    : thr_(threshold), window_(window), dt_(dt)
{
}

bool TensionLatch::observe(double t, double tension)
{
    if (latched_) return false;
    const long need = std::lround(window_ / dt_);
    if (tension >= thr_) {
        below_ = 0;
        if (!armed_ && ++above_ >= need) armed_ = true;
        return false;
    }
    above_ = 0;
    if (!armed_) return false;
    if (++below_ >= need) {
        latched_ = true;
        t_latch_ = t;
        return true;
    }
    return false;
}

double reshape_detect(const std::vector<double>& tension, double dt, double t0, double threshold,
                      double window)
{
    TensionLatch latch(threshold, window, dt);
    for (std::size_t k = 0; k < tension.size(); ++k)
        if (latch.observe(t0 + double(k) * dt, tension[k])) return latch.latch_time();
    return -1.0;
}

int broadcast_bits(int n)
{
    int b = 0;
    while ((1 << b) < n) ++b;
    return b;
}

ReshapeBus::ReshapeBus(int n_drones, double min_spacing)
    : bits_(broadcast_bits(n_drones)), spacing_(min_spacing)
{
}

void ReshapeBus::publish(int fault_index, double t)
{
    std::lock_guard lk(mu_);
    ReshapeMessage m;
    m.seq = int(msgs_.size()) + 1;
    m.fault_index = fault_index;
    m.bits = bits_;
    m.t_sent = t;
    m.t_deliver = t;
    if (!msgs_.empty()) m.t_deliver = std::max(t, msgs_.back().t_deliver + spacing_);
    msgs_.push_back(m);
}

std::vector<ReshapeMessage> ReshapeBus::receive(int after_seq, double t) const
{
    std::lock_guard lk(mu_);
    std::vector<ReshapeMessage> out;
    for (const auto& m : msgs_)
        if (m.seq > after_seq && m.t_deliver < t - 1e-12) out.push_back(m);
    return out;
}

long ReshapeBus::total_bits() const
{
    std::lock_guard lk(mu_);
    long b = 0;
    for (const auto& m : msgs_) b += m.bits;
    return b;
}

std::vector<ReshapeMessage> ReshapeBus::log() const
{
    std::lock_guard lk(mu_);
    return msgs_;
}

ReshapePlan reshape_targets(const std::vector<int>& survivors, const std::vector<double>& angles)
{
    const int ns = int(survivors.size());
    if (ns < 2) throw std::invalid_argument("reshape_targets: need at least two survivors");
    if (angles.size() != survivors.size())
        throw std::invalid_argument("reshape_targets: one angle per survivor");
    const double step = kTwoPi / ns;
    std::vector<double> d(ns);
    for (int j = 0; j < ns; ++j) d[j] = wrap_pi(angles[j] - step * j);

    auto l1 = [&](double th) {
        double s = 0.0;
        for (int j = 0; j < ns; ++j) s += std::abs(wrap_pi(th - d[j]));
        return s;
    };
    double best = 1e300;
    for (double c : d) best = std::min(best, l1(c));
    // optimal rotations form an arc between tied candidates; pick the point of
    // that arc closest to the circular mean
    std::vector<double> opt;
    for (double c : d)
        if (l1(c) <= best + 1e-12) opt.push_back(c);
    const double ref = opt.front();
    double lo = 0.0, hi = 0.0;
    for (double c : opt) {
        const double r = wrap_pi(c - ref);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    double mean = 0.0;
    for (double c : d) mean += wrap_pi(c - ref);
    mean /= ns;
    double th = ref + std::clamp(mean, lo, hi);
    if (l1(th) > best + 1e-9) th = ref;

    ReshapePlan p;
    p.survivors = survivors;
    p.source = angles;
    p.rotation = wrap_pi(th);
    p.target.resize(ns);
    for (int j = 0; j < ns; ++j) {
        const double delta = wrap_pi(th + step * j - angles[j]);
        p.target[j] = angles[j] + delta;
        p.travel += std::abs(delta);
    }
    return p;
}

double static_worst_tension(const std::vector<double>& survivor_angles, double ring_radius,
                            double elevation, double payload_weight)
{
    const int ns = int(survivor_angles.size());
    Eigen::MatrixXd U(3, ns);
    for (int j = 0; j < ns; ++j) {
        Vec3 u(ring_radius * std::cos(survivor_angles[j]), ring_radius * std::sin(survivor_angles[j]),
               elevation);
        U.col(j) = u.normalized();
    }
    const Vec3 w(0.0, 0.0, payload_weight);
    // minimum-norm tension vector balancing the weight
    const Eigen::VectorXd t =
        U.transpose() * (U * U.transpose()).completeOrthogonalDecomposition().solve(w);
    return t.maxCoeff();
}

double reshape_tension_reduction(int n, int severed, double ring_radius, double elevation)
{
    std::vector<int> surv;
    std::vector<double> ang;
    for (int i = 0; i < n; ++i)
        if (i != severed) {
            surv.push_back(i);
            ang.push_back(kTwoPi * i / n);
        }
    const double before = static_worst_tension(ang, ring_radius, elevation, 1.0);
    const ReshapePlan p = reshape_targets(surv, ang);
    const double after = static_worst_tension(p.target, ring_radius, elevation, 1.0);
    return 1.0 - after / before;
}

ReshapeAgent::ReshapeAgent(int index, const FormationPlan& plan, std::shared_ptr<ReshapeBus> bus,
                           double t_trans, double threshold, double window, double dt)
    : index_(index), plan_(plan), bus_(std::move(bus)), t_trans_(t_trans),
      latch_(threshold, window, dt)
{
}

std::vector<double> ReshapeAgent::angles_at(double t, const std::vector<int>& survivors) const
{
    std::vector<double> out;
    out.reserve(survivors.size());
    for (int s : survivors) {
        double a = kTwoPi * s / plan_.n;
        for (const auto& tr : transitions_) {
            if (tr.t0 > t) break;
            auto it = std::find(tr.survivors.begin(), tr.survivors.end(), s);
            if (it == tr.survivors.end()) continue;
            const auto j = std::size_t(it - tr.survivors.begin());
            const double sig = smoothstep5((t - tr.t0) / t_trans_);
            a = tr.from[j] + sig * (tr.to[j] - tr.from[j]);
        }
        out.push_back(a);
    }
    return out;
}

void ReshapeAgent::observe(double t, double tension)
{
    if (latch_.observe(t, tension) && !published_) {
        bus_->publish(index_, t);
        published_ = true;
    }
    for (const auto& m : bus_->receive(last_seq_, t)) {
        last_seq_ = m.seq;
        if (std::find(severed_.begin(), severed_.end(), m.fault_index) != severed_.end()) continue;
        severed_.push_back(m.fault_index);
        std::vector<int> surv;
        for (int i = 0; i < plan_.n; ++i)
            if (std::find(severed_.begin(), severed_.end(), i) == severed_.end()) surv.push_back(i);
        if (surv.size() < 2) continue;
        Transition tr;
        tr.t0 = t;
        tr.survivors = surv;
        tr.from = angles_at(t, surv);
        tr.to = reshape_targets(surv, tr.from).target;
        transitions_.push_back(tr);
    }
}

Vec3 ReshapeAgent::offset(double t) const
{
    const double a0 = kTwoPi * index_ / plan_.n;
    const Vec3 nominal = plan_.ring_radius * Vec3(std::cos(a0), std::sin(a0), 0.0);
    if (transitions_.empty() || latch_.latched()) return nominal;
    const auto& last = transitions_.back();
    auto it = std::find(last.survivors.begin(), last.survivors.end(), index_);
    if (it == last.survivors.end()) return nominal;
    const std::vector<double> ang = angles_at(t, last.survivors);
    // keep the survivors' mean horizontal pull on the payload at zero
    Vec3 shift = Vec3::Zero();
    Vec3 own = Vec3::Zero();
    for (std::size_t j = 0; j < ang.size(); ++j) {
        const Vec3 r = plan_.ring_radius * Vec3(std::cos(ang[j]), std::sin(ang[j]), 0.0);
        shift += r - plan_.attach[last.survivors[j]];
        if (last.survivors[j] == index_) own = r;
    }
    shift /= double(ang.size());
    return own - shift;
}

} // namespace slung
