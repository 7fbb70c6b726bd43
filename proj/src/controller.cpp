#include "slung/controller.hpp"

#include "slung/extensions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace slung {

namespace {

// value with first and second derivative along one variable
struct Jet {
    double v, d, dd;
};
Jet operator+(Jet a, Jet b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
Jet operator*(Jet a, Jet b)
{
    return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2.0 * a.d * b.d + a.v * b.dd};
}
Jet operator*(double k, Jet a) { return {k * a.v, k * a.d, k * a.dd}; }
Jet inv(Jet a)
{
    const double i = 1.0 / a.v;
    return {i, -a.d * i * i, (2.0 * a.d * a.d * i - a.dd) * i * i};
}
Jet sin(Jet a)
{
    const double s = std::sin(a.v), c = std::cos(a.v);
    return {s, c * a.d, c * a.dd - s * a.d * a.d};
}
Jet cos(Jet a)
{
    const double s = std::sin(a.v), c = std::cos(a.v);
    return {c, -s * a.d, -s * a.dd - c * a.d * a.d};
}

double sat(double x, double lim)
{
    return std::clamp(x, -lim, lim);
}

} // namespace

RefSample Reference::at(double t) const
{
    const double w = 2.0 * std::numbers::pi / p_.period;
    const Jet phi{w * (t - p_.t0), w, 0.0};
    const Jet s = sin(phi), c = cos(phi);
    const Jet den = inv(Jet{1.0, 0.0, 0.0} + s * s);
    const Jet x = p_.a * (c * den);
    const Jet y = p_.a * (s * c * den);
    const Jet z = Jet{p_.z0, 0.0, 0.0} + p_.hz * s;
    return {Vec3(x.v, y.v, z.v), Vec3(x.d, y.d, z.d), Vec3(x.dd, y.dd, z.dd)};
}

SlotSample slot(const RefSample& ref, const Vec3& delta, double d_rope)
{
    return {ref.p + delta + d_rope * kE3, ref.v};
}

Vec3 anti_swing_shift(const Vec3& vL, double k_swing, double s_max)
{
    const Vec3 vh(vL.x(), vL.y(), 0.0);
    const Vec3 s = -k_swing * vh;
    const double n = s.norm();
    if (n <= s_max) return s;
    return -s_max * vh / vh.norm();
}

Vec3 outer_pd(const Vec3& e_p, const Vec3& e_v, const Vec3& vL, const ControllerParams& c)
{
    Vec3 a;
    a.x() = c.kp_xy * e_p.x() + c.kd_xy * e_v.x() - c.w_swing * c.k_swing * vL.x();
    a.y() = c.kp_xy * e_p.y() + c.kd_xy * e_v.y() - c.w_swing * c.k_swing * vL.y();
    a.z() = c.kp_z * e_p.z() + c.kd_z * e_v.z();
    return a;
}

AzBounds az_bounds(double t_ff, const ControllerParams& c)
{
    return {(c.f_min - t_ff) / c.drone_mass - c.g, (c.f_max - t_ff) / c.drone_mass - c.g};
}

int active_code(const Vec3& a, double t_ff, const ControllerParams& c, double tol)
{
    const double h = c.g * std::tan(c.theta_max);
    const AzBounds b = az_bounds(t_ff, c);
    auto tri = [tol](double v, double lo, double hi) {
        if (v <= lo + tol) return 1;
        if (v >= hi - tol) return 2;
        return 0;
    };
    return tri(a.x(), -h, h) + 3 * tri(a.y(), -h, h) + 9 * tri(a.z(), b.lo, b.hi);
}

QpProjection qp_project(const Vec3& a_target, double t_ff, const ControllerParams& c)
{
    const double k = c.kappa();
    const double h = c.g * std::tan(c.theta_max);
    const AzBounds b = az_bounds(t_ff, c);
    QpProjection r;
    int code = 0;
    auto clamp_axis = [&](double v, double lo, double hi, int weight) {
        if (v < lo) {
            code += weight * 1;
            return lo;
        }
        if (v > hi) {
            code += weight * 2;
            return hi;
        }
        return v;
    };
    r.a.x() = clamp_axis(k * a_target.x(), -h, h, 1);
    r.a.y() = clamp_axis(k * a_target.y(), -h, h, 3);
    r.a.z() = clamp_axis(k * a_target.z(), b.lo, b.hi, 9);
    r.code = code;
    return r;
}

double thrust_command(double a_z, double t_ff, const ControllerParams& c)
{
    return std::clamp(c.drone_mass * (c.g + a_z) + t_ff, c.f_min, c.f_max);
}

AttitudeSetpoint attitude_cmd(double a_x, double a_y, const ControllerParams& c)
{
    return {sat(a_x / c.g, c.theta_max), sat(-a_y / c.g, c.theta_max)};
}

Vec3 attitude_pd(const Mat3& R, const Vec3& w, const AttitudeSetpoint& sp,
                 const AttitudeSetpoint& sp_rate, const ControllerParams& c)
{
    const double pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
    const double roll = std::atan2(R(2, 1), R(2, 2));
    const double e_yaw = -(R(1, 0) - R(0, 1)) / 2.0;
    Vec3 tau;
    tau.x() = c.kp_att * (sp.roll - roll) + c.kd_att * (sp_rate.roll - w.x());
    tau.y() = c.kp_att * (sp.pitch - pitch) + c.kd_att * (sp_rate.pitch - w.y());
    tau.z() = c.kp_yaw * e_yaw - c.kd_yaw * w.z();
    for (int i = 0; i < 3; ++i) tau[i] = sat(tau[i], c.tau_max);
    return tau;
}

double smoothstep5(double s)
{
    s = std::clamp(s, 0.0, 1.0);
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double smoothstep3(double s)
{
    s = std::clamp(s, 0.0, 1.0);
    return s * s * (3.0 - 2.0 * s);
}

DroneController::DroneController(int index, int n_drones, const ControllerParams& params,
                                 const ModeFlags& modes, Vec3 delta)
    : index_(index), n_(n_drones), c_(params), modes_(modes), delta_(delta), delta_now_(delta)
{
}

DroneController::~DroneController() = default;
DroneController::DroneController(DroneController&&) noexcept = default;
DroneController& DroneController::operator=(DroneController&&) noexcept = default;

void DroneController::attach_l1(std::unique_ptr<L1Adaptive> l1)
{
    l1_ = std::move(l1);
}
void DroneController::attach_mpc(std::unique_ptr<MpcLayer> mpc)
{
    mpc_ = std::move(mpc);
}
void DroneController::attach_reshape(std::unique_ptr<ReshapeAgent> agent)
{
    reshape_ = std::move(agent);
}

ControlOutput DroneController::tick(const InfoSet& info)
{
    ControlOutput out;
    const RefSample ref = info.reference->at(info.t);

    delta_now_ = delta_;
    if (modes_.reshape && reshape_) {
        reshape_->observe(info.t, info.tension);
        delta_now_ = reshape_->offset(info.t);
    }
    const SlotSample sl = slot(ref, delta_now_, c_.d_rope);
    const Vec3 shift = anti_swing_shift(info.payload_velocity, c_.k_swing, c_.s_max);
    const Vec3 e_p = sl.p + shift - info.self.p;
    const Vec3 e_v = sl.v - info.self.v;
    Vec3 a_target = outer_pd(e_p, e_v, info.payload_velocity, c_);

    double u_ad = 0.0;
    if (modes_.l1 && l1_) {
        u_ad = l1_->update(Vec2(e_p.z(), e_v.z()));
        a_target.z() += u_ad;
    }

    double t_ff = modes_.ff ? info.tension : 0.0;
    if (modes_.ff && modes_.pickup_ramp) t_ff *= smoothstep3(info.t / c_.pickup_ramp_time);

    Vec3 a_cmd;
    int code;
    if (modes_.mpc && mpc_) {
        MpcInput in;
        in.a_target = a_target;
        in.e_p = e_p;
        in.e_v = e_v;
        in.vL = info.payload_velocity;
        in.tension = info.tension;
        in.chord_rate = info.self.v.z() - info.payload_velocity.z();
        in.t_ff = t_ff;
        const MpcOutput mo = mpc_->solve(in);
        a_cmd = mo.a;
        code = active_code(a_cmd, t_ff, c_, 1e-6);
        out.debug.mpc_slack = mo.slack;
        out.debug.mpc_status = mo.status;
        out.debug.mpc_iterations = mo.iterations;
    } else {
        const QpProjection qp = qp_project(a_target, t_ff, c_);
        a_cmd = qp.a;
        code = qp.code;
    }

    out.f = thrust_command(a_cmd.z(), t_ff, c_);
    const AttitudeSetpoint sp = attitude_cmd(a_cmd.x(), a_cmd.y(), c_);
    if (first_) {
        prev_sp_ = sp;
        first_ = false;
    }
    const double beta = c_.dt / (c_.att_rate_filter + c_.dt);
    rate_f_.pitch += beta * ((sp.pitch - prev_sp_.pitch) / c_.dt - rate_f_.pitch);
    rate_f_.roll += beta * ((sp.roll - prev_sp_.roll) / c_.dt - rate_f_.roll);
    prev_sp_ = sp;
    out.tau = attitude_pd(info.self.R, info.self.w, sp, rate_f_, c_);

    out.debug.a_target = a_target;
    out.debug.a_cmd = a_cmd;
    out.debug.t_ff = t_ff;
    out.debug.active_code = code;
    out.debug.u_ad = u_ad;
    return out;
}

} // namespace slung
