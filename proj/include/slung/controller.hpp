#pragma once

#include "slung/dynamics.hpp"
#include "slung/types.hpp"

#include <memory>

namespace slung {

struct ReferenceParams {
    double a = 3.0;      // m, lemniscate half-width
    double period = 12.0; // s
    double z0 = 3.0;     // m
    double hz = 0.35;    // m
    double t0 = 0.0;
};

struct RefSample {
    Vec3 p, v, a;
};

/// Planar lemniscate of Bernoulli with a sinusoidal altitude component.
class Reference {
public:
    explicit Reference(ReferenceParams p = {}) : p_(p) {}
    RefSample at(double t) const;
    const ReferenceParams& params() const { return p_; }

private:
    ReferenceParams p_;
};

struct ControllerParams {
    double kp_xy = 30.0, kd_xy = 15.0;
    double kp_z = 100.0, kd_z = 24.0;
    double kp_att = 25.0, kd_att = 4.0; // torque gains, N m per rad and per rad/s
    double kp_yaw = 25.0, kd_yaw = 4.0;
    double att_rate_filter = 0.01; // s, setpoint-rate filter time constant
    double k_swing = 0.8;
    double w_swing = 0.3;
    double s_max = 0.3;
    double d_rope = 1.25;
    double w_t = 1.0, w_e = 0.02;
    double theta_max = 0.6;
    double f_min = 0.0, f_max = 150.0;
    double tau_max = 10.0;
    double t_nominal = 19.62;
    double drone_mass = 1.5;
    double g = 9.81;
    double dt = 1e-3;
    double pickup_ramp_time = 1.0; // s
    double kappa() const { return w_t / (w_t + w_e); }
};

struct ModeFlags {
    bool ff = true;
    bool l1 = false;
    bool mpc = false;
    bool reshape = false;
    bool pickup_ramp = false;
};

/// Everything a drone's controller may read. Built fresh each tick.
struct InfoSet {
    double t = 0.0;
    DroneState self;
    double tension = 0.0;
    Vec3 payload_velocity = Vec3::Zero();
    const Reference* reference = nullptr;
};

struct SlotSample {
    Vec3 p, v;
};

SlotSample slot(const RefSample& ref, const Vec3& delta, double d_rope);

Vec3 anti_swing_shift(const Vec3& vL, double k_swing, double s_max);

Vec3 outer_pd(const Vec3& e_p, const Vec3& e_v, const Vec3& vL, const ControllerParams& c);

struct AzBounds {
    double lo, hi;
};
AzBounds az_bounds(double t_ff, const ControllerParams& c);

struct QpProjection {
    Vec3 a;
    int code = 0; // per-axis tri-state, x + 3y + 9z; 1 = lower bound, 2 = upper bound
};
QpProjection qp_project(const Vec3& a_target, double t_ff, const ControllerParams& c);

int active_code(const Vec3& a, double t_ff, const ControllerParams& c, double tol = 1e-9);

double thrust_command(double a_z, double t_ff, const ControllerParams& c);

struct AttitudeSetpoint {
    double pitch, roll;
};
AttitudeSetpoint attitude_cmd(double a_x, double a_y, const ControllerParams& c);

/// Euler-angle PD. Rates of the setpoints enter the derivative term.
Vec3 attitude_pd(const Mat3& R, const Vec3& w, const AttitudeSetpoint& sp,
                 const AttitudeSetpoint& sp_rate, const ControllerParams& c);

/// Quintic 10s^3 - 15s^4 + 6s^5 on [0,1], clamped outside.
double smoothstep5(double s);
/// Cubic 3s^2 - 2s^3 on [0,1], clamped outside.
double smoothstep3(double s);

class L1Adaptive;
class MpcLayer;
class ReshapeAgent;

/// Per-drone cascade. tick() only sees an InfoSet; there is no path to peer state.
class DroneController {
public:
    DroneController(int index, int n_drones, const ControllerParams& params,
                    const ModeFlags& modes, Vec3 delta);
    ~DroneController();
    DroneController(DroneController&&) noexcept;
    DroneController& operator=(DroneController&&) noexcept;

    ControlOutput tick(const InfoSet& info);

    void attach_l1(std::unique_ptr<L1Adaptive> l1);
    void attach_mpc(std::unique_ptr<MpcLayer> mpc);
    void attach_reshape(std::unique_ptr<ReshapeAgent> agent);

    int index() const { return index_; }
    const ModeFlags& modes() const { return modes_; }
    const ControllerParams& params() const { return c_; }
    Vec3 current_offset() const { return delta_now_; }
    const L1Adaptive* l1() const { return l1_.get(); }
    const MpcLayer* mpc() const { return mpc_.get(); }
    const ReshapeAgent* reshape() const { return reshape_.get(); }

private:
    int index_;
    int n_;
    ControllerParams c_;
    ModeFlags modes_;
    Vec3 delta_;
    Vec3 delta_now_;
    bool first_ = true;
    AttitudeSetpoint prev_sp_{0.0, 0.0};
    AttitudeSetpoint rate_f_{0.0, 0.0};
    std::unique_ptr<L1Adaptive> l1_;
    std::unique_ptr<MpcLayer> mpc_;
    std::unique_ptr<ReshapeAgent> reshape_;
};

} // namespace slung
