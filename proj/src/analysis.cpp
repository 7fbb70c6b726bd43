#include "slung/analysis.hpp"

#include <cmath>
#include <numbers>

namespace slung {

Mat2 companion(double kp, double kd)
{
    Mat2 a;
    a << 0.0, 1.0, -kp, -kd;
    return a;
}

Mat2 lyap_solve(double kp, double kd)
{
    if (!(kp > 0.0) || !(kd > 0.0)) throw NotHurwitzError("lyap_solve: gains must be positive");
    Mat2 p;
    const double p12 = 1.0 / (2.0 * kp);
    const double p22 = (1.0 + kp) / (2.0 * kp * kd);
    const double p11 = (1.0 + kp) / (2.0 * kd) + kd / (2.0 * kp);
    p << p11, p12, p12, p22;
    return p;
}

double decay_rate(double kp, double kd)
{
    if (!(kp > 0.0) || !(kd > 0.0)) throw NotHurwitzError("decay_rate: gains must be positive");
    const double disc = kd * kd - 4.0 * kp;
    if (disc <= 0.0) return kd / 2.0;
    return (kd - std::sqrt(disc)) / 2.0;
}

DecayRates decay_rates(double kp_z, double kd_z, double kp_xy, double kd_xy)
{
    DecayRates r;
    r.alpha_z = decay_rate(kp_z, kd_z);
    r.alpha_xy = decay_rate(kp_xy, kd_xy);
    r.alpha_min = std::min(r.alpha_z, r.alpha_xy);
    return r;
}

PendulumConstants pendulum_constants(double length, double g)
{
    if (!(length > 0.0)) throw std::invalid_argument("pendulum_constants: length must be positive");
    return {2.0 * std::numbers::pi * std::sqrt(length / g), std::sqrt(g / length)};
}

double contraction(double alpha_min, double tau_pend)
{
    return std::exp(-alpha_min * tau_pend);
}

AntiSwing antiswing_constants(double m_L, double k_swing, double length, double g)
{
    if (!(m_L > 0.0) || !(k_swing > 0.0) || !(length > 0.0))
        throw std::invalid_argument("antiswing_constants: inputs must be positive");
    const double b = m_L * g * k_swing / length;
    return {b, b / (2.0 * m_L * std::sqrt(g / length))};
}

Envelope actuator_envelope(int n, double m_L, int faults, double kappa_act, double f_max, double g)
{
    if (n - faults < 2) throw std::invalid_argument("actuator_envelope: fewer than two survivors");
    Envelope e;
    e.load = m_L * g / double(n - faults);
    e.bound = kappa_act * f_max;
    e.utilization = e.load / e.bound;
    e.pass = e.load <= e.bound;
    return e;
}

SteadyStateBound steady_state_bound(double a_max, double length, double zeta, double kappa_qp,
                                    double kp_xy, double g)
{
    if (!(zeta > 0.0)) throw std::invalid_argument("steady_state_bound: zeta must be positive");
    SteadyStateBound b;
    b.pendulum_term = length * a_max / g * (1.0 - 1.0 / (2.0 * zeta * zeta));
    b.tracking_term = a_max / (kappa_qp * kp_xy);
    b.total = b.pendulum_term + b.tracking_term;
    return b;
}

double chi_bound(double delta_f, double c_bar)
{
    if (delta_f < 0.0) throw std::invalid_argument("chi_bound: negative jump");
    return c_bar * (delta_f + delta_f * delta_f);
}

double chi_bound_symmetric(double delta_f, double kappa_v, int n_s)
{
    if (delta_f < 0.0 || n_s < 1) throw std::invalid_argument("chi_bound_symmetric: bad input");
    return kappa_v * delta_f * delta_f / (2.0 * n_s);
}

} // namespace slung
