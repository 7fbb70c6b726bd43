#pragma once

#include "slung/types.hpp"

#include <stdexcept>

namespace slung {

class NotHurwitzError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Solves A'P + PA = -I for A = [[0,1],[-kp,-kd]] in closed form.
Mat2 lyap_solve(double kp, double kd);

Mat2 companion(double kp, double kd);

/// |Re| of the slowest pole of s^2 + kd s + kp.
double decay_rate(double kp, double kd);

struct DecayRates {
    double alpha_z, alpha_xy, alpha_min;
};
DecayRates decay_rates(double kp_z, double kd_z, double kp_xy, double kd_xy);

struct PendulumConstants {
    double tau_pend, omega_p;
};
PendulumConstants pendulum_constants(double length, double g = 9.81);

double contraction(double alpha_min, double tau_pend);

struct AntiSwing {
    double b_swing, zeta;
};
AntiSwing antiswing_constants(double m_L, double k_swing, double length, double g = 9.81);

struct Envelope {
    double load, bound, utilization;
    bool pass;
};
Envelope actuator_envelope(int n, double m_L, int faults, double kappa_act, double f_max,
                           double g = 9.81);

struct SteadyStateBound {
    double pendulum_term, tracking_term, total;
};
SteadyStateBound steady_state_bound(double a_max, double length, double zeta, double kappa_qp,
                                    double kp_xy, double g = 9.81);

/// General jump bound c(D + D^2).
double chi_bound(double delta_f, double c_bar);
/// Symmetric-hover form kappa_V D^2 / (2 N_s).
double chi_bound_symmetric(double delta_f, double kappa_v, int n_s);

} // namespace slung
