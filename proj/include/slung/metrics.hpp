#pragma once

#include "slung/cables.hpp"
#include "slung/dynamics.hpp"
#include "slung/types.hpp"

#include <cstdint>
#include <vector>

namespace slung {

/// Full-rate signals the metrics are computed from.
struct Trace {
    double dt = 1e-3;
    std::vector<double> t;
    std::vector<Vec3> pL, pL_ref;
    std::vector<std::vector<double>> tension;       // [rope][k]
    std::vector<std::vector<double>> thrust;        // [drone][k]
    std::vector<std::vector<int>> code;             // [drone][k]
    std::vector<std::vector<std::uint8_t>> active;  // [rope][k], survivor mask

    std::size_t size() const { return t.size(); }
    int drones() const { return int(tension.size()); }
    void reserve(std::size_t n, int drones);
};

struct Window {
    double t0 = 8.0, t1 = 30.0;
};

struct Rmse {
    double d3 = 0.0, xy = 0.0, z = 0.0;
};
Rmse rmse(const std::vector<Vec3>& p, const std::vector<Vec3>& ref, const std::vector<double>& t,
          Window w);

std::vector<double> error_norm(const std::vector<Vec3>& p, const std::vector<Vec3>& ref);

/// Time after t_star until |e| < thr holds for `hold` seconds; -1 if never.
double recovery_time(const std::vector<double>& err, const std::vector<double>& t, double t_star,
                     double thr = 0.35, double hold = 0.3);

/// Integral of |e| over [t_star, t_star + horizon].
double iae(const std::vector<double>& err, const std::vector<double>& t, double t_star,
           double horizon);

/// max(0, z_ref - z) over [t_star, t_star + horizon].
double peak_sag(const std::vector<Vec3>& p, const std::vector<Vec3>& ref,
                const std::vector<double>& t, double t_star, double horizon);

/// RMS of max(0, z_ref - z) over the window.
double rms_sag(const std::vector<Vec3>& p, const std::vector<Vec3>& ref,
               const std::vector<double>& t, Window w);

/// V = xi' P xi with xi = (e_z, de_z/dt), e_z = z_ref - z.
std::vector<double> lyapunov_proxy(const std::vector<double>& ez, double dt, const Mat2& pv,
                                   double smooth = 0.010);

/// Peak excursion ratio with the pre-fault DC offset removed.
struct PeakRatio {
    std::vector<double> peaks;
    double rho = -1.0; // -1 when undefined
};
PeakRatio rho_hat_peak(const std::vector<double>& ez, const std::vector<double>& t,
                       const std::vector<double>& faults, double tau_pend, double pre = 0.2);

/// Proxy ratio V(t2-)/V(t1-).
double rho_hat_proxy(const std::vector<double>& v, const std::vector<double>& t,
                     const std::vector<double>& faults);

/// Per-fault proxy jump: max of V - V(t*-) over the post-fault horizon.
std::vector<double> chi_hat(const std::vector<double>& v, const std::vector<double>& t,
                            const std::vector<double>& faults, double tau_pend);

struct GateReport {
    double h1a_ms = 0.0;
    double h1b_pct = 0.0;
    double h3_pct = 0.0;
    bool h1a_pass = true, h1b_pass = true, h3_pass = true;
    bool pass() const { return h1a_pass && h1b_pass && h3_pass; }
};

GateReport domain_gates(const std::vector<std::vector<double>>& tension,
                        const std::vector<std::vector<std::uint8_t>>& active,
                        const std::vector<std::vector<int>>& code, const std::vector<double>& t,
                        Window w, double dt, double eps = 0.1);

struct ActuatorAudit {
    std::vector<double> max_ratio;
    std::vector<double> time_above; // s above 0.9 f_max
    double worst_ratio = 0.0;
    bool saturated = false;
};
ActuatorAudit actuator_audit(const std::vector<std::vector<double>>& thrust,
                             const std::vector<double>& t, Window w, double f_max, double dt);

/// Max survivor tension over the window.
double peak_tension(const std::vector<std::vector<double>>& tension,
                    const std::vector<std::vector<std::uint8_t>>& active,
                    const std::vector<double>& t, Window w);

/// Fraction of window samples with any survivor above the ceiling.
double time_over(const std::vector<std::vector<double>>& tension,
                 const std::vector<std::vector<std::uint8_t>>& active,
                 const std::vector<double>& t, Window w, double ceiling);

struct FaultMetrics {
    double t_star = 0.0;
    int drone = 0;
    double peak_error_mm = 0.0;
    double sag_mm = 0.0;
    double t_rec = -1.0;
    bool recovered = false;
    double iae = 0.0;
    double chi_hat = 0.0;
};

struct RunMetrics {
    Rmse rmse;
    double peak_sag_mm = 0.0; // max over faults, 0 if fault-free
    double rms_sag_mm = 0.0;
    double peak_tension = 0.0;
    double peak_post_fault_tension = 0.0;
    std::vector<FaultMetrics> faults;
    double rho_peak = -1.0;
    double rho_proxy = -1.0;
    GateReport gates;
    ActuatorAudit actuator;
    AsymmetryStats asymmetry;
    double alt_rmse = 0.0;
};

struct MetricsOptions {
    Window window;
    double tau_pend = 2.2428;
    double f_max = 150.0;
    double slack_eps = 0.1;
    Mat2 pv = Mat2::Identity();
};

RunMetrics compute_metrics(const Trace& tr, const std::vector<FaultEvent>& faults,
                           const MetricsOptions& opt);

} // namespace slung
