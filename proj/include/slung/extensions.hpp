#pragma once

#include "slung/controller.hpp"
#include "slung/qpsolver.hpp"
#include "slung/types.hpp"

#include <memory>
#include <mutex>
#include <vector>

namespace slung {

// ---------------------------------------------------------------- L1 altitude layer

struct GammaWindow {
    double gamma_min = 0.0;
    double gamma_star = 0.0;
    bool contains(double gamma) const { return gamma > gamma_min && gamma < gamma_star; }
};

GammaWindow gamma_window(double ts, double p22, double omega_c);

struct L1Params {
    double gamma = 2000.0;
    double ts = 2e-4;
    int substeps = 5; // per control tick
    double omega_c = 25.0;
    double delta_min = -30.0, delta_max = 30.0; // m/s^2
    double kp = 100.0, kd = 24.0;
    double kappa = 1.0 / 1.02;
};

/// Predictor on the altitude slot error (e, e_dot) with reference model
/// A_m = [[0,1],[-kp,-kd]], projected-gradient estimate of a matched
/// disturbance, and a first-order low-pass on the injected correction.
class L1Adaptive {
public:
    explicit L1Adaptive(const L1Params& p);

    /// One control tick; runs p.substeps predictor/adaptation steps. Returns u_ad.
    double update(const Vec2& x);

    double estimate() const { return delta_hat_; }
    double filtered() const { return lp_; }
    Vec2 predictor() const { return x_hat_; }
    long projection_hits() const { return proj_hits_; }
    const L1Params& params() const { return p_; }

private:
    L1Params p_;
    Mat2 am_;
    Mat2 pm_;
    Vec2 x_hat_ = Vec2::Zero();
    double delta_hat_ = 0.0;
    double lp_ = 0.0;
    bool init_ = false;
    long proj_hits_ = 0;
};

// ---------------------------------------------------------------- MPC layer

struct MpcConfig {
    int horizon = 5;
    double dt = 0.01;
    double t_max = 100.0;
    double w_s = 1e4;
    double k_eff = 25000.0 / 9.0;
    double slack_reg = 1e-6; // small quadratic on slacks for conditioning
    double tol = 1e-6;
};

struct MpcInput {
    Vec3 a_target = Vec3::Zero();
    Vec3 e_p = Vec3::Zero();
    Vec3 e_v = Vec3::Zero();
    Vec3 vL = Vec3::Zero();
    double tension = 0.0;
    double chord_rate = 0.0; // m/s
    double t_ff = 0.0;
};

struct MpcOutput {
    Vec3 a = Vec3::Zero();
    double slack = 0.0; // first-step slack
    double max_slack = 0.0;
    int status = 1; // 1 solved, 2 max-iter, 3 infeasible
    int iterations = 0;
};

/// Tension prediction over the horizon with the chord rate held constant.
std::vector<double> mpc_tension_forecast(const MpcInput& in, const MpcConfig& cfg);

/// Decision vector: [a_0 .. a_{Np-1} (3 each), s_1 .. s_Np].
qp::Problem mpc_build(const MpcInput& in, const MpcConfig& cfg, const ControllerParams& c);

class MpcLayer {
public:
    MpcLayer(const MpcConfig& cfg, const ControllerParams& c);
    MpcOutput solve(const MpcInput& in);

    long solves() const { return solves_; }
    long failures() const { return failures_; }
    long fallbacks() const { return fallbacks_; }
    const MpcConfig& config() const { return cfg_; }

private:
    MpcConfig cfg_;
    ControllerParams c_;
    qp::Solver solver_;
    Vec3 last_a_ = Vec3::Zero();
    long solves_ = 0, failures_ = 0, fallbacks_ = 0;
};

// ---------------------------------------------------------------- reshape supervisor

/// Sustained-loss latch on a drone's own rope tension. A rope that has carried
/// load and then reads below the threshold for the whole window is declared cut.
class TensionLatch {
public:
    TensionLatch(double threshold = 0.5, double window = 0.1, double dt = 1e-3);
    /// Returns true on the tick the latch fires.
    bool observe(double t, double tension);
    bool latched() const { return latched_; }
    double latch_time() const { return t_latch_; }

private:
    double thr_, window_, dt_;
    bool armed_ = false;
    bool latched_ = false;
    long below_ = 0, above_ = 0;
    double t_latch_ = -1.0;
};

/// Offline form of the latch over a sampled trace; returns latch time or -1.
double reshape_detect(const std::vector<double>& tension, double dt, double t0 = 0.0,
                      double threshold = 0.5, double window = 0.1);

struct ReshapeMessage {
    int seq = 0;
    int fault_index = 0;
    int bits = 0;
    double t_sent = 0.0;
    double t_deliver = 0.0;
};

/// One-shot broadcast channel; the only cross-drone path in the system.
class ReshapeBus {
public:
    ReshapeBus(int n_drones, double min_spacing);
    void publish(int fault_index, double t);
    /// Messages deliverable strictly before t, with seq > after_seq.
    std::vector<ReshapeMessage> receive(int after_seq, double t) const;
    int bits_per_message() const { return bits_; }
    long total_bits() const;
    std::vector<ReshapeMessage> log() const;

private:
    int bits_;
    double spacing_;
    mutable std::mutex mu_;
    std::vector<ReshapeMessage> msgs_;
};

int broadcast_bits(int n);

struct ReshapePlan {
    std::vector<int> survivors;       // cyclic order
    std::vector<double> source;       // rad, per survivor
    std::vector<double> target;       // rad, per survivor
    double rotation = 0.0;            // common offset of the equiangular set
    double travel = 0.0;              // sum |target - source|
};

/// Equiangular reassignment over the survivors, cyclic order preserved,
/// minimizing total angular travel (ties broken by squared travel).
ReshapePlan reshape_targets(const std::vector<int>& survivors, const std::vector<double>& angles);

/// Per-rope static tensions under symmetric load sharing over direction cosines:
/// tension_i proportional to 1 / (N_s cos(gamma_i)), where gamma_i is the rope
/// inclination implied by the drone's angle relative to the payload centroid.
/// Returns the worst-case tension for a survivor set on the ring.
double static_worst_tension(const std::vector<double>& survivor_angles, double ring_radius,
                            double elevation, double payload_weight);

/// Worst-case static tension drop from the unreshaped survivor set to the
/// equiangular reassignment, as a fraction.
double reshape_tension_reduction(int n, int severed, double ring_radius, double elevation);

struct FormationPlan {
    int n = 5;
    double ring_radius = 0.8;
    std::vector<Vec3> attach; // payload-side offsets
};

/// Drone-side part of the supervisor: latch on own rope, publish, follow
/// reassignment broadcasts with a quintic blend.
class ReshapeAgent {
public:
    ReshapeAgent(int index, const FormationPlan& plan, std::shared_ptr<ReshapeBus> bus,
                 double t_trans = 5.0, double threshold = 0.5, double window = 0.1,
                 double dt = 1e-3);

    void observe(double t, double tension);
    Vec3 offset(double t) const;
    bool own_rope_lost() const { return latch_.latched(); }
    int transitions() const { return int(transitions_.size()); }

private:
    struct Transition {
        double t0;
        std::vector<int> survivors;
        std::vector<double> from, to;
    };
    std::vector<double> angles_at(double t, const std::vector<int>& survivors) const;

    int index_;
    FormationPlan plan_;
    std::shared_ptr<ReshapeBus> bus_;
    double t_trans_;
    TensionLatch latch_;
    bool published_ = false;
    int last_seq_ = 0;
    std::vector<int> severed_;
    std::vector<Transition> transitions_;
};

} // namespace slung
