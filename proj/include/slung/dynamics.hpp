#pragma once

#include "slung/cables.hpp"
#include "slung/types.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace slung {

struct DroneState {
    Vec3 p = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    Mat3 R = Mat3::Identity();
    Vec3 w = Vec3::Zero();
};

struct PayloadState {
    Vec3 p = Vec3::Zero();
    Vec3 v = Vec3::Zero();
};

struct WorldState {
    double t = 0.0;
    std::vector<DroneState> drones;
    PayloadState payload;
    std::vector<RopeBeadChain> ropes;
    std::vector<int> survivors;     // sorted
    std::vector<Vec3> attach;       // payload-side attachment offsets, world-aligned
};

struct FaultEvent {
    double t_star = 0.0;
    int drone = 0;
};

struct FaultSchedule {
    std::vector<FaultEvent> events;
    bool subthreshold = false; // dwell-sweep probes may violate the dwell rule
};

struct ScheduleReport {
    bool valid = true;
    std::vector<std::string> violations;
    double min_dwell = 0.0;
    double dwell_margin = 0.0; // min dwell minus pendulum period
};

/// Wind seen by every body during one tick.
struct WindSample {
    bool enabled = false;
    Vec3 gust = Vec3::Zero();
    double c_drag = 0.25;
    double w_max = 1.0;
};

struct StepDiag {
    long clip_events = 0;
    long wind_evals = 0;
};

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Mat3 hat(const Vec3& w);
Mat3 polar_project(const Mat3& m);

/// a = (f R e3 - m g e3 - T + F_w)/m, with T the rope force on the payload side
/// (the drone feels -T).
Vec3 drone_accel(const DroneState& s, double f, const Vec3& cable_force, const Vec3& wind,
                 const SimParams& p);

/// Point-mass payload acceleration from surviving rope forces.
Vec3 payload_accel(const PayloadState& s, const std::vector<Vec3>& tensions, const Vec3& wind,
                   const SimParams& p);

struct AttitudeRates {
    Mat3 R_dot;
    Vec3 w_dot;
};
AttitudeRates attitude_dynamics(const Mat3& R, const Vec3& w, const Vec3& tau, const Vec3& inertia);

/// Advances by dt with p.substeps explicit RK3 substeps, controls held.
/// Throws DivergenceError on non-finite state or |p| > 1e6 m.
void step(WorldState& world, const std::vector<ControlOutput>& controls, const WindSample& wind,
          const SimParams& p, double dt, StepDiag* diag = nullptr);

/// Marks the rope severed; kinematic state is not touched.
void apply_fault(WorldState& world, const FaultEvent& ev);

ScheduleReport validate_schedule(const FaultSchedule& s, const SimParams& p);

double pendulum_period(const SimParams& p);

/// Drones on the ring at slot altitude above pL, payload hanging at the initial chord.
WorldState make_initial_world(const SimParams& p, const Vec3& pL_ref, const Vec3& vL_ref,
                              double d_rope);

/// Formation angle of drone i.
double formation_angle(int i, int n);

/// Total mechanical energy (kinetic + gravity + elastic) for sanity checks.
double mechanical_energy(const WorldState& w, const SimParams& p);

/// Chord length of rope i (drone to payload attachment).
double chord_length(const WorldState& w, int i);

/// Drone-side tension of rope i.
double rope_tension(const WorldState& w, int i);

} // namespace slung
