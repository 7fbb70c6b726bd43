#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace slung {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

inline const Vec3 kE3{0.0, 0.0, 1.0};

/// Plant and integrator constants.
struct SimParams {
    int n_drones = 5;
    double drone_mass = 1.5;          // kg
    double payload_mass = 10.0;       // kg
    double rope_length = 1.25;        // m, unstretched
    double segment_stiffness = 25000; // N/m per segment
    int n_beads = 8;
    double rope_time_constant = 0.0063; // s, sets bead mass
    double shape_damping_ratio = 1.2;   // sets segment damping
    double ring_radius = 0.80;          // m, formation ring
    double attach_radius = 0.50;        // m, payload-side attachment ring
    double g = 9.81;
    double f_min = 0.0;
    double f_max = 150.0;
    double tau_max = 10.0;
    double dt = 1e-3;   // physics/control tick
    int substeps = 5;   // RK3 substeps per tick
    double duration = 30.0;
    Vec3 inertia{0.02, 0.02, 0.04}; // kg m^2, principal
    double initial_chord = 1.17;    // m
    bool bead_gravity = true;

    int n_segments() const { return n_beads + 1; }
    double segment_rest() const { return rope_length / n_segments(); }
    double bead_mass() const;
    double segment_damping() const;
    double k_eff() const { return segment_stiffness / n_segments(); }
    /// Vertical extent of an unstretched rope from the ring to its payload anchor.
    double slot_elevation() const;
};

struct ControlDebug {
    Vec3 a_target = Vec3::Zero();
    Vec3 a_cmd = Vec3::Zero();
    double t_ff = 0.0;
    int active_code = 0;
    double u_ad = 0.0;
    double mpc_slack = 0.0;
    int mpc_status = 0; // 0 unused, 1 solved, 2 max-iter, 3 infeasible
    int mpc_iterations = 0;
};

/// Per-drone actuator command.
struct ControlOutput {
    double f = 0.0;
    Vec3 tau = Vec3::Zero();
    ControlDebug debug;
};

} // namespace slung
