#pragma once

#include "slung/types.hpp"

#include <complex>
#include <vector>

namespace slung {

struct SegmentParams {
    double k = 25000.0;  // N/m
    double c = 0.0;      // N s/m
    double rest = 0.0;   // m
};

SegmentParams segment_params(const SimParams& p);

/// Rope discretized into beads joined by tension-only Kelvin-Voigt segments.
/// Endpoints (drone, payload attachment) are not stored here.
struct RopeBeadChain {
    std::vector<Vec3> bead_p;
    std::vector<Vec3> bead_v;
    SegmentParams seg;
    double bead_mass = 0.0;
    bool severed = false;
};

/// Force on endpoint a from the segment a-b. Pull-only.
Vec3 segment_force(const Vec3& pa, const Vec3& pb, const Vec3& va, const Vec3& vb,
                   const SegmentParams& seg);

/// Number of coincident-endpoint evaluations seen by segment_force (diagnostic).
std::uint64_t degenerate_segment_count();

/// Tension magnitude of the drone-side segment.
double drone_side_tension(const RopeBeadChain& chain, const Vec3& drone_p, const Vec3& drone_v);

/// Tension magnitude of the payload-side segment.
double payload_side_tension(const RopeBeadChain& chain, const Vec3& attach_p, const Vec3& attach_v);

struct LumpedCable {
    double k_eff = 25000.0 / 9.0;
    double length = 1.25;
};

double lumped_tension(double chord, const LumpedCable& cable);

/// Straight chain between two endpoints, beads evenly spaced, common velocity.
RopeBeadChain make_straight_chain(const Vec3& from, const Vec3& to, const Vec3& vel,
                                  const SimParams& p);

/// Poles of a single bead on one segment (mass m_bead, k_s, c_s).
std::complex<double> element_shape_pole(const SimParams& p);

/// Longitudinal modal spectrum of the taut chain with both ends held.
std::vector<std::complex<double>> chain_shape_poles(const SimParams& p);

struct FidelityReport {
    double max_deviation = 0.0; // N, over taut samples
    double bound = 0.076;       // N
    double c1_delta = 0.072;    // N
    bool within_bound = false;
};

/// Compares drone-side tension against the lumped value at the same chord.
/// Samples where the chord is not taut are skipped.
FidelityReport reduction_fidelity(const std::vector<double>& tension,
                                  const std::vector<double>& chord, const LumpedCable& cable,
                                  double headroom = 1.0);

struct SlackAudit {
    std::vector<double> max_run;  // s, per rope
    double duty = 0.0;            // fraction over all rope-samples
    double max_run_all = 0.0;     // s
    double run_limit = 0.040;
    double duty_limit = 0.025;
    bool run_pass = true;
    bool duty_pass = true;
};

/// tension[r][k]; active[r][k] masks samples where rope r is a survivor.
SlackAudit slack_audit(const std::vector<std::vector<double>>& tension,
                       const std::vector<std::vector<std::uint8_t>>& active, double dt,
                       double eps = 0.1);

struct AsymmetryStats {
    std::vector<double> rms, p95, peak;
    double rms_all = 0.0;
};

AsymmetryStats tension_asymmetry(const std::vector<std::vector<double>>& tension,
                                 const std::vector<std::vector<std::uint8_t>>& active);

} // namespace slung
