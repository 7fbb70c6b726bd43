#pragma once

#include "slung/types.hpp"

#include <random>

namespace slung {

struct DrydenParams {
    bool enabled = false;
    Vec3 mean{4.0, 0.0, 0.0}; // m/s
    double sigma_u = 0.8, sigma_v = 0.8, sigma_w = 0.4;
    double scale_u = 200.0, scale_v = 200.0, scale_w = 50.0; // m
    std::uint64_t seed = 42;
    double c_drag = 0.25; // N s/m
    double w_max = 1.0;   // N
};

/// Dryden turbulence sampled on a fixed grid. The shaping filters are driven by
/// white noise and discretized exactly, so the sampled process has the continuous
/// filter's stationary covariance at any step size.
class DrydenWind {
public:
    DrydenWind(const DrydenParams& params, double dt);

    /// Current gust velocity (mean + turbulence), held between advances.
    Vec3 gust_velocity() const;
    /// Moves one sample forward.
    void advance();
    /// Gust at the k-th sample, advancing as needed. Samples must be requested in order.
    Vec3 gust_velocity(double t);

    double dt() const { return dt_; }

private:
    struct FirstOrder {
        double phi = 0.0, q = 0.0, c = 0.0, x = 0.0;
    };
    struct SecondOrder {
        Mat2 phi = Mat2::Zero();
        Mat2 q_chol = Mat2::Zero();
        Vec2 c = Vec2::Zero();
        Vec2 x = Vec2::Zero();
    };
    void init_first(FirstOrder& f, double sigma, double scale);
    void init_second(SecondOrder& f, double sigma, double scale);
    double airspeed() const;

    DrydenParams p_;
    double dt_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    FirstOrder u_;
    SecondOrder v_, w_;
    long step_ = 0;
};

struct DragResult {
    Vec3 force = Vec3::Zero();
    bool clipped = false;
};

/// Linear drag toward the gust velocity, magnitude clipped to w_max.
DragResult body_force(const Vec3& gust, const Vec3& body_v, double c_drag, double w_max);

} // namespace slung
