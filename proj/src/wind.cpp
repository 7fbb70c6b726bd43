#include "slung/wind.hpp"

#include <algorithm>
#include <cmath>

namespace slung {

DrydenWind::DrydenWind(const DrydenParams& params, double dt)
    : p_(params), dt_(dt), rng_(params.seed)
{
    init_first(u_, p_.sigma_u, p_.scale_u);
    init_second(v_, p_.sigma_v, p_.scale_v);
    init_second(w_, p_.sigma_w, p_.scale_w);
}

double DrydenWind::airspeed() const
{
    return std::max(p_.mean.norm(), 0.1);
}

void DrydenWind::init_first(FirstOrder& f, double sigma, double scale)
{
    const double tc = scale / airspeed();
    f.phi = std::exp(-dt_ / tc);
    f.q = std::sqrt(std::max(0.0, 1.0 - f.phi * f.phi));
    f.c = sigma;
    f.x = normal_(rng_);
}

void DrydenWind::init_second(SecondOrder& f, double sigma, double scale)
{
    // (1 + sqrt(3) T s) / (1 + T s)^2 in companion form, unit white-noise input
    const double tc = scale / airspeed();
    Mat2 a;
    a << 0.0, 1.0, -1.0 / (tc * tc), -2.0 / tc;
    const Mat2 n = a + Mat2::Identity() / tc; // nilpotent
    f.phi = std::exp(-dt_ / tc) * (Mat2::Identity() + dt_ * n);
    const double a0 = 1.0 / (tc * tc), a1 = 2.0 / tc;
    Mat2 pinf = Mat2::Zero();
    pinf(0, 0) = 1.0 / (2.0 * a0 * a1);
    pinf(1, 1) = 1.0 / (2.0 * a1);
    Mat2 qd = pinf - f.phi * pinf * f.phi.transpose();
    qd = 0.5 * (qd + qd.transpose());
    Eigen::LLT<Mat2> llt(qd);
    f.q_chol = llt.info() == Eigen::Success ? Mat2(llt.matrixL()) : Mat2::Zero();
    // output variance of the unit-input filter is 1/T
    f.c << 1.0 / (tc * tc), std::sqrt(3.0) / tc;
    f.c *= sigma * std::sqrt(tc);
    Eigen::LLT<Mat2> lp(pinf);
    const Vec2 z(normal_(rng_), normal_(rng_));
    f.x = Mat2(lp.matrixL()) * z;
}

Vec3 DrydenWind::gust_velocity() const
{
    if (!p_.enabled) return p_.mean;
    return p_.mean + Vec3(u_.c * u_.x, v_.c.dot(v_.x), w_.c.dot(w_.x));
}

void DrydenWind::advance()
{
    ++step_;
    if (!p_.enabled) return;
    u_.x = u_.phi * u_.x + u_.q * normal_(rng_);
    const Vec2 zv(normal_(rng_), normal_(rng_));
    v_.x = v_.phi * v_.x + v_.q_chol * zv;
    const Vec2 zw(normal_(rng_), normal_(rng_));
    w_.x = w_.phi * w_.x + w_.q_chol * zw;
}

Vec3 DrydenWind::gust_velocity(double t)
{
    const long target = std::lround(std::floor(t / dt_ + 1e-9));
    while (step_ < target) advance();
    return gust_velocity();
}

DragResult body_force(const Vec3& gust, const Vec3& body_v, double c_drag, double w_max)
{
    DragResult r;
    r.force = c_drag * (gust - body_v);
    const double n = r.force.norm();
    if (n > w_max) {
        r.force *= w_max / n;
        r.clipped = true;
    }
    return r;
}

} // namespace slung
