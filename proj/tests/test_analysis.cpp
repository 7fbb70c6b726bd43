#include "slung/analysis.hpp"
#include "slung/extensions.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace slung;

namespace {

// A'P + PA = -I via the vectorized linear system
Mat2 lyap_kron(const Mat2& a)
{
    // column e of k is vec(A'E + EA) for the e-th unit matrix E
    Eigen::Matrix4d k;
    for (int e = 0; e < 4; ++e) {
        Mat2 u = Mat2::Zero();
        u(e % 2, e / 2) = 1.0;
        const Mat2 img = a.transpose() * u + u * a;
        k.col(e) = Eigen::Map<const Eigen::Vector4d>(img.data());
    }
    Eigen::Vector4d rhs(-1.0, 0.0, 0.0, -1.0);
    const Eigen::Vector4d v = k.partialPivLu().solve(rhs);
    Mat2 p;
    p << v[0], v[2], v[1], v[3];
    return p;
}

} // namespace

TEST_SUITE("analysis")
{
    TEST_CASE("lyapunov matrices for the default gains")
    {
        const Mat2 pv = lyap_solve(100.0, 24.0);
        const Mat2 pxy = lyap_solve(30.0, 15.0);
        CHECK(pv(0, 0) == doctest::Approx(2.224).epsilon(0.0005 / 2.224));
        CHECK(pv(0, 1) == doctest::Approx(0.005).epsilon(0.1));
        CHECK(pv(1, 1) == doctest::Approx(0.021).epsilon(0.03));
        CHECK(pxy(0, 0) == doctest::Approx(1.283).epsilon(0.0005 / 1.283));
        CHECK(pxy(0, 1) == doctest::Approx(0.017).epsilon(0.03));
        CHECK(pxy(1, 1) == doctest::Approx(0.034).epsilon(0.03));
    }

    TEST_CASE("closed form agrees with the vectorized solve")
    {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> kp(0.5, 400.0), kd(0.5, 60.0);
        for (int n = 0; n < 200; ++n) {
            const double a = kp(rng), b = kd(rng);
            const Mat2 p = lyap_solve(a, b);
            const Mat2 ref = lyap_kron(companion(a, b));
            CHECK((p - ref).norm() <= 1e-10 * ref.norm());
            const Mat2 res = companion(a, b).transpose() * p + p * companion(a, b) + Mat2::Identity();
            CHECK(res.norm() < 1e-9 * p.norm());
            CHECK(p.determinant() > 0.0);
            CHECK(p(0, 0) > 0.0);
        }
    }

    TEST_CASE("non-Hurwitz gains are rejected")
    {
        CHECK_THROWS_AS(lyap_solve(0.0, 24.0), NotHurwitzError);
        CHECK_THROWS_AS(lyap_solve(100.0, -1.0), NotHurwitzError);
        CHECK_THROWS_AS(decay_rate(-1.0, 2.0), NotHurwitzError);
    }

    TEST_CASE("decay rates and contraction")
    {
        const DecayRates r = decay_rates(100.0, 24.0, 30.0, 15.0);
        CHECK(r.alpha_z == doctest::Approx(5.37).epsilon(0.01 / 5.37));
        CHECK(r.alpha_xy == doctest::Approx(2.38).epsilon(0.01 / 2.38));
        CHECK(r.alpha_min == r.alpha_xy);
        const PendulumConstants pc = pendulum_constants(1.25);
        CHECK(pc.tau_pend == doctest::Approx(2.24).epsilon(0.01 / 2.24));
        CHECK(pc.omega_p == doctest::Approx(2.80).epsilon(0.01 / 2.80));
        const double rho = contraction(r.alpha_min, pc.tau_pend);
        CHECK(rho == doctest::Approx(0.005).epsilon(0.1));
        CHECK(r.alpha_min / 2.0 == doctest::Approx(1.19).epsilon(0.01 / 1.19));
        // underdamped pair decays at kd/2
        CHECK(decay_rate(100.0, 4.0) == 2.0);
    }

    TEST_CASE("decay rate is the slowest pole")
    {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> kp(0.1, 500.0), kd(0.1, 80.0);
        for (int n = 0; n < 500; ++n) {
            const double a = kp(rng), b = kd(rng);
            Eigen::EigenSolver<Mat2> es(companion(a, b));
            double slowest = 1e300;
            for (int i = 0; i < 2; ++i) slowest = std::min(slowest, -es.eigenvalues()[i].real());
            CHECK(decay_rate(a, b) == doctest::Approx(slowest).epsilon(1e-8));
        }
    }

    TEST_CASE("anti-swing damping is independent of the survivor count")
    {
        const AntiSwing a = antiswing_constants(10.0, 0.8, 1.25);
        CHECK(a.b_swing == doctest::Approx(62.8).epsilon(0.05 / 62.8));
        CHECK(a.zeta == doctest::Approx(1.12).epsilon(0.005 / 1.12));
        // per-drone shift k_swing acts on the whole payload, so N_s cancels
        for (int ns = 2; ns <= 5; ++ns) {
            const double per_drone = 10.0 * 9.81 / (ns * 1.25) * 0.8;
            CHECK(per_drone * ns == doctest::Approx(a.b_swing));
        }
    }

    TEST_CASE("actuator envelope")
    {
        const Envelope e = actuator_envelope(5, 10.0, 2, 0.82, 150.0);
        CHECK(e.load == doctest::Approx(32.7).epsilon(0.05 / 32.7));
        CHECK(e.bound == doctest::Approx(123.0));
        CHECK(e.utilization == doctest::Approx(0.27).epsilon(0.005 / 0.27));
        CHECK(e.pass);
        CHECK_THROWS(actuator_envelope(3, 10.0, 2, 0.82, 150.0));
    }

    TEST_CASE("gamma window")
    {
        const Mat2 pv = lyap_solve(100.0, 24.0);
        const GammaWindow w = gamma_window(2e-4, pv(1, 1), 25.0);
        CHECK(w.gamma_min == doctest::Approx(1190.0).epsilon(0.005));
        CHECK(w.gamma_star == doctest::Approx(4.76e5).epsilon(0.005));
        CHECK(w.contains(2000.0));
        CHECK_FALSE(w.contains(500.0));
    }

    TEST_CASE("steady-state bound")
    {
        const AntiSwing a = antiswing_constants(10.0, 0.8, 1.25);
        const SteadyStateBound b = steady_state_bound(2.47, 1.25, a.zeta, 1.0 / 1.02, 30.0);
        CHECK(b.total == doctest::Approx(0.27).epsilon(0.005 / 0.27));
        CHECK(b.pendulum_term > 0.0);
        CHECK(b.tracking_term > 0.0);
    }

    TEST_CASE("jump bounds")
    {
        CHECK(chi_bound(0.0, 3.0) == 0.0);
        CHECK(chi_bound(2.0, 0.5) == doctest::Approx(3.0));
        CHECK(chi_bound_symmetric(2.0, 1.0, 4) == doctest::Approx(0.5));
        CHECK_THROWS(chi_bound(-1.0, 1.0));
    }
}
