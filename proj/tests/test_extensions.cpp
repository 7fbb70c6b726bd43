#include "slung/analysis.hpp"
#include "slung/extensions.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace slung;

namespace {
constexpr double kPi = std::numbers::pi;

// Simulates the altitude error loop e'' = -kp e - kd e' - kappa * (u_ad + d).
double l1_residual(double gamma, double d, double seconds)
{
    L1Params p;
    p.gamma = gamma;
    L1Adaptive l1(p);
    Vec2 x = Vec2::Zero();
    double u = 0.0;
    const double dt = p.ts * p.substeps;
    for (int k = 0; k < int(seconds / dt); ++k) {
        u = l1.update(x);
        for (int s = 0; s < p.substeps; ++s) {
            const double acc = -p.kp * x.x() - p.kd * x.y() - p.kappa * (u + d);
            x += p.ts * Vec2(x.y(), acc);
        }
    }
    return std::abs(x.x());
}

} // namespace

TEST_SUITE("extensions")
{
    TEST_CASE("L1 cancels a constant matched disturbance")
    {
        const double open = 1.0 / 1.02 * 5.0 / 100.0; // static error without adaptation
        // slowest adaptation mode decays at about gamma * P12 / kp = 0.1 1/s
        const double closed = l1_residual(2000.0, 5.0, 60.0);
        CHECK(closed < 0.05 * open);
        // higher adaptation gain adapts faster over a short horizon
        CHECK(l1_residual(20000.0, 5.0, 0.3) < l1_residual(500.0, 5.0, 0.3));
    }

    TEST_CASE("L1 estimate respects the projection bounds")
    {
        L1Params p;
        p.delta_max = 1.0;
        p.delta_min = -1.0;
        L1Adaptive l1(p);
        for (int k = 0; k < 2000; ++k) l1.update(Vec2(-0.5, 0.0));
        CHECK(std::abs(l1.estimate()) <= 1.0);
        CHECK(l1.projection_hits() > 0);
    }

    TEST_CASE("tension forecast holds the chord rate")
    {
        MpcInput in;
        in.tension = 50.0;
        in.chord_rate = 0.01;
        MpcConfig cfg;
        cfg.horizon = 3;
        const auto f = mpc_tension_forecast(in, cfg);
        REQUIRE(f.size() == 3u);
        CHECK(f[2] == doctest::Approx(50.0 + 3 * cfg.k_eff * 0.01 * cfg.dt));
        in.chord_rate = -10.0;
        CHECK(mpc_tension_forecast(in, cfg)[0] == 0.0);
    }

    TEST_CASE("MPC first input equals the baseline projection below the ceiling")
    {
        const ControllerParams c;
        MpcLayer m(MpcConfig{}, c);
        MpcInput in;
        in.a_target = Vec3(1.0, -2.0, 0.5);
        in.e_p = Vec3(0.02, -0.04, 0.005);
        in.tension = 30.0;
        in.t_ff = 30.0;
        const MpcOutput o = m.solve(in);
        CHECK(o.status == 1);
        CHECK((o.a - qp_project(in.a_target, in.t_ff, c).a).norm() < 1e-5);
        CHECK(o.slack < 1e-6);
    }

    TEST_CASE("MPC reports slack above the ceiling")
    {
        const ControllerParams c;
        MpcConfig cfg;
        cfg.t_max = 60.0;
        MpcLayer m(cfg, c);
        MpcInput in;
        in.tension = 80.0;
        in.t_ff = 80.0;
        const MpcOutput o = m.solve(in);
        CHECK(o.status == 1);
        CHECK(o.slack == doctest::Approx(20.0).epsilon(1e-4));
    }

    TEST_CASE("tension latch")
    {
        // never carried load: no latch
        CHECK(reshape_detect(std::vector<double>(500, 0.0), 1e-3) < 0.0);
        std::vector<double> t(1000, 20.0);
        for (std::size_t k = 400; k < t.size(); ++k) t[k] = 0.0;
        CHECK(reshape_detect(t, 1e-3) == doctest::Approx(0.499));
        // short dropout shorter than the window is ignored
        std::vector<double> u(1000, 20.0);
        for (std::size_t k = 400; k < 450; ++k) u[k] = 0.0;
        CHECK(reshape_detect(u, 1e-3) < 0.0);
    }

    TEST_CASE("broadcast channel")
    {
        CHECK(broadcast_bits(5) == 3);
        CHECK(broadcast_bits(4) == 2);
        ReshapeBus bus(5, 2.24);
        bus.publish(0, 12.1);
        bus.publish(2, 12.2); // spaced by the minimum dwell
        CHECK(bus.receive(0, 12.1).empty());
        CHECK(bus.receive(0, 12.2).size() == 1u);
        CHECK(bus.receive(0, 14.4).size() == 2u);
        CHECK(bus.log()[1].t_deliver == doctest::Approx(14.34));
        CHECK(bus.total_bits() == 6);
    }

    TEST_CASE("equiangular reassignment for four drones")
    {
        std::vector<int> surv{1, 2, 3};
        std::vector<double> ang{kPi / 2, kPi, 3 * kPi / 2};
        const ReshapePlan p = reshape_targets(surv, ang);
        CHECK(p.target[1] == doctest::Approx(kPi));
        CHECK(p.target[0] == doctest::Approx(kPi / 2 - kPi / 6));
        CHECK(p.target[2] == doctest::Approx(3 * kPi / 2 + kPi / 6));
        CHECK(p.travel == doctest::Approx(kPi / 3));
        for (int j = 0; j < 3; ++j) {
            const double gap = std::remainder(p.target[(j + 1) % 3] - p.target[j], 2 * kPi);
            CHECK(std::abs(gap) == doctest::Approx(2 * kPi / 3));
        }
        CHECK_THROWS(reshape_targets({1}, {0.0}));
    }

    TEST_CASE("reassignment preserves cyclic order for five drones")
    {
        for (int sev = 0; sev < 5; ++sev) {
            std::vector<int> surv;
            std::vector<double> ang;
            for (int i = 0; i < 5; ++i)
                if (i != sev) {
                    surv.push_back(i);
                    ang.push_back(2 * kPi * i / 5);
                }
            const ReshapePlan p = reshape_targets(surv, ang);
            for (int j = 0; j < 4; ++j) {
                const double gap = std::remainder(p.target[(j + 1) % 4] - p.target[j], 2 * kPi);
                CHECK(gap == doctest::Approx(kPi / 2));
            }
        }
    }

    TEST_CASE("static worst-case tension")
    {
        // three equiangular vertical-ish ropes share the load equally
        const double el = 1.25, r = 0.8;
        const double cosg = el / std::hypot(el, r);
        const double eq = static_worst_tension({0.0, 2 * kPi / 3, 4 * kPi / 3}, r, el, 1.0);
        CHECK(eq == doctest::Approx(1.0 / (3.0 * cosg)));
        // survivors at 90, 180, 270 degrees: the middle rope cannot help horizontally
        const double before = static_worst_tension({kPi / 2, kPi, 3 * kPi / 2}, r, el, 1.0);
        CHECK(before == doctest::Approx(1.0 / (2.0 * cosg)));
        CHECK(reshape_tension_reduction(4, 0, r, el) == doctest::Approx(1.0 - 2.0 / 3.0));
    }

    TEST_CASE("reshape agent follows the broadcast")
    {
        const int n = 5;
        FormationPlan plan{n, 0.8, {}};
        for (int i = 0; i < n; ++i) plan.attach.push_back(Vec3::Zero());
        auto bus = std::make_shared<ReshapeBus>(n, 2.24);
        std::vector<ReshapeAgent> agents;
        for (int i = 0; i < n; ++i) agents.emplace_back(i, plan, bus, 5.0);
        const double dt = 1e-3;
        for (int k = 0; k < 20000; ++k) {
            const double t = k * dt;
            for (int i = 0; i < n; ++i) agents[i].observe(t, (i == 0 && t >= 12.0) ? 0.0 : 20.0);
        }
        CHECK(agents[0].own_rope_lost());
        CHECK(bus->log().size() == 1u);
        for (int i = 1; i < n; ++i) CHECK(agents[i].transitions() == 1);
        // after the blend the four survivors sit 90 degrees apart
        std::vector<double> a;
        for (int i = 1; i < n; ++i) {
            const Vec3 o = agents[i].offset(19.99);
            CHECK(o.norm() == doctest::Approx(0.8).epsilon(1e-6));
            a.push_back(std::atan2(o.y(), o.x()));
        }
        for (int j = 0; j < 4; ++j)
            CHECK(std::abs(std::remainder(a[(j + 1) % 4] - a[j], 2 * kPi)) == doctest::Approx(kPi / 2));
        // before the fault every offset is nominal
        ReshapeAgent fresh(2, plan, std::make_shared<ReshapeBus>(n, 2.24));
        CHECK((fresh.offset(0.0) - 0.8 * Vec3(std::cos(4 * kPi / 5), std::sin(4 * kPi / 5), 0)).norm() < 1e-12);
    }
}
