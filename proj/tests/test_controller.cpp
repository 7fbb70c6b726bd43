#include "slung/controller.hpp"
#include "slung/extensions.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

using namespace slung;

namespace {

InfoSet info_for(const WorldState& w, int i, double t, const Reference* ref)
{
    InfoSet s;
    s.t = t;
    s.self = w.drones[i];
    s.tension = rope_tension(w, i);
    s.payload_velocity = w.payload.v;
    s.reference = ref;
    return s;
}

bool same_bits(const ControlOutput& a, const ControlOutput& b)
{
    return std::memcmp(&a.f, &b.f, sizeof a.f) == 0 && std::memcmp(a.tau.data(), b.tau.data(), sizeof(double) * 3) == 0 &&
           std::memcmp(a.debug.a_cmd.data(), b.debug.a_cmd.data(), sizeof(double) * 3) == 0 &&
           a.debug.active_code == b.debug.active_code;
}

DroneController full_controller(int i, const SimParams& sp, const ControllerParams& c)
{
    ModeFlags m;
    m.l1 = m.mpc = m.reshape = true;
    const double a = formation_angle(i, sp.n_drones);
    DroneController d(i, sp.n_drones, c, m, sp.ring_radius * Vec3(std::cos(a), std::sin(a), 0.0));
    L1Params lp;
    lp.kp = c.kp_z;
    lp.kd = c.kd_z;
    d.attach_l1(std::make_unique<L1Adaptive>(lp));
    d.attach_mpc(std::make_unique<MpcLayer>(MpcConfig{}, c));
    FormationPlan plan{sp.n_drones, sp.ring_radius, {}};
    for (int k = 0; k < sp.n_drones; ++k) {
        const double b = formation_angle(k, sp.n_drones);
        plan.attach.push_back(sp.attach_radius * Vec3(std::cos(b), std::sin(b), 0.0));
    }
    d.attach_reshape(std::make_unique<ReshapeAgent>(i, plan, std::make_shared<ReshapeBus>(sp.n_drones, 2.24)));
    return d;
}

} // namespace

TEST_SUITE("controller")
{
    TEST_CASE("smoothstep endpoints are flat to second order")
    {
        // derivatives of 10s^3 - 15s^4 + 6s^5 written out term by term
        auto d1 = [](double s) { return 30 * s * s - 60 * s * s * s + 30 * s * s * s * s; };
        auto d2 = [](double s) { return 60 * s - 180 * s * s + 120 * s * s * s; };
        CHECK(smoothstep5(0.0) == 0.0);
        CHECK(smoothstep5(1.0) == 1.0);
        CHECK(d1(0.0) == 0.0);
        CHECK(d1(1.0) == 0.0);
        CHECK(d2(0.0) == 0.0);
        CHECK(d2(1.0) == 0.0);
        // the implementation matches the polynomial and its numerical derivatives vanish at the ends
        const double h = 1e-4;
        for (double s : {0.1, 0.3, 0.5, 0.77})
            CHECK(smoothstep5(s) == doctest::Approx(10 * s * s * s - 15 * s * s * s * s + 6 * s * s * s * s * s));
        CHECK(std::abs(smoothstep5(h) - smoothstep5(0.0)) / h < 1e-6);
        CHECK(std::abs(smoothstep5(1.0) - smoothstep5(1.0 - h)) / h < 1e-6);
        CHECK(smoothstep5(-1.0) == 0.0);
        CHECK(smoothstep5(2.0) == 1.0);
        CHECK(smoothstep3(0.5) == doctest::Approx(0.5));
    }

    TEST_CASE("reference derivatives match finite differences")
    {
        const Reference r;
        const double h = 1e-5;
        for (double t : {0.0, 1.3, 4.7, 9.1}) {
            const RefSample s = r.at(t);
            const Vec3 v = (r.at(t + h).p - r.at(t - h).p) / (2 * h);
            const Vec3 a = (r.at(t + h).v - r.at(t - h).v) / (2 * h);
            CHECK((v - s.v).norm() < 1e-6);
            CHECK((a - s.a).norm() < 1e-5);
        }
        CHECK((r.at(0.0).p - Vec3(3.0, 0.0, 3.0)).norm() < 1e-12);
        double amax = 0.0;
        for (int k = 0; k < 12000; ++k) amax = std::max(amax, r.at(k * 1e-3).a.norm());
        CHECK(amax == doctest::Approx(2.47).epsilon(0.01));
    }

    TEST_CASE("anti-swing shift saturates")
    {
        CHECK((anti_swing_shift(Vec3(0.1, 0, 5), 0.8, 0.3) - Vec3(-0.08, 0, 0)).norm() < 1e-15);
        const Vec3 s = anti_swing_shift(Vec3(3, 4, 0), 0.8, 0.3);
        CHECK(s.norm() == doctest::Approx(0.3));
        CHECK(s.x() == doctest::Approx(-0.18));
    }

    TEST_CASE("thrust and attitude commands")
    {
        const ControllerParams c;
        CHECK(thrust_command(0.0, 20.0, c) == doctest::Approx(1.5 * 9.81 + 20.0));
        CHECK(thrust_command(200.0, 20.0, c) == c.f_max);
        CHECK(thrust_command(-200.0, 0.0, c) == c.f_min);
        const AttitudeSetpoint sp = attitude_cmd(100.0, -100.0, c);
        CHECK(sp.pitch == c.theta_max);
        CHECK(sp.roll == c.theta_max);
        const AzBounds b = az_bounds(20.0, c);
        CHECK(thrust_command(b.hi, 20.0, c) == doctest::Approx(c.f_max));
        CHECK(c.kappa() == doctest::Approx(1.0 / 1.02));
    }

    TEST_CASE("active-set code")
    {
        const ControllerParams c;
        const double h = c.g * std::tan(c.theta_max);
        CHECK(active_code(Vec3(0, 0, 0), 20.0, c) == 0);
        CHECK(active_code(Vec3(-h, 0, 0), 20.0, c) == 1);
        CHECK(active_code(Vec3(0, h, 0), 20.0, c) == 6);
        CHECK(active_code(Vec3(0, 0, az_bounds(20.0, c).hi), 20.0, c) == 18);
        CHECK(qp_project(Vec3(100, -100, 0), 20.0, c).code == 2 + 3);
    }

    TEST_CASE("information-pattern isolation")
    {
        SimParams sp;
        ControllerParams c;
        c.d_rope = sp.slot_elevation();
        const Reference ref;
        WorldState w = make_initial_world(sp, ref.at(0).p, ref.at(0).v, c.d_rope);
        std::mt19937_64 rng(5);
        std::normal_distribution<double> nd(0.0, 0.5);
        for (int i = 0; i < sp.n_drones; ++i) {
            WorldState other = w;
            DroneController a = full_controller(i, sp, c), b = full_controller(i, sp, c);
            for (int k = 0; k < 200; ++k) {
                const double t = k * 1e-3;
                // scramble every peer drone and its rope, keep own state and the payload
                for (int j = 0; j < sp.n_drones; ++j) {
                    if (j == i) continue;
                    other.drones[j].p = w.drones[j].p + Vec3(nd(rng), nd(rng), nd(rng));
                    other.drones[j].v = Vec3(nd(rng), nd(rng), nd(rng));
                    other.drones[j].w = Vec3(nd(rng), nd(rng), nd(rng));
                    for (auto& q : other.ropes[j].bead_p) q += Vec3(nd(rng), nd(rng), nd(rng));
                    other.ropes[j].severed = (k % 2) == 1;
                }
                const InfoSet ia = info_for(w, i, t, &ref), ib = info_for(other, i, t, &ref);
                REQUIRE(ia.tension == ib.tension);
                REQUIRE(same_bits(a.tick(ia), b.tick(ib)));
            }
        }
    }

    TEST_CASE("controller is deterministic")
    {
        SimParams sp;
        ControllerParams c;
        const Reference ref;
        const WorldState w = make_initial_world(sp, ref.at(0).p, ref.at(0).v, sp.slot_elevation());
        DroneController a = full_controller(0, sp, c), b = full_controller(0, sp, c);
        for (int k = 0; k < 50; ++k) {
            const InfoSet s = info_for(w, 0, k * 1e-3, &ref);
            CHECK(same_bits(a.tick(s), b.tick(s)));
        }
    }
}
