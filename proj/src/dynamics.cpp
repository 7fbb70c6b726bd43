#include "slung/dynamics.hpp"
#include "slung/wind.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace slung {

Mat3 hat(const Vec3& w)
{
    Mat3 m;
    m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
    return m;
}

Mat3 polar_project(const Mat3& m)
{
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
    return u * v.transpose();
}

Vec3 drone_accel(const DroneState& s, double f, const Vec3& cable_force, const Vec3& wind,
                 const SimParams& p)
{
    if (!std::isfinite(f) || !cable_force.allFinite() || !wind.allFinite() || !s.p.allFinite() ||
        !s.R.allFinite())
        throw DivergenceError("drone_accel: non-finite input");
    const double m = p.drone_mass;
    return (f * s.R.col(2) - m * p.g * kE3 - cable_force + wind) / m;
}

Vec3 payload_accel(const PayloadState& s, const std::vector<Vec3>& tensions, const Vec3& wind,
                   const SimParams& p)
{
    if (tensions.empty()) throw std::invalid_argument("payload_accel: empty survivor set");
    if (!s.p.allFinite() || !s.v.allFinite() || !wind.allFinite())
        throw DivergenceError("payload_accel: non-finite input");
    Vec3 sum = wind;
    for (const auto& t : tensions) sum += t;
    return -p.g * kE3 + sum / p.payload_mass;
}

AttitudeRates attitude_dynamics(const Mat3& R, const Vec3& w, const Vec3& tau, const Vec3& inertia)
{
    const Vec3 jw = inertia.cwiseProduct(w);
    return {R * hat(w), (tau - w.cross(jw)).cwiseQuotient(inertia)};
}

namespace {

constexpr int kDroneDim = 18;

struct Layout {
    int n = 0, nb = 0;
    int payload() const { return kDroneDim * n; }
    int bead(int r, int j) const { return kDroneDim * n + 6 + (r * nb + j) * 6; }
    int size() const { return kDroneDim * n + 6 + n * nb * 6; }
};

Eigen::VectorXd pack(const WorldState& w, const Layout& L)
{
    Eigen::VectorXd x(L.size());
    for (int i = 0; i < L.n; ++i) {
        const auto& d = w.drones[i];
        const int b = kDroneDim * i;
        x.segment<3>(b) = d.p;
        x.segment<3>(b + 3) = d.v;
        x.segment<9>(b + 6) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(d.R.data());
        x.segment<3>(b + 15) = d.w;
    }
    x.segment<3>(L.payload()) = w.payload.p;
    x.segment<3>(L.payload() + 3) = w.payload.v;
    for (int r = 0; r < L.n; ++r)
        for (int j = 0; j < L.nb; ++j) {
            x.segment<3>(L.bead(r, j)) = w.ropes[r].bead_p[j];
            x.segment<3>(L.bead(r, j) + 3) = w.ropes[r].bead_v[j];
        }
    return x;
}

void unpack(const Eigen::VectorXd& x, WorldState& w, const Layout& L)
{
    for (int i = 0; i < L.n; ++i) {
        auto& d = w.drones[i];
        const int b = kDroneDim * i;
        d.p = x.segment<3>(b);
        d.v = x.segment<3>(b + 3);
        d.R = Eigen::Map<const Mat3>(x.data() + b + 6);
        d.w = x.segment<3>(b + 15);
    }
    w.payload.p = x.segment<3>(L.payload());
    w.payload.v = x.segment<3>(L.payload() + 3);
    for (int r = 0; r < L.n; ++r)
        for (int j = 0; j < L.nb; ++j) {
            w.ropes[r].bead_p[j] = x.segment<3>(L.bead(r, j));
            w.ropes[r].bead_v[j] = x.segment<3>(L.bead(r, j) + 3);
        }
}

struct Rhs {
    const WorldState& w; // topology only (severed flags, attachments, params)
    const std::vector<ControlOutput>& u;
    const WindSample& wind;
    const SimParams& p;
    const Layout& L;
    StepDiag* diag;
    bool count;

    Vec3 drag(const Vec3& v) const
    {
        if (!wind.enabled) return Vec3::Zero();
        const DragResult r = body_force(wind.gust, v, wind.c_drag, wind.w_max);
        if (diag && count) {
            ++diag->wind_evals;
            if (r.clipped) ++diag->clip_events;
        }
        return r.force;
    }

    void operator()(const Eigen::VectorXd& x, Eigen::VectorXd& dx) const
    {
        dx.setZero(L.size());
        const Vec3 pl = x.segment<3>(L.payload());
        const Vec3 vl = x.segment<3>(L.payload() + 3);
        Vec3 payload_force = Vec3::Zero();
        const double mb = p.bead_mass();
        for (int i = 0; i < L.n; ++i) {
            const int b = kDroneDim * i;
            DroneState d;
            d.p = x.segment<3>(b);
            d.v = x.segment<3>(b + 3);
            d.R = Eigen::Map<const Mat3>(x.data() + b + 6);
            d.w = x.segment<3>(b + 15);

            Vec3 cable = Vec3::Zero(); // force on the payload side, drone feels -cable
            const auto& rope = w.ropes[i];
            if (!rope.severed && L.nb > 0) {
                const Vec3 ap = pl + w.attach[i];
                Vec3 prev_p = d.p, prev_v = d.v;
                Vec3 prev_force = Vec3::Zero(); // force on the previous node from its lower segment
                for (int j = 0; j <= L.nb; ++j) {
                    Vec3 np, nv;
                    if (j < L.nb) {
                        np = x.segment<3>(L.bead(i, j));
                        nv = x.segment<3>(L.bead(i, j) + 3);
                    } else {
                        np = ap;
                        nv = vl;
                    }
                    const Vec3 fseg = segment_force(prev_p, np, prev_v, nv, rope.seg);
                    if (j == 0) {
                        cable = -fseg;
                    } else {
                        const int bj = L.bead(i, j - 1);
                        Vec3 acc = (prev_force + fseg) / mb;
                        if (p.bead_gravity) acc -= p.g * kE3;
                        dx.segment<3>(bj) = x.segment<3>(bj + 3);
                        dx.segment<3>(bj + 3) = acc;
                    }
                    prev_force = -fseg;
                    prev_p = np;
                    prev_v = nv;
                }
                payload_force += prev_force;
            }
            const ControlOutput& c = u[i];
            const Vec3 a = (c.f * d.R.col(2) - p.drone_mass * p.g * kE3 - cable + drag(d.v)) /
                           p.drone_mass;
            const AttitudeRates ar = attitude_dynamics(d.R, d.w, c.tau, p.inertia);
            dx.segment<3>(b) = d.v;
            dx.segment<3>(b + 3) = a;
            dx.segment<9>(b + 6) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(ar.R_dot.data());
            dx.segment<3>(b + 15) = ar.w_dot;
        }
        dx.segment<3>(L.payload()) = vl;
        dx.segment<3>(L.payload() + 3) =
            -p.g * kE3 + (payload_force + drag(vl)) / p.payload_mass;
    }
};

} // namespace

void step(WorldState& world, const std::vector<ControlOutput>& controls, const WindSample& wind,
          const SimParams& p, double dt, StepDiag* diag)
{
    if (dt <= 0.0 || dt > 1e-3 + 1e-15)
        throw std::invalid_argument("step: dt must be in (0, 1e-3]");
    if (int(controls.size()) != int(world.drones.size()))
        throw std::invalid_argument("step: one control per drone required");
    Layout L{int(world.drones.size()), p.n_beads};
    for (const auto& r : world.ropes)
        if (int(r.bead_p.size()) != L.nb) throw std::invalid_argument("step: bead count mismatch");

    const int ns = std::max(1, p.substeps);
    const double h = dt / ns;
    Eigen::VectorXd x = pack(world, L), k1, k2, k3, tmp;
    for (int s = 0; s < ns; ++s) {
        Rhs f1{world, controls, wind, p, L, diag, true};
        Rhs f{world, controls, wind, p, L, diag, false};
        f1(x, k1);
        tmp = x + 0.5 * h * k1;
        f(tmp, k2);
        tmp = x - h * k1 + 2.0 * h * k2;
        f(tmp, k3);
        x += (h / 6.0) * (k1 + 4.0 * k2 + k3);
    }
    // frozen beads of severed ropes keep their stored state
    unpack(x, world, L);
    for (auto& d : world.drones) d.R = polar_project(d.R);
    world.t += dt;

    if (!x.allFinite()) throw DivergenceError("step: non-finite state");
    for (const auto& d : world.drones)
        if (d.p.norm() > 1e6) throw DivergenceError("step: drone position diverged");
    if (world.payload.p.norm() > 1e6) throw DivergenceError("step: payload position diverged");
}

void apply_fault(WorldState& world, const FaultEvent& ev)
{
    auto it = std::find(world.survivors.begin(), world.survivors.end(), ev.drone);
    if (it == world.survivors.end())
        throw std::invalid_argument("apply_fault: drone " + std::to_string(ev.drone) +
                                    " is not a survivor");
    world.survivors.erase(it);
    world.ropes[ev.drone].severed = true;
}

double pendulum_period(const SimParams& p)
{
    return 2.0 * std::numbers::pi * std::sqrt(p.rope_length / p.g);
}

ScheduleReport validate_schedule(const FaultSchedule& s, const SimParams& p)
{
    ScheduleReport r;
    const double tp = pendulum_period(p);
    const int F = int(s.events.size());
    auto fail = [&](const std::string& m) {
        r.valid = false;
        r.violations.push_back(m);
    };
    if (F > p.n_drones - 2)
        fail("fault count " + std::to_string(F) + " exceeds N-2 = " +
             std::to_string(p.n_drones - 2));
    std::vector<int> seen;
    r.min_dwell = F > 1 ? 1e300 : 0.0;
    for (int k = 0; k < F; ++k) {
        const auto& e = s.events[k];
        if (e.drone < 0 || e.drone >= p.n_drones)
            fail("event " + std::to_string(k) + ": drone index out of range");
        if (std::find(seen.begin(), seen.end(), e.drone) != seen.end())
            fail("event " + std::to_string(k) + ": drone " + std::to_string(e.drone) +
                 " already severed");
        seen.push_back(e.drone);
        if (e.t_star < 0.0 || e.t_star > p.duration)
            fail("event " + std::to_string(k) + ": time outside run");
        if (k > 0) {
            const double dwell = e.t_star - s.events[k - 1].t_star;
            if (dwell <= 0.0) fail("event " + std::to_string(k) + ": events not ordered");
            r.min_dwell = std::min(r.min_dwell, dwell);
            if (dwell < tp - 1e-12 && !s.subthreshold) {
                std::ostringstream os;
                os << "event " << k << ": dwell " << dwell << " s below pendulum period " << tp
                   << " s";
                fail(os.str());
            }
        }
    }
    r.dwell_margin = F > 1 ? r.min_dwell - tp : 0.0;
    return r;
}

double formation_angle(int i, int n)
{
    return 2.0 * std::numbers::pi * double(i) / double(n);
}

WorldState make_initial_world(const SimParams& p, const Vec3& pL_ref, const Vec3& vL_ref,
                              double d_rope)
{
    WorldState w;
    const int n = p.n_drones;
    w.drones.resize(n);
    w.attach.resize(n);
    w.survivors.resize(n);
    const double h = std::abs(p.ring_radius - p.attach_radius);
    const double chord = std::max(p.initial_chord, h + 1e-6);
    const double drop = std::sqrt(chord * chord - h * h);
    w.payload.p = pL_ref + (d_rope - drop) * kE3;
    w.payload.v = vL_ref;
    for (int i = 0; i < n; ++i) {
        const double a = formation_angle(i, n);
        const Vec3 ring(std::cos(a), std::sin(a), 0.0);
        auto& d = w.drones[i];
        d.p = pL_ref + p.ring_radius * ring + d_rope * kE3;
        d.v = vL_ref;
        w.attach[i] = p.attach_radius * ring;
        w.survivors[i] = i;
        w.ropes.push_back(make_straight_chain(d.p, w.payload.p + w.attach[i], vL_ref, p));
    }
    return w;
}

double mechanical_energy(const WorldState& w, const SimParams& p)
{
    double e = 0.0;
    for (const auto& d : w.drones) {
        e += 0.5 * p.drone_mass * d.v.squaredNorm() + p.drone_mass * p.g * d.p.z();
        e += 0.5 * d.w.dot(p.inertia.cwiseProduct(d.w));
    }
    e += 0.5 * p.payload_mass * w.payload.v.squaredNorm() + p.payload_mass * p.g * w.payload.p.z();
    for (std::size_t r = 0; r < w.ropes.size(); ++r) {
        const auto& c = w.ropes[r];
        for (std::size_t j = 0; j < c.bead_p.size(); ++j) {
            e += 0.5 * c.bead_mass * c.bead_v[j].squaredNorm();
            if (p.bead_gravity) e += c.bead_mass * p.g * c.bead_p[j].z();
        }
        if (c.severed) continue;
        const int nb = int(c.bead_p.size());
        for (int j = 0; j <= nb; ++j) {
            const Vec3 a = j == 0 ? w.drones[r].p : c.bead_p[j - 1];
            const Vec3 b = j == nb ? Vec3(w.payload.p + w.attach[r]) : c.bead_p[j];
            const double s = std::max(0.0, (b - a).norm() - c.seg.rest);
            e += 0.5 * c.seg.k * s * s;
        }
    }
    return e;
}

double chord_length(const WorldState& w, int i)
{
    return (w.drones[i].p - (w.payload.p + w.attach[i])).norm();
}

double rope_tension(const WorldState& w, int i)
{
    return drone_side_tension(w.ropes[i], w.drones[i].p, w.drones[i].v);
}

} // namespace slung
