#include "slung/cables.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace slung {

namespace {
std::atomic<std::uint64_t> g_degenerate{0};
}

double SimParams::bead_mass() const
{
    const double w = rope_time_constant / (2.0 * std::numbers::pi);
    return segment_stiffness * w * w;
}

double SimParams::segment_damping() const
{
    return 2.0 * shape_damping_ratio * std::sqrt(segment_stiffness * bead_mass());
}

SegmentParams segment_params(const SimParams& p)
{
    return {p.segment_stiffness, p.segment_damping(), p.segment_rest()};
}

Vec3 segment_force(const Vec3& pa, const Vec3& pb, const Vec3& va, const Vec3& vb,
                   const SegmentParams& seg)
{
    const Vec3 d = pb - pa;
    const double len = d.norm();
    if (len < 1e-9) {
        g_degenerate.fetch_add(1, std::memory_order_relaxed);
        return Vec3::Zero();
    }
    if (len <= seg.rest) return Vec3::Zero();
    const Vec3 u = d / len;
    const double rate = u.dot(vb - va);
    const double mag = seg.k * (len - seg.rest) + seg.c * rate;
    if (mag <= 0.0) return Vec3::Zero();
    return mag * u;
}

std::uint64_t degenerate_segment_count()
{
    return g_degenerate.load();
}

double drone_side_tension(const RopeBeadChain& chain, const Vec3& drone_p, const Vec3& drone_v)
{
    if (chain.severed) return 0.0;
    if (chain.bead_p.empty()) return 0.0;
    return segment_force(drone_p, chain.bead_p.front(), drone_v, chain.bead_v.front(), chain.seg)
        .norm();
}

double payload_side_tension(const RopeBeadChain& chain, const Vec3& attach_p, const Vec3& attach_v)
{
    if (chain.severed) return 0.0;
    if (chain.bead_p.empty()) return 0.0;
    return segment_force(attach_p, chain.bead_p.back(), attach_v, chain.bead_v.back(), chain.seg)
        .norm();
}

double lumped_tension(double chord, const LumpedCable& cable)
{
    if (chord < 0.0) throw std::invalid_argument("lumped_tension: negative chord");
    return cable.k_eff * std::max(0.0, chord - cable.length);
}

RopeBeadChain make_straight_chain(const Vec3& from, const Vec3& to, const Vec3& vel,
                                  const SimParams& p)
{
    RopeBeadChain c;
    c.seg = segment_params(p);
    c.bead_mass = p.bead_mass();
    const int nb = p.n_beads;
    c.bead_p.resize(nb);
    c.bead_v.assign(nb, vel);
    for (int j = 0; j < nb; ++j) {
        const double s = double(j + 1) / double(nb + 1);
        c.bead_p[j] = from + s * (to - from);
    }
    return c;
}

std::complex<double> element_shape_pole(const SimParams& p)
{
    const double m = p.bead_mass();
    const double k = p.segment_stiffness;
    const double c = p.segment_damping();
    // m s^2 + c s + k = 0, slower root
    const std::complex<double> disc = std::sqrt(std::complex<double>(c * c - 4.0 * m * k, 0.0));
    return (-c + disc) / (2.0 * m);
}

std::vector<std::complex<double>> chain_shape_poles(const SimParams& p)
{
    const int n = p.n_beads;
    const double m = p.bead_mass();
    const double k = p.segment_stiffness;
    const double c = p.segment_damping();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        K(i, i) = 2.0;
        if (i > 0) K(i, i - 1) = -1.0;
        if (i + 1 < n) K(i, i + 1) = -1.0;
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    A.topRightCorner(n, n).setIdentity();
    A.bottomLeftCorner(n, n) = -(k / m) * K;
    A.bottomRightCorner(n, n) = -(c / m) * K;
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    std::vector<std::complex<double>> out(es.eigenvalues().data(),
                                          es.eigenvalues().data() + 2 * n);
    std::sort(out.begin(), out.end(), [](auto a, auto b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    return out;
}

FidelityReport reduction_fidelity(const std::vector<double>& tension,
                                  const std::vector<double>& chord, const LumpedCable& cable,
                                  double headroom)
{
    if (tension.size() != chord.size())
        throw std::invalid_argument("reduction_fidelity: trace length mismatch");
    FidelityReport r;
    for (std::size_t k = 0; k < tension.size(); ++k) {
        if (chord[k] <= cable.length) continue;
        r.max_deviation =
            std::max(r.max_deviation, std::abs(tension[k] - lumped_tension(chord[k], cable)));
    }
    r.within_bound = r.max_deviation <= headroom * r.bound;
    return r;
}

SlackAudit slack_audit(const std::vector<std::vector<double>>& tension,
                       const std::vector<std::vector<std::uint8_t>>& active, double dt, double eps)
{
    SlackAudit a;
    a.max_run.assign(tension.size(), 0.0);
    std::size_t slack = 0, total = 0;
    for (std::size_t r = 0; r < tension.size(); ++r) {
        std::size_t run = 0, best = 0;
        for (std::size_t k = 0; k < tension[r].size(); ++k) {
            if (!active.empty() && !active[r][k]) {
                run = 0;
                continue;
            }
            ++total;
            if (tension[r][k] < eps) {
                ++slack;
                ++run;
                best = std::max(best, run);
            } else {
                run = 0;
            }
        }
        a.max_run[r] = double(best) * dt;
        a.max_run_all = std::max(a.max_run_all, a.max_run[r]);
    }
    a.duty = total ? double(slack) / double(total) : 0.0;
    a.run_pass = a.max_run_all <= a.run_limit + 1e-12;
    a.duty_pass = a.duty <= a.duty_limit;
    return a;
}

AsymmetryStats tension_asymmetry(const std::vector<std::vector<double>>& tension,
                                 const std::vector<std::vector<std::uint8_t>>& active)
{
    const std::size_t nr = tension.size();
    AsymmetryStats s;
    s.rms.assign(nr, 0.0);
    s.p95.assign(nr, 0.0);
    s.peak.assign(nr, 0.0);
    if (nr == 0) return s;
    const std::size_t ns = tension[0].size();
    std::vector<std::vector<double>> dev(nr);
    double sum_all = 0.0;
    std::size_t n_all = 0;
    for (std::size_t k = 0; k < ns; ++k) {
        double mean = 0.0;
        int cnt = 0;
        for (std::size_t r = 0; r < nr; ++r)
            if (active[r][k]) {
                mean += tension[r][k];
                ++cnt;
            }
        if (cnt == 0) continue;
        mean /= cnt;
        for (std::size_t r = 0; r < nr; ++r)
            if (active[r][k]) dev[r].push_back(tension[r][k] - mean);
    }
    for (std::size_t r = 0; r < nr; ++r) {
        if (dev[r].empty()) continue;
        double ss = 0.0;
        std::vector<double> mag;
        mag.reserve(dev[r].size());
        for (double e : dev[r]) {
            ss += e * e;
            mag.push_back(std::abs(e));
        }
        sum_all += ss;
        n_all += dev[r].size();
        s.rms[r] = std::sqrt(ss / double(dev[r].size()));
        std::sort(mag.begin(), mag.end());
        s.peak[r] = mag.back();
        s.p95[r] = mag[std::min(mag.size() - 1, std::size_t(0.95 * double(mag.size())))];
    }
    s.rms_all = n_all ? std::sqrt(sum_all / double(n_all)) : 0.0;
    return s;
}

double SimParams::slot_elevation() const
{
    const double h = ring_radius - attach_radius;
    return std::sqrt(std::max(0.0, rope_length * rope_length - h * h));
}

} // namespace slung
