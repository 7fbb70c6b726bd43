#include "slung/qpsolver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slung::qp {

std::string to_string(Status s)
{
    switch (s) {
    case Status::Solved: return "solved";
    case Status::MaxIter: return "max-iter";
    case Status::PrimalInfeasible: return "primal-infeasible";
    case Status::DualInfeasible: return "dual-infeasible";
    }
    return "unknown";
}

double objective(const Problem& prob, const Eigen::VectorXd& x)
{
    return 0.5 * x.dot(prob.P * x) + prob.q.dot(x);
}

void validate(const Problem& prob)
{
    const auto n = prob.P.rows();
    if (prob.P.cols() != n || prob.q.size() != n)
        throw std::invalid_argument("qp: cost dimensions inconsistent");
    if (prob.A.rows() > 0 && prob.A.cols() != n)
        throw std::invalid_argument("qp: constraint matrix has wrong column count");
    if (prob.l.size() != prob.A.rows() || prob.u.size() != prob.A.rows())
        throw std::invalid_argument("qp: constraint bound size mismatch");
    if (prob.lb.size() != prob.ub.size() || (prob.lb.size() != 0 && prob.lb.size() != n))
        throw std::invalid_argument("qp: variable bound size mismatch");
    if (!(prob.P - prob.P.transpose()).isZero(1e-9 * (1.0 + prob.P.cwiseAbs().maxCoeff())))
        throw std::invalid_argument("qp: cost matrix not symmetric");
    const double jitter = 1e-9 * (1.0 + prob.P.diagonal().cwiseAbs().maxCoeff());
    Eigen::LLT<Eigen::MatrixXd> llt(prob.P + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() != Eigen::Success) throw std::invalid_argument("qp: cost matrix not PSD");
    for (Eigen::Index i = 0; i < prob.l.size(); ++i)
        if (prob.l[i] > prob.u[i]) throw std::invalid_argument("qp: l > u");
    for (Eigen::Index i = 0; i < prob.lb.size(); ++i)
        if (prob.lb[i] > prob.ub[i]) throw std::invalid_argument("qp: lb > ub");
}

void Solver::reset_warm_start()
{
    warm_ = false;
}

void Solver::setup(const Problem& prob)
{
    const auto n = prob.P.rows();
    const auto mc = prob.A.rows();
    const auto mb = prob.lb.size();
    Eigen::MatrixXd A(mc + mb, n);
    if (mc > 0) A.topRows(mc) = prob.A;
    if (mb > 0) A.bottomRows(mb).setIdentity();
    Eigen::VectorXd l(mc + mb), u(mc + mb);
    if (mc > 0) {
        l.head(mc) = prob.l;
        u.head(mc) = prob.u;
    }
    if (mb > 0) {
        l.tail(mb) = prob.lb;
        u.tail(mb) = prob.ub;
    }
    const bool same = have_structure_ && P_.rows() == n && A_.rows() == A.rows() &&
                      P_ == prob.P && A_ == A;
    l_ = l;
    u_ = u;
    if (!same) {
        P_ = prob.P;
        A_ = A;
        rho_ = set_.rho;
        have_structure_ = true;
        warm_ = warm_ && x_.size() == n && z_.size() == A.rows();
        factor();
    } else {
        // equality pattern may change with new bounds
        factor();
    }
}

void Solver::factor()
{
    const auto m = A_.rows();
    rho_vec_.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::isinf(l_[i]) && std::isinf(u_[i]))
            rho_vec_[i] = 1e-6;
        else if (u_[i] - l_[i] < 1e-9)
            rho_vec_[i] = 1e3 * rho_;
        else
            rho_vec_[i] = rho_;
    }
    const auto n = P_.rows();
    Eigen::MatrixXd M = P_ + set_.sigma * Eigen::MatrixXd::Identity(n, n);
    if (m > 0) M.noalias() += A_.transpose() * rho_vec_.asDiagonal() * A_;
    kkt_.compute(M);
}

Result Solver::solve(const Problem& prob)
{
    const auto n = prob.P.rows();
    if (warm_ && x_.size() == n) return solve(prob, x_, y_);
    const auto m = prob.A.rows() + prob.lb.size();
    return solve(prob, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(m));
}

Result Solver::solve(const Problem& prob, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0)
{
    validate(prob);
    setup(prob);
    const auto n = P_.rows();
    const auto m = A_.rows();
    const Eigen::VectorXd& q = prob.q;

    Eigen::VectorXd x = x0.size() == n ? x0 : Eigen::VectorXd::Zero(n);
    Eigen::VectorXd y = y0.size() == m ? y0 : Eigen::VectorXd::Zero(m);
    Eigen::VectorXd z = (A_ * x).cwiseMax(l_).cwiseMin(u_);
    Eigen::VectorXd xt(n), zt(m), rhs(n), x_prev(n), y_prev(m), z_prev(m);

    Result r;
    const double a = set_.alpha;
    auto inf_norm = [](const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; };

    int it = 0;
    for (it = 1; it <= set_.max_iter; ++it) {
        x_prev = x;
        y_prev = y;
        z_prev = z;
        rhs = set_.sigma * x - q;
        if (m > 0) rhs.noalias() += A_.transpose() * (rho_vec_.cwiseProduct(z) - y);
        xt = kkt_.solve(rhs);
        zt.noalias() = A_ * xt;
        x = a * xt + (1.0 - a) * x_prev;
        const Eigen::VectorXd zr = a * zt + (1.0 - a) * z_prev;
        z = (zr + y.cwiseQuotient(rho_vec_)).cwiseMax(l_).cwiseMin(u_);
        y += rho_vec_.cwiseProduct(zr - z);

        if (it % set_.check_every != 0 && it != set_.max_iter) continue;

        const Eigen::VectorXd Ax = A_ * x;
        const Eigen::VectorXd Px = P_ * x;
        const Eigen::VectorXd Aty = m > 0 ? Eigen::VectorXd(A_.transpose() * y)
                                          : Eigen::VectorXd::Zero(n);
        const double prim = m > 0 ? inf_norm(Ax - z) : 0.0;
        const double dual = inf_norm(Px + q + Aty);
        const double eps_p = set_.eps_abs + set_.eps_rel * std::max(inf_norm(Ax), inf_norm(z));
        const double eps_d = set_.eps_abs +
                             set_.eps_rel * std::max({inf_norm(Px), inf_norm(Aty), inf_norm(q)});
        r.prim_res = prim;
        r.dual_res = dual;
        if (prim <= eps_p && dual <= eps_d) {
            r.status = Status::Solved;
            break;
        }

        // infeasibility certificates
        const Eigen::VectorXd dy = y - y_prev;
        const double ndy = inf_norm(dy);
        if (m > 0 && ndy > 1e-12) {
            const double eps_inf = 1e-5;
            if (inf_norm(A_.transpose() * dy) <= eps_inf * ndy) {
                double s = 0.0;
                bool finite = true;
                for (Eigen::Index i = 0; i < m; ++i) {
                    if (dy[i] > 0) {
                        if (std::isinf(u_[i])) finite = false;
                        else s += u_[i] * dy[i];
                    } else if (dy[i] < 0) {
                        if (std::isinf(l_[i])) finite = false;
                        else s += l_[i] * dy[i];
                    }
                }
                if (finite && s < -eps_inf * ndy) {
                    r.status = Status::PrimalInfeasible;
                    break;
                }
            }
        }
        const Eigen::VectorXd dx = x - x_prev;
        const double ndx = inf_norm(dx);
        if (ndx > 1e-12) {
            const double eps_inf = 1e-5;
            bool cert = inf_norm(P_ * dx) <= eps_inf * ndx && q.dot(dx) < -eps_inf * ndx;
            if (cert && m > 0) {
                const Eigen::VectorXd adx = A_ * dx;
                for (Eigen::Index i = 0; i < m && cert; ++i) {
                    const double tol = eps_inf * ndx;
                    if (!std::isinf(u_[i]) && adx[i] > tol) cert = false;
                    if (!std::isinf(l_[i]) && adx[i] < -tol) cert = false;
                }
            }
            if (cert) {
                r.status = Status::DualInfeasible;
                break;
            }
        }

        if (set_.adaptive_rho && it % set_.adapt_every == 0 && m > 0) {
            const double pn = prim / (std::max(inf_norm(Ax), inf_norm(z)) + 1e-30);
            const double dn = dual / (std::max({inf_norm(Px), inf_norm(Aty), inf_norm(q)}) + 1e-30);
            double rho_new = rho_ * std::sqrt(pn / (dn + 1e-30));
            rho_new = std::clamp(rho_new, 1e-6, 1e6);
            if (rho_new > 5.0 * rho_ || rho_new < 0.2 * rho_) {
                rho_ = rho_new;
                factor();
            }
        }
    }
    r.iterations = std::min(it, set_.max_iter);
    r.x = x;
    r.y = y;
    if (r.status == Status::Solved && set_.polish) polish(prob, r);
    r.objective = objective(prob, r.x);
    if (r.status == Status::Solved) {
        x_ = r.x;
        y_ = r.y;
        z_ = (A_ * r.x).cwiseMax(l_).cwiseMin(u_);
        warm_ = true;
    }
    return r;
}

bool Solver::polish(const Problem& prob, Result& r)
{
    const auto n = P_.rows();
    const auto m = A_.rows();
    const Eigen::VectorXd z = (A_ * r.x + r.y.cwiseQuotient(rho_vec_)).cwiseMax(l_).cwiseMin(u_);
    std::vector<Eigen::Index> act;
    std::vector<double> bval;
    for (Eigen::Index i = 0; i < m; ++i) {
        const bool lo = z[i] - l_[i] < -r.y[i];
        const bool hi = u_[i] - z[i] < r.y[i];
        if (lo) {
            act.push_back(i);
            bval.push_back(l_[i]);
        } else if (hi) {
            act.push_back(i);
            bval.push_back(u_[i]);
        }
    }
    const auto k = Eigen::Index(act.size());
    const double delta = 1e-9;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    K.topLeftCorner(n, n) = P_;
    for (Eigen::Index j = 0; j < k; ++j) {
        K.block(n + j, 0, 1, n) = A_.row(act[j]);
        K.block(0, n + j, n, 1) = A_.row(act[j]).transpose();
    }
    Eigen::MatrixXd Kreg = K;
    Kreg.topLeftCorner(n, n) += delta * Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index j = 0; j < k; ++j) Kreg(n + j, n + j) = -delta;
    Eigen::VectorXd b(n + k);
    b.head(n) = -prob.q;
    for (Eigen::Index j = 0; j < k; ++j) b[n + j] = bval[j];
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Kreg);
    Eigen::VectorXd sol = lu.solve(b);
    for (int pass = 0; pass < 5; ++pass) sol += lu.solve(b - K * sol);
    if (!sol.allFinite()) return false;

    Eigen::VectorXd xp = sol.head(n);
    Eigen::VectorXd yp = Eigen::VectorXd::Zero(m);
    for (Eigen::Index j = 0; j < k; ++j) yp[act[j]] = sol[n + j];

    const Eigen::VectorXd Ax = A_ * xp;
    double prim = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        prim = std::max({prim, l_[i] - Ax[i], Ax[i] - u_[i]});
    const double dual = (P_ * xp + prob.q + A_.transpose() * yp).cwiseAbs().maxCoeff();
    // multiplier signs must match the side of the active bound
    bool signs = true;
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto i = act[j];
        if (l_[i] == u_[i]) continue;
        if (bval[j] == l_[i] && yp[i] > 1e-9) signs = false;
        if (bval[j] == u_[i] && yp[i] < -1e-9) signs = false;
    }
    if (signs && prim <= std::max(r.prim_res, 1e-9) && dual <= std::max(r.dual_res, 1e-9)) {
        r.x = xp;
        r.y = yp;
        r.prim_res = prim;
        r.dual_res = dual;
        r.polished = true;
        return true;
    }
    return false;
}

} // namespace slung::qp
