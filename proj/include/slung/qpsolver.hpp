#pragma once

#include <Eigen/Dense>

#include <limits>
#include <string>

namespace slung::qp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// min 0.5 x'Px + q'x  s.t.  l <= A x <= u,  lb <= x <= ub.
struct Problem {
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    Eigen::MatrixXd A; // may have zero rows
    Eigen::VectorXd l, u;
    Eigen::VectorXd lb, ub; // may be empty (unbounded)
};

enum class Status { Solved, MaxIter, PrimalInfeasible, DualInfeasible };

std::string to_string(Status s);

struct Settings {
    double eps_abs = 1e-6;
    double eps_rel = 1e-6;
    double rho = 0.1;
    double sigma = 1e-6;
    double alpha = 1.6;
    int max_iter = 4000;
    int check_every = 5;
    int adapt_every = 25;
    bool adaptive_rho = true;
    bool polish = true;
};

struct Result {
    Eigen::VectorXd x;
    Eigen::VectorXd y; // multipliers for the stacked rows [A; I]
    Status status = Status::MaxIter;
    int iterations = 0;
    double objective = 0.0;
    double prim_res = 0.0;
    double dual_res = 0.0;
    bool polished = false;
};

/// Throws std::invalid_argument on dimension mismatch or a non-PSD cost.
void validate(const Problem& prob);

/// Operator-splitting solver with over-relaxation and adaptive step. Keeps the
/// factorization across calls while P, A and the step size are unchanged, so
/// repeated solves with new vectors stay cheap. Warm starts from the last solution.
class Solver {
public:
    explicit Solver(Settings s = {}) : set_(s) {}

    Result solve(const Problem& prob);
    Result solve(const Problem& prob, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0);

    void reset_warm_start();
    const Settings& settings() const { return set_; }
    Settings& settings() { return set_; }

private:
    void setup(const Problem& prob);
    void factor();
    bool polish(const Problem& prob, Result& r);

    Settings set_;
    Eigen::MatrixXd P_, A_; // A_ stacks bounds below the constraint rows
    Eigen::VectorXd l_, u_, rho_vec_;
    double rho_ = 0.1;
    Eigen::LLT<Eigen::MatrixXd> kkt_;
    Eigen::VectorXd x_, z_, y_;
    bool warm_ = false;
    bool have_structure_ = false;
};

double objective(const Problem& prob, const Eigen::VectorXd& x);

} // namespace slung::qp
