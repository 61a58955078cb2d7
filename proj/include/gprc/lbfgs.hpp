#ifndef GPRC_LBFGS_HPP
#define GPRC_LBFGS_HPP
#pragma once

#include <Eigen/Dense>
#include <functional>

namespace gprc {

/// Objective for minimization. Returns the value at x; when `grad` is non-null it
/// must also be filled. May return +infinity for infeasible points (grad is then
/// ignored). Implementations may cache work between an f-only call and a gradient
/// call at the same point; the optimizer requests gradients only at accepted iterates.
using GradObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct LbfgsOptions {
    int max_iterations = 150;
    int memory = 10;
    double grad_tol = 1e-6;    // stop when ||g||_inf <= grad_tol * max(1, ||x||_inf)
    double f_rel_tol = 1e-11;  // stop on relative objective stall
    int max_linesearch = 40;
    double armijo_c1 = 1e-4;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double f = 0.0;
    Eigen::VectorXd grad;
    int iterations = 0;
    bool converged = false;
};

/// Limited-memory BFGS with backtracking Armijo line search. Curvature pairs with
/// non-positive s'y are skipped to keep the inverse-Hessian approximation PD.
LbfgsResult lbfgs_minimize(const GradObjective& objective, const Eigen::VectorXd& x0,
                           const LbfgsOptions& options = {});

}  // namespace gprc

#endif  // GPRC_LBFGS_HPP
