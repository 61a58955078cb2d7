#include "gprc/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <vector>

namespace gprc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

LbfgsResult lbfgs_minimize(const GradObjective& objective, const Eigen::VectorXd& x0,
                           const LbfgsOptions& options) {
    const auto n = x0.size();
    LbfgsResult result;
    result.x = x0;
    result.grad = Eigen::VectorXd::Zero(n);

    Eigen::VectorXd x = x0;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    double f = objective(x, &g);
    if (!std::isfinite(f)) {
        result.f = f;
        return result;  // infeasible start; caller treats as a failed restart
    }

    struct Pair {
        Eigen::VectorXd s, y;
        double rho;
    };
    std::deque<Pair> pairs;

    result.f = f;
    result.grad = g;

    Eigen::VectorXd q(n), direction(n), x_new(n), g_new(n);
    std::vector<double> alpha_buf;

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        const double xscale = std::max(1.0, x.cwiseAbs().maxCoeff());
        if (g.cwiseAbs().maxCoeff() <= options.grad_tol * xscale) {
            result.converged = true;
            break;
        }

        // Two-loop recursion for d = -H g.
        q = g;
        alpha_buf.assign(pairs.size(), 0.0);
        for (size_t i = pairs.size(); i-- > 0;) {
            alpha_buf[i] = pairs[i].rho * pairs[i].s.dot(q);
            q -= alpha_buf[i] * pairs[i].y;
        }
        if (!pairs.empty()) {
            const auto& last = pairs.back();
            q *= last.s.dot(last.y) / last.y.squaredNorm();
        }
        for (size_t i = 0; i < pairs.size(); ++i) {
            const double beta = pairs[i].rho * pairs[i].y.dot(q);
            q += (alpha_buf[i] - beta) * pairs[i].s;
        }
        direction = -q;

        double dg = direction.dot(g);
        if (!(dg < 0.0)) {  // not a descent direction; restart from steepest descent
            pairs.clear();
            direction = -g;
            dg = -g.squaredNorm();
        }

        // Backtracking Armijo line search (value-only probes).
        double step = 1.0;
        double f_new = kInf;
        bool accepted = false;
        for (int ls = 0; ls < options.max_linesearch; ++ls) {
            x_new = x + step * direction;
            f_new = objective(x_new, nullptr);
            if (std::isfinite(f_new) && f_new <= f + options.armijo_c1 * step * dg) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no further progress along this direction

        objective(x_new, &g_new);

        Pair p;
        p.s = x_new - x;
        p.y = g_new - g;
        const double sy = p.s.dot(p.y);
        if (sy > 1e-10 * p.s.norm() * p.y.norm()) {
            p.rho = 1.0 / sy;
            pairs.push_back(std::move(p));
            if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
        }

        const double f_prev = f;
        x = x_new;
        f = f_new;
        g = g_new;
        result.x = x;
        result.f = f;
        result.grad = g;
        result.iterations = iter + 1;

        if (std::abs(f_prev - f) <= options.f_rel_tol * std::max(1.0, std::abs(f_prev))) {
            result.converged = true;
            break;
        }
    }

    return result;
}

}  // namespace gprc
