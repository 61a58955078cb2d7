// Test-only oracles. These stay independent of the library's computation paths:
// finite differences instead of the closed-form recursion, eigendecompositions
// and dense LU conditioning instead of Cholesky solves.
#ifndef GPRC_TESTS_ORACLES_HPP
#define GPRC_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "gprc/kernel.hpp"
#include "gprc/multiindex.hpp"

namespace oracle {

using PairFn = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

struct Deriv {
    int dim;
    bool on_xprime;
};

inline double fd_nested(const PairFn& f, Eigen::VectorXd x, Eigen::VectorXd xp,
                        const std::vector<Deriv>& derivs, double h, size_t k = 0) {
    if (k == derivs.size()) return f(x, xp);
    Eigen::VectorXd& v = derivs[k].on_xprime ? xp : x;
    const int d = derivs[k].dim;
    const double orig = v[d];
    v[d] = orig + h;
    const double fp = fd_nested(f, x, xp, derivs, h, k + 1);
    v[d] = orig - h;
    const double fm = fd_nested(f, x, xp, derivs, h, k + 1);
    v[d] = orig;
    return (fp - fm) / (2.0 * h);
}

/// Central finite differences, one Richardson step: (4 F(h/2) - F(h)) / 3.
inline double fd_mixed_derivative(const PairFn& f, const gprc::MultiIndex& alpha,
                                  const gprc::MultiIndex& beta, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& xp, double h) {
    std::vector<Deriv> derivs;
    for (int d = 0; d < alpha.dim(); ++d) {
        for (int k = 0; k < alpha.order(d); ++k) derivs.push_back({d, false});
    }
    for (int d = 0; d < beta.dim(); ++d) {
        for (int k = 0; k < beta.order(d); ++k) derivs.push_back({d, true});
    }
    const double coarse = fd_nested(f, x, xp, derivs, h);
    const double fine = fd_nested(f, x, xp, derivs, h / 2.0);
    return (4.0 * fine - coarse) / 3.0;
}

/// Step sizes tuned per total order to balance truncation and roundoff.
inline double fd_step_for_order(int total_order) {
    if (total_order <= 2) return 1e-3;
    if (total_order == 3) return 5e-3;
    return 2e-2;
}

inline double fd_kernel_derivative(const gprc::MultiIndex& alpha, const gprc::MultiIndex& beta,
                                   const Eigen::VectorXd& x, const Eigen::VectorXd& xp,
                                   const gprc::KernelHyperparams& hp) {
    const PairFn f = [&hp](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return gprc::se_kernel(a, b, hp);
    };
    return fd_mixed_derivative(f, alpha, beta, x, xp, fd_step_for_order(alpha.total() + beta.total()));
}

/// NLML via eigendecomposition (log det) and a dense solve (quadratic form).
inline double nlml_eig(const Eigen::MatrixXd& K, const Eigen::VectorXd& y) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < K.rows(); ++i) logdet += std::log(es.eigenvalues()[i]);
    const Eigen::VectorXd w = es.eigenvectors().transpose() * y;
    const double quad = (w.array().square() / es.eigenvalues().array()).sum();
    return 0.5 * logdet + 0.5 * quad +
           0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

/// Conditions a zero-mean Gaussian on all but its last coordinate (Schur
/// complement with a dense LU inverse).
struct Conditioned {
    double mean;
    double variance;
};

inline Conditioned condition_last(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& obs) {
    const Eigen::Index n = sigma.rows() - 1;
    const Eigen::MatrixXd A = sigma.topLeftCorner(n, n);
    const Eigen::VectorXd b = sigma.topRightCorner(n, 1);
    const double c = sigma(n, n);
    const Eigen::MatrixXd Ainv = A.fullPivLu().inverse();
    return {b.dot(Ainv * obs), c - b.dot(Ainv * b)};
}

}  // namespace oracle

#endif  // GPRC_TESTS_ORACLES_HPP
