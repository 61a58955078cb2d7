#ifndef GPRC_KERNEL_HPP
#define GPRC_KERNEL_HPP
#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "gprc/multiindex.hpp"

namespace gprc {

/// Hyperparameters of the squared-exponential kernel
///
///   k(x, x') = gamma_alpha^2 * exp(-1/2 * sum_d lengthscales[d] * (x_d - x'_d)^2).
///
/// Note the convention: `lengthscales` multiplies *inside* the squared norm, so each
/// entry acts as an inverse squared length scale (large value = short correlation
/// length). This differs from the common ell-parameterization k = exp(-r^2 / (2 ell^2)).
struct KernelHyperparams {
    double gamma_alpha = 1.0;      // signal amplitude (output units)
    Eigen::VectorXd lengthscales;  // per-dimension precision weights, all > 0

    int dim() const { return static_cast<int>(lengthscales.size()); }
    void validate() const;
};

/// Default cap on the derivative order per argument side. Second-order operators
/// need 2; kernel cross-derivatives then reach total order 4.
inline constexpr int kDefaultMaxOrderPerSide = 2;

/// Weighted squared distance sum_d lengthscales[d] * (x_d - x'_d)^2.
double weighted_sqdist(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                       const KernelHyperparams& hp);

/// Squared-exponential covariance k(x, x'). Result lies in (0, gamma_alpha^2].
double se_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const KernelHyperparams& hp);

namespace detail {

/// Sparse polynomial in v = x - x', exponents stored per dimension.
class Poly {
public:
    explicit Poly(int dim) : dim_(dim) {}

    static Poly constant(int dim, double c) {
        Poly p(dim);
        if (c != 0.0) p.terms_[std::vector<int>(static_cast<size_t>(dim), 0)] = c;
        return p;
    }

    static Poly monomial(int dim, const std::vector<int>& expo, double c) {
        Poly p(dim);
        if (c != 0.0) p.terms_[expo] = c;
        return p;
    }

    int dim() const { return dim_; }
    size_t size() const { return terms_.size(); }

    Poly differentiated(int d) const;
    Poly times_coordinate(int d, double scale) const;  // scale * v_d * p
    Poly scaled(double s) const;
    Poly operator+(const Poly& other) const;

    double eval(const Eigen::VectorXd& v) const;

private:
    int dim_;
    std::map<std::vector<int>, double> terms_;
};

}  // namespace detail

/// Mixed partial derivative of the squared-exponential kernel in closed form:
///
///   value(x, x') = d^alpha/dx^alpha d^beta/dx'^beta k(x, x').
///
/// The derivative is carried as a polynomial factor p with value = p(x - x') * k,
/// lowered term by term through the product rule; exact to machine precision at
/// any order. Also exposes the sensitivity to each log-lengthscale, needed for
/// analytic marginal-likelihood gradients: d k / d gamma_{l,d} = -1/2 v_d^2 k, so
/// the same recursion seeded with v_d^2 yields the derivative-kernel sensitivity.
///
/// Immutable after construction and safe to share across threads.
class DerivativeKernel {
public:
    DerivativeKernel(const MultiIndex& alpha, const MultiIndex& beta, KernelHyperparams hp,
                     int max_order_per_side = kDefaultMaxOrderPerSide);

    double value(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime) const;

    /// d value / d log(lengthscales[d]).
    double dlog_lengthscale(int d, const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime) const;

    const KernelHyperparams& hyperparams() const { return hp_; }

private:
    double base(const Eigen::VectorXd& v) const;  // gamma_alpha^2 exp(-1/2 |v|^2_gl)

    KernelHyperparams hp_;
    detail::Poly value_poly_;
    std::vector<detail::Poly> dlog_l_polys_;  // one per dimension, seeded with v_d^2
};

/// One-shot evaluation of d^alpha_x d^beta_x' k(x, x').
double se_kernel_derivative(const MultiIndex& alpha, const MultiIndex& beta,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                            const KernelHyperparams& hp,
                            int max_order_per_side = kDefaultMaxOrderPerSide);

}  // namespace gprc

#endif  // GPRC_KERNEL_HPP
