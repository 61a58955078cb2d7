#ifndef GPRC_OPERATORS_HPP
#define GPRC_OPERATORS_HPP
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "gprc/kernel.hpp"
#include "gprc/multiindex.hpp"

namespace gprc {

/// Deterministic scalar coefficient field c(x). Fields must be side-effect free;
/// kernels evaluate them many times and may cache results.
///
/// Constant, builtin and grid-interpolated fields serialize to JSON; custom
/// closures do not (use bake helpers before persisting models that hold them).
class ScalarField {
public:
    ScalarField() : ScalarField(constant(0.0)) {}

    static ScalarField constant(double value);
    static ScalarField builtin(const std::string& name);
    /// Piecewise-linear interpolation of (points, values); clamped outside the span. 1D only.
    static ScalarField grid1d(std::vector<double> points, std::vector<double> values);
    static ScalarField custom(std::string label, std::function<double(const Eigen::VectorXd&)> fn);

    double operator()(const Eigen::VectorXd& x) const { return fn_(x); }

    bool serializable() const;
    nlohmann::json to_json() const;
    static ScalarField from_json(const nlohmann::json& j);

private:
    ScalarField(std::function<double(const Eigen::VectorXd&)> fn, nlohmann::json description)
        : fn_(std::move(fn)), description_(std::move(description)) {}

    std::function<double(const Eigen::VectorXd&)> fn_;
    nlohmann::json description_;  // null when not serializable
};

/// One summand c(x) * d^alpha of a linear differential operator.
struct OperatorTerm {
    ScalarField coeff;
    MultiIndex derivative;
};

/// Sum of variable-coefficient partial-derivative terms. Duplicate multi-indices
/// are permitted and simply add.
class LinearOperator {
public:
    explicit LinearOperator(std::vector<OperatorTerm> terms);

    static LinearOperator identity(int dim);

    const std::vector<OperatorTerm>& terms() const { return terms_; }
    int dim() const { return terms_.front().derivative.dim(); }
    int max_order() const;

    nlohmann::json to_json() const;
    static LinearOperator from_json(const nlohmann::json& j);

private:
    std::vector<OperatorTerm> terms_;
};

/// Equation L u = f. rhs == 0 encodes the homogeneous case. The rhs never enters
/// covariances; it only shifts the observed residual values.
struct AffineConstraint {
    LinearOperator op;
    ScalarField rhs;

    int dim() const { return op.dim(); }

    nlohmann::json to_json() const;
    static AffineConstraint from_json(const nlohmann::json& j);
};

/// A requested mixed partial derivative of u (zero order requests u itself).
struct DerivativeTarget {
    MultiIndex derivative;

    explicit DerivativeTarget(MultiIndex d) : derivative(std::move(d)) {}
    static DerivativeTarget state(int dim) { return DerivativeTarget(MultiIndex::zero(dim)); }
    bool operator==(const DerivativeTarget& o) const { return derivative == o.derivative; }
};

// Cross-covariance kernels between u, the residual r = L u, and derivative targets.
// Variable coefficients are evaluated at the kernel argument on their own side:
// Cov(L u(x), L u(x')) = sum_ij c_i(x) c_j(x') d^{a_i}_x d^{a_j}_x' k(x, x').

double kernel_rr(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const AffineConstraint& constraint, const KernelHyperparams& hp);

double kernel_ur(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const AffineConstraint& constraint, const KernelHyperparams& hp);

double kernel_ru(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const AffineConstraint& constraint, const KernelHyperparams& hp);

/// Cov(d^alpha u(x), u(x')).
double kernel_lu(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const DerivativeTarget& target, const KernelHyperparams& hp);

/// Cov(d^alpha u(x), r(x')).
double kernel_lr(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const DerivativeTarget& target, const AffineConstraint& constraint,
                 const KernelHyperparams& hp);

/// Cov(d^alpha u(x), d^beta u(x')).
double kernel_ll(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const DerivativeTarget& target, const DerivativeTarget& other,
                 const KernelHyperparams& hp);

}  // namespace gprc

#endif  // GPRC_OPERATORS_HPP
