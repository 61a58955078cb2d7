#include "gprc/kernel.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include "gprc/errors.hpp"

namespace gprc {

namespace detail {

namespace {
bool warnings_enabled = true;
}

void warn(const std::string& message) {
    if (warnings_enabled) std::cerr << "[gprc] warning: " << message << "\n";
}

void set_warnings_enabled(bool enabled) { warnings_enabled = enabled; }

Poly Poly::differentiated(int d) const {
    Poly out(dim_);
    for (const auto& [expo, c] : terms_) {
        const int e = expo[static_cast<size_t>(d)];
        if (e == 0) continue;
        std::vector<int> lowered = expo;
        lowered[static_cast<size_t>(d)] = e - 1;
        out.terms_[lowered] += c * static_cast<double>(e);
    }
    return out;
}

Poly Poly::times_coordinate(int d, double scale) const {
    Poly out(dim_);
    if (scale == 0.0) return out;
    for (const auto& [expo, c] : terms_) {
        std::vector<int> raised = expo;
        raised[static_cast<size_t>(d)] += 1;
        out.terms_[raised] += c * scale;
    }
    return out;
}

Poly Poly::scaled(double s) const {
    Poly out(dim_);
    if (s == 0.0) return out;
    for (const auto& [expo, c] : terms_) out.terms_[expo] = c * s;
    return out;
}

Poly Poly::operator+(const Poly& other) const {
    Poly out = *this;
    for (const auto& [expo, c] : other.terms_) {
        double& slot = out.terms_[expo];
        slot += c;
        if (slot == 0.0) out.terms_.erase(expo);
    }
    return out;
}

double Poly::eval(const Eigen::VectorXd& v) const {
    double acc = 0.0;
    for (const auto& [expo, c] : terms_) {
        double term = c;
        for (int d = 0; d < dim_; ++d) {
            for (int k = 0; k < expo[static_cast<size_t>(d)]; ++k) term *= v[d];
        }
        acc += term;
    }
    return acc;
}

}  // namespace detail

void KernelHyperparams::validate() const {
    if (lengthscales.size() == 0) {
        throw std::invalid_argument("KernelHyperparams: input dimension must be >= 1");
    }
    if (!(gamma_alpha > 0.0) || !std::isfinite(gamma_alpha)) {
        throw std::invalid_argument("KernelHyperparams: gamma_alpha must be positive and finite");
    }
    for (int d = 0; d < dim(); ++d) {
        if (!(lengthscales[d] > 0.0) || !std::isfinite(lengthscales[d])) {
            throw std::invalid_argument("KernelHyperparams: lengthscales must be positive and finite");
        }
    }
}

double weighted_sqdist(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                       const KernelHyperparams& hp) {
    if (x.size() != x_prime.size() || x.size() != hp.lengthscales.size()) {
        throw std::invalid_argument("se_kernel: dimension mismatch between inputs and lengthscales");
    }
    double s = 0.0;
    for (int d = 0; d < x.size(); ++d) {
        const double v = x[d] - x_prime[d];
        s += hp.lengthscales[d] * v * v;
    }
    return s;
}

double se_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const KernelHyperparams& hp) {
    hp.validate();
    return hp.gamma_alpha * hp.gamma_alpha * std::exp(-0.5 * weighted_sqdist(x, x_prime, hp));
}

namespace {

// Lower one derivative through p * k. In x: d/dx_d [p k] = (p' - gl_d v_d p) k,
// in x': the chain-rule sign on v = x - x' flips both pieces.
detail::Poly apply_x(const detail::Poly& p, int d, double gl) {
    return p.differentiated(d) + p.times_coordinate(d, -gl);
}

detail::Poly apply_xprime(const detail::Poly& p, int d, double gl) {
    return p.differentiated(d).scaled(-1.0) + p.times_coordinate(d, gl);
}

detail::Poly build_poly(const detail::Poly& seed, const MultiIndex& alpha, const MultiIndex& beta,
                        const KernelHyperparams& hp) {
    detail::Poly p = seed;
    for (int d = 0; d < hp.dim(); ++d) {
        for (int k = 0; k < alpha.order(d); ++k) p = apply_x(p, d, hp.lengthscales[d]);
    }
    for (int d = 0; d < hp.dim(); ++d) {
        for (int k = 0; k < beta.order(d); ++k) p = apply_xprime(p, d, hp.lengthscales[d]);
    }
    return p;
}

}  // namespace

DerivativeKernel::DerivativeKernel(const MultiIndex& alpha, const MultiIndex& beta,
                                   KernelHyperparams hp, int max_order_per_side)
    : hp_(std::move(hp)), value_poly_(hp_.dim()) {
    hp_.validate();
    const int dim = hp_.dim();
    if (alpha.dim() != dim || beta.dim() != dim) {
        throw std::invalid_argument("DerivativeKernel: multi-index dimension mismatch");
    }
    if (alpha.total() > max_order_per_side || beta.total() > max_order_per_side) {
        throw UnsupportedOrderError("DerivativeKernel: derivative order " +
                                    std::to_string(std::max(alpha.total(), beta.total())) +
                                    " exceeds the per-side cap " + std::to_string(max_order_per_side));
    }

    value_poly_ = build_poly(detail::Poly::constant(dim, 1.0), alpha, beta, hp_);

    dlog_l_polys_.reserve(static_cast<size_t>(dim));
    for (int d = 0; d < dim; ++d) {
        std::vector<int> expo(static_cast<size_t>(dim), 0);
        expo[static_cast<size_t>(d)] = 2;
        // d k / d gl_d = -1/2 v_d^2 k; derivatives in x, x' commute with d/d gl.
        dlog_l_polys_.push_back(build_poly(detail::Poly::monomial(dim, expo, 1.0), alpha, beta, hp_));
    }
}

double DerivativeKernel::base(const Eigen::VectorXd& v) const {
    double s = 0.0;
    for (int d = 0; d < hp_.dim(); ++d) s += hp_.lengthscales[d] * v[d] * v[d];
    return hp_.gamma_alpha * hp_.gamma_alpha * std::exp(-0.5 * s);
}

double DerivativeKernel::value(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime) const {
    if (x.size() != hp_.dim() || x_prime.size() != hp_.dim()) {
        throw std::invalid_argument("DerivativeKernel: input dimension mismatch");
    }
    const Eigen::VectorXd v = x - x_prime;
    return value_poly_.eval(v) * base(v);
}

double DerivativeKernel::dlog_lengthscale(int d, const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& x_prime) const {
    const Eigen::VectorXd v = x - x_prime;
    return -0.5 * hp_.lengthscales[d] * dlog_l_polys_[static_cast<size_t>(d)].eval(v) * base(v);
}

double se_kernel_derivative(const MultiIndex& alpha, const MultiIndex& beta,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                            const KernelHyperparams& hp, int max_order_per_side) {
    return DerivativeKernel(alpha, beta, hp, max_order_per_side).value(x, x_prime);
}

}  // namespace gprc
