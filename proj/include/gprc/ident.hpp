#ifndef GPRC_IDENT_HPP
#define GPRC_IDENT_HPP
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gprc/picard.hpp"

namespace gprc {

/// Equation family indexed by a scalar parameter mu: either directly linear or a
/// nonlinear problem handled by Picard linearization.
using MuProblem = std::variant<AffineConstraint, NonlinearProblem>;

/// Derivative targets a residual needs, plus the residual evaluated from their
/// posterior means at a point.
struct ResidualEvaluator {
    std::vector<DerivativeTarget> targets;
    std::function<double(const Eigen::VectorXd& x, const std::vector<double>& values)> eval;
};

ResidualEvaluator residual_of(const MuProblem& problem);

struct ParamScenario {
    std::vector<double> param_grid;  // nonempty, strictly increasing
    std::function<MuProblem(double mu)> problem_of;
    Eigen::MatrixXd design_points;  // residual-term evaluation points
    int picard_iters = 1;           // inner Picard iterations for nonlinear problems

    void validate() const;
};

enum class IdentMode { Gprc, GprBaseline };

struct IdentConfig {
    ExtendedSetConfig extcfg;
    NoiseConfig noise;
    TrainConfig train;
    std::optional<DomainBox> domain;
    double residual_weight = 1.0;  // both loss terms enter with equal weight by default
    bool refine = false;           // quadratic interpolation around the grid argmin
};

/// Plain-GPR fit shared across the parameter grid in baseline mode; the data-fit
/// loss term is computed once and reused bitwise.
class GprBaselineCache {
public:
    GprBaselineCache(const Dataset& dataset, const Eigen::MatrixXd& design_points,
                     const IdentConfig& config);

    double data_fit_term() const { return data_fit_term_; }
    /// Posterior means of a target at the design points (memoized).
    const Eigen::VectorXd& design_means(const DerivativeTarget& target) const;

private:
    TrainedModel model_;
    Eigen::MatrixXd design_points_;
    double data_fit_term_ = 0.0;
    mutable std::vector<std::pair<DerivativeTarget, Eigen::VectorXd>> memo_;
};

/// L(mu) = 1/n sum (y_i - u_hat_i)^2 + w/m sum r_j(mu)^2. GPRC mode refits the
/// constrained model per mu; baseline mode reuses the cached plain fit (so the
/// first term does not depend on mu). Inner failures yield +infinity.
double loss_at(double mu, const Dataset& dataset, const ParamScenario& scenario, IdentMode mode,
               const IdentConfig& config, const GprBaselineCache* cache = nullptr);

struct LossCurve {
    Eigen::VectorXd mu;
    Eigen::VectorXd loss;
    double argmin_mu = 0.0;              // grid minimizer, ties toward smaller mu
    std::optional<double> refined_mu;    // quadratic refinement when enabled

    void to_csv(const std::string& path) const;
    nlohmann::json report(IdentMode mode, std::uint64_t seed, double runtime_seconds) const;
};

LossCurve identify(const Dataset& dataset, const ParamScenario& scenario, IdentMode mode,
                   const IdentConfig& config);

}  // namespace gprc

#endif  // GPRC_IDENT_HPP
