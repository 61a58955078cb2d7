#ifndef GPRC_GPR_HPP
#define GPRC_GPR_HPP
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gprc/kernel.hpp"
#include "gprc/lbfgs.hpp"
#include "gprc/operators.hpp"

namespace gprc {

/// Noisy scalar observations y at n input locations (rows of X).
struct Dataset {
    Eigen::MatrixXd X;  // n x D
    Eigen::VectorXd y;  // n

    int n() const { return static_cast<int>(X.rows()); }
    int dim() const { return static_cast<int>(X.cols()); }

    /// Throws on empty data; warns about duplicate rows.
    void validate() const;

    static Dataset from_csv(const std::string& path);
    void to_csv(const std::string& path) const;
};

struct NoiseConfig {
    double sigma_u2 = 0.1;          // observation noise variance
    bool sigma_u2_trainable = true; // optimize sigma_u2 with the kernel hyperparameters
    double sigma_r2 = 0.1;          // residual slack variance; fixed, never optimized

    void validate() const;
};

/// Initial hyperparameter point for one optimizer restart.
struct TrainInit {
    KernelHyperparams hp;
    double sigma_u2 = 0.1;
};

struct TrainConfig {
    std::uint64_t seed = 0;
    int restarts = 8;
    LbfgsOptions lbfgs;
    bool analytic_gradient = true;       // central finite differences when false
    std::vector<TrainInit> extra_inits;  // tried in addition to the random restarts
};

/// 2n x 2n joint covariance over [y; r] (or n x n when no constraint): kernel
/// blocks plus sigma_u^2 I and sigma_r^2 I on the diagonal blocks and a base
/// jitter of 1e-10 times the mean diagonal.
Eigen::MatrixXd assemble_joint_covariance(const Eigen::MatrixXd& X,
                                          const std::optional<AffineConstraint>& constraint,
                                          const KernelHyperparams& hp, const NoiseConfig& noise);

/// Negative log marginal likelihood 1/2 log det K + 1/2 Y'K^{-1}Y + dim/2 log 2pi,
/// via Cholesky with the jitter ladder {1e-10, 1e-8, 1e-6} (relative to the mean
/// diagonal) on factorization failure.
double nlml(const Eigen::MatrixXd& X, const Eigen::VectorXd& yjoint,
            const std::optional<AffineConstraint>& constraint, const KernelHyperparams& hp,
            const NoiseConfig& noise);

/// Analytic NLML gradient in [log gamma_alpha, log lengthscales..., log sigma_u2?];
/// the last entry is present only when noise.sigma_u2_trainable.
Eigen::VectorXd nlml_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& yjoint,
                              const std::optional<AffineConstraint>& constraint,
                              const KernelHyperparams& hp, const NoiseConfig& noise);

/// Optimized model with its joint covariance factorization. Immutable after
/// construction; safe to share across threads for prediction.
class TrainedModel {
public:
    KernelHyperparams hp;
    NoiseConfig noise;
    std::optional<AffineConstraint> constraint;
    Eigen::MatrixXd X;
    Eigen::VectorXd yjoint;  // [y; f(X)] for constrained models, y otherwise
    double nlml_value = 0.0;
    bool converged = true;

    int n() const { return static_cast<int>(X.rows()); }
    int dim() const { return static_cast<int>(X.cols()); }
    const Eigen::VectorXd y() const { return yjoint.head(n()); }

    /// Lower-triangular factor of the joint covariance; chol * chol' reconstructs it.
    const Eigen::MatrixXd& chol() const { return chol_lower_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }  // K^{-1} yjoint
    /// n x n u-block Kuu + sigma_u^2 I without jitter, reused by prediction.
    const Eigen::MatrixXd& u_block() const { return u_block_; }

    /// Reassembles the covariance, factorizes it and recomputes nlml_value.
    void rebuild();

    /// Versioned document without matrices; the factorization is rebuilt on load
    /// and checked against the stored nlml within 1e-6.
    nlohmann::json to_json() const;
    static TrainedModel from_json(const nlohmann::json& j);

private:
    Eigen::MatrixXd chol_lower_;
    Eigen::VectorXd alpha_;
    Eigen::MatrixXd u_block_;
};

/// Maximum-likelihood hyperparameter training with restarts; returns the best
/// restart by NLML. sigma_r2 is held fixed throughout.
TrainedModel train(const Dataset& dataset, const std::optional<AffineConstraint>& constraint,
                   const NoiseConfig& noise, const TrainConfig& config = {});

/// Default residual slack: ten times the observation noise variance estimated by
/// a plain (unconstrained) GPR fit.
double estimate_sigma_r2(const Dataset& dataset, const TrainConfig& config = {});

namespace detail {
/// Cholesky with the escalating jitter ladder; returns the factor and the jitter
/// that succeeded. K0 must carry noise but no jitter.
struct LadderChol {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
};
LadderChol cholesky_with_ladder(const Eigen::MatrixXd& K0);

/// Deterministic per-dimension restart scale: inverse squared median pairwise distance.
Eigen::VectorXd median_pairwise_scale(const Eigen::MatrixXd& X);
}  // namespace detail

}  // namespace gprc

#endif  // GPRC_GPR_HPP
