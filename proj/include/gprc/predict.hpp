#ifndef GPRC_PREDICT_HPP
#define GPRC_PREDICT_HPP
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gprc/gpr.hpp"
#include "gprc/operators.hpp"

namespace gprc {

/// Equally spaced residual-constraint grid around a test point: per dimension,
/// `count` points spanning [x* - half_width, x* + half_width].
struct ExtendedSetConfig {
    Eigen::VectorXd half_width;  // > 0, input units
    std::vector<int> count;      // >= 1 per dimension

    int dim() const { return static_cast<int>(half_width.size()); }
    int total_count() const;
    void validate() const;
};

struct PosteriorGaussian {
    double mean = 0.0;
    double variance = 0.0;
};

/// Known state or derivative value at an initial/boundary point.
struct IcbcAnchor {
    Eigen::VectorXd x0;
    double value = 0.0;
};

struct DomainBox {
    Eigen::VectorXd lo, hi;
    bool contains(const Eigen::VectorXd& x) const {
        for (Eigen::Index d = 0; d < lo.size(); ++d) {
            if (x[d] < lo[d] || x[d] > hi[d]) return false;
        }
        return true;
    }
};

/// Builds the extended set around x*. With a domain box, points outside are
/// discarded (never below one point: x* itself is kept when everything else
/// falls outside). x* outside the box is an error.
Eigen::MatrixXd build_extended_set(const Eigen::VectorXd& x_star, const ExtendedSetConfig& cfg,
                                   const std::optional<DomainBox>& domain = std::nullopt);

/// Posterior of d^target u at x*, conditioning on the training observations and
/// zero/rhs-valued residual observations at the extended-set points. Models
/// without a constraint ignore the extended set (plain GPR conditioning).
PosteriorGaussian posterior(const TrainedModel& model, const DerivativeTarget& target,
                            const Eigen::VectorXd& x_star, const Eigen::MatrixXd& extset);

/// Product-of-experts fusion with an IC/BC expert centered on the anchor value,
/// variance exp(||x* - x0||^2_gl) - 1 floored at 1e-8.
PosteriorGaussian poe_correct(const PosteriorGaussian& base, const IcbcAnchor& anchor,
                              const Eigen::VectorXd& x_star, const KernelHyperparams& hp);

/// Anchors for one derivative target; the correction applies only to targets with
/// a matching anchor set, using the nearest anchor (ties to the lowest index).
struct AnchorSet {
    DerivativeTarget target;
    std::vector<IcbcAnchor> anchors;
};

struct PredictOptions {
    /// Reuse K-hat factorizations between grid points whose extended sets coincide.
    bool cache_factorizations = false;
};

struct FieldPrediction {
    /// per_target[t][g]: posterior for targets[t] at grid row g.
    std::vector<std::vector<PosteriorGaussian>> per_target;
};

FieldPrediction predict_field(const TrainedModel& model, const std::vector<DerivativeTarget>& targets,
                              const Eigen::MatrixXd& grid,
                              const std::optional<ExtendedSetConfig>& extcfg,
                              const std::vector<AnchorSet>& anchors = {},
                              const std::optional<DomainBox>& domain = std::nullopt,
                              const PredictOptions& options = {});

/// CSV export: columns x_1..x_D, target, mean, variance (point-major row order).
void write_field_csv(const std::string& path, const Eigen::MatrixXd& grid,
                     const std::vector<DerivativeTarget>& targets, const FieldPrediction& field);

}  // namespace gprc

#endif  // GPRC_PREDICT_HPP
