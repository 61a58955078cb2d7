#ifndef GPRC_PICARD_HPP
#define GPRC_PICARD_HPP
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gprc/gpr.hpp"
#include "gprc/predict.hpp"

namespace gprc {

/// Nonlinear equation together with its chosen linearization split. `linearize`
/// receives the current state estimate u0 and must return an equation that is
/// linear in u (e.g. the nonlinear coefficient evaluated on u0). `true_residual`
/// evaluates the original nonlinear residual from the values of
/// `residual_targets` at a point, in that order.
struct NonlinearProblem {
    int dim = 1;
    std::function<AffineConstraint(std::function<double(const Eigen::VectorXd&)> u0)> linearize;
    std::function<double(const Eigen::VectorXd& x, const std::vector<double>& values)> true_residual;
    std::vector<DerivativeTarget> residual_targets;
};

struct PicardConfig {
    int max_iters = 3;       // constrained iterations after the plain-GPR start
    double rmse_tol = 1e-4;  // stop when the RMSE improvement falls below this
    Eigen::MatrixXd eval_grid;
    std::optional<DomainBox> domain;
};

struct PicardIterationRecord {
    int iteration = 0;  // 0 is the plain-GPR start
    double nlml = 0.0;
    double residual_rmse = 0.0;
};

/// Training failed mid-iteration; carries the history accumulated so far.
class PicardError : public std::runtime_error {
public:
    PicardError(const std::string& what, std::vector<PicardIterationRecord> history)
        : std::runtime_error(what), history_(std::move(history)) {}
    const std::vector<PicardIterationRecord>& history() const { return history_; }

private:
    std::vector<PicardIterationRecord> history_;
};

struct PicardResult {
    TrainedModel model;  // iterate with the lowest recorded true-residual RMSE
    int best_iteration = 0;
    double best_rmse = 0.0;
    std::vector<PicardIterationRecord> history;
    std::vector<TrainedModel> iterates;  // one per history entry

    const TrainedModel& final_iterate() const { return iterates.back(); }
};

/// Iterative linearization: iteration 0 fits plain GPR to obtain u0, then each
/// iteration trains a constrained model on linearize(current mean) and scores the
/// true nonlinear residual on the evaluation grid.
PicardResult picard_solve(const Dataset& dataset, const NonlinearProblem& problem,
                          const ExtendedSetConfig& extcfg, const NoiseConfig& noise,
                          const PicardConfig& cfg, const TrainConfig& traincfg = {});

/// Lazily evaluated, per-point-cached posterior mean of a trained model; used as
/// the u0 coefficient field of the next linearization.
std::function<double(const Eigen::VectorXd&)> posterior_mean_field(
    std::shared_ptr<const TrainedModel> model, std::optional<ExtendedSetConfig> extcfg,
    std::optional<DomainBox> domain = std::nullopt);

/// CSV export: iteration, nlml, true-residual RMSE.
void write_picard_history_csv(const std::string& path,
                              const std::vector<PicardIterationRecord>& history);

/// Replaces non-serializable coefficient/rhs fields with grid-interpolated
/// snapshots on n points over [lo, hi], so linearized models can be persisted.
/// 1D operators only.
AffineConstraint bake_constraint_grid1d(const AffineConstraint& constraint, double lo, double hi,
                                        int n);

}  // namespace gprc

#endif  // GPRC_PICARD_HPP
