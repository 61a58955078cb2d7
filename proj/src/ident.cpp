#include "gprc/ident.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "gprc/csv.hpp"
#include "gprc/errors.hpp"
#include "gprc/rng.hpp"

namespace gprc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<DerivativeTarget> operator_targets(const AffineConstraint& constraint) {
    std::vector<DerivativeTarget> targets;
    for (const auto& term : constraint.op.terms()) {
        DerivativeTarget t(term.derivative);
        if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    return targets;
}

Eigen::VectorXd means_of(const TrainedModel& model, const DerivativeTarget& target,
                         const Eigen::MatrixXd& points,
                         const std::optional<ExtendedSetConfig>& extcfg,
                         const std::optional<DomainBox>& domain) {
    const FieldPrediction f = predict_field(model, {target}, points, extcfg, {}, domain);
    Eigen::VectorXd out(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        out[i] = f.per_target[0][static_cast<size_t>(i)].mean;
    }
    return out;
}

double mean_sq(const Eigen::VectorXd& v) { return v.squaredNorm() / static_cast<double>(v.size()); }

double residual_term(const ResidualEvaluator& residual,
                     const std::vector<Eigen::VectorXd>& target_means,
                     const Eigen::MatrixXd& points) {
    double acc = 0.0;
    std::vector<double> values(residual.targets.size());
    for (Eigen::Index j = 0; j < points.rows(); ++j) {
        for (size_t t = 0; t < values.size(); ++t) values[t] = target_means[t][j];
        const double r = residual.eval(points.row(j).transpose(), values);
        acc += r * r;
    }
    return acc / static_cast<double>(points.rows());
}

}  // namespace

ResidualEvaluator residual_of(const MuProblem& problem) {
    if (std::holds_alternative<NonlinearProblem>(problem)) {
        const auto& p = std::get<NonlinearProblem>(problem);
        return ResidualEvaluator{p.residual_targets, p.true_residual};
    }
    const auto& constraint = std::get<AffineConstraint>(problem);
    ResidualEvaluator out;
    out.targets = operator_targets(constraint);
    // r(x) = sum_i c_i(x) v_{target(i)} - f(x), matching duplicate multi-indices by position
    std::vector<size_t> slot;
    for (const auto& term : constraint.op.terms()) {
        const DerivativeTarget t(term.derivative);
        slot.push_back(static_cast<size_t>(
            std::find(out.targets.begin(), out.targets.end(), t) - out.targets.begin()));
    }
    const auto terms = constraint.op.terms();
    const auto rhs = constraint.rhs;
    out.eval = [terms, rhs, slot](const Eigen::VectorXd& x, const std::vector<double>& values) {
        double r = -rhs(x);
        for (size_t i = 0; i < terms.size(); ++i) r += terms[i].coeff(x) * values[slot[i]];
        return r;
    };
    return out;
}

void ParamScenario::validate() const {
    if (param_grid.empty()) throw std::invalid_argument("ParamScenario: empty parameter grid");
    for (size_t i = 1; i < param_grid.size(); ++i) {
        if (!(param_grid[i] > param_grid[i - 1])) {
            throw std::invalid_argument("ParamScenario: grid must be strictly increasing");
        }
    }
    if (design_points.rows() == 0) {
        throw std::invalid_argument("ParamScenario: design points must be nonempty");
    }
}

GprBaselineCache::GprBaselineCache(const Dataset& dataset, const Eigen::MatrixXd& design_points,
                                   const IdentConfig& config)
    : design_points_(design_points) {
    model_ = train(dataset, std::nullopt, config.noise, config.train);
    const Eigen::VectorXd fit =
        means_of(model_, DerivativeTarget::state(dataset.dim()), dataset.X, std::nullopt, std::nullopt);
    data_fit_term_ = mean_sq(dataset.y - fit);
}

const Eigen::VectorXd& GprBaselineCache::design_means(const DerivativeTarget& target) const {
    for (const auto& [t, v] : memo_) {
        if (t == target) return v;
    }
    memo_.emplace_back(target,
                       means_of(model_, target, design_points_, std::nullopt, std::nullopt));
    return memo_.back().second;
}

double loss_at(double mu, const Dataset& dataset, const ParamScenario& scenario, IdentMode mode,
               const IdentConfig& config, const GprBaselineCache* cache) {
    scenario.validate();
    const MuProblem problem = scenario.problem_of(mu);
    const ResidualEvaluator residual = residual_of(problem);

    try {
        if (mode == IdentMode::GprBaseline) {
            std::optional<GprBaselineCache> local;
            if (!cache) {
                local.emplace(dataset, scenario.design_points, config);
                cache = &*local;
            }
            std::vector<Eigen::VectorXd> means;
            means.reserve(residual.targets.size());
            for (const auto& t : residual.targets) means.push_back(cache->design_means(t));
            return cache->data_fit_term() +
                   config.residual_weight * residual_term(residual, means, scenario.design_points);
        }

        // GPRC mode: full constrained (or Picard-linearized) fit under this mu.
        TrainedModel model;
        if (std::holds_alternative<AffineConstraint>(problem)) {
            model = train(dataset, std::get<AffineConstraint>(problem), config.noise, config.train);
        } else {
            PicardConfig pcfg;
            pcfg.max_iters = scenario.picard_iters;
            pcfg.rmse_tol = 0.0;
            pcfg.eval_grid = scenario.design_points;
            pcfg.domain = config.domain;
            const PicardResult res = picard_solve(dataset, std::get<NonlinearProblem>(problem),
                                                  config.extcfg, config.noise, pcfg, config.train);
            model = res.final_iterate();
        }

        const std::optional<ExtendedSetConfig> ext(config.extcfg);
        const Eigen::VectorXd fit =
            means_of(model, DerivativeTarget::state(dataset.dim()), dataset.X, ext, config.domain);
        std::vector<Eigen::VectorXd> means;
        means.reserve(residual.targets.size());
        for (const auto& t : residual.targets) {
            means.push_back(means_of(model, t, scenario.design_points, ext, config.domain));
        }
        return mean_sq(dataset.y - fit) +
               config.residual_weight * residual_term(residual, means, scenario.design_points);
    } catch (const std::exception& e) {
        detail::warn("loss_at(mu=" + std::to_string(mu) + ") failed: " + e.what());
        return kInf;
    }
}

LossCurve identify(const Dataset& dataset, const ParamScenario& scenario, IdentMode mode,
                   const IdentConfig& config) {
    scenario.validate();
    const size_t G = scenario.param_grid.size();

    std::optional<GprBaselineCache> cache;
    if (mode == IdentMode::GprBaseline) {
        cache.emplace(dataset, scenario.design_points, config);
    }

    LossCurve curve;
    curve.mu.resize(static_cast<Eigen::Index>(G));
    curve.loss.resize(static_cast<Eigen::Index>(G));
    size_t best = 0;
    bool any_finite = false;
    for (size_t i = 0; i < G; ++i) {
        curve.mu[static_cast<Eigen::Index>(i)] = scenario.param_grid[i];
        const double L = loss_at(scenario.param_grid[i], dataset, scenario, mode, config,
                                 cache ? &*cache : nullptr);
        curve.loss[static_cast<Eigen::Index>(i)] = L;
        if (std::isfinite(L) && (!any_finite || L < curve.loss[static_cast<Eigen::Index>(best)])) {
            best = i;
            any_finite = true;
        }
    }
    if (!any_finite) {
        throw std::runtime_error("identify: loss was infinite on the whole parameter grid");
    }
    curve.argmin_mu = scenario.param_grid[best];

    if (config.refine && best > 0 && best + 1 < G) {
        const double x0 = curve.mu[static_cast<Eigen::Index>(best - 1)];
        const double x1 = curve.mu[static_cast<Eigen::Index>(best)];
        const double x2 = curve.mu[static_cast<Eigen::Index>(best + 1)];
        const double f0 = curve.loss[static_cast<Eigen::Index>(best - 1)];
        const double f1 = curve.loss[static_cast<Eigen::Index>(best)];
        const double f2 = curve.loss[static_cast<Eigen::Index>(best + 1)];
        const double denom = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0);
        if (std::isfinite(denom) && denom != 0.0) {
            const double num =
                (x1 - x0) * (x1 - x0) * (f1 - f2) - (x1 - x2) * (x1 - x2) * (f1 - f0);
            double vertex = x1 - 0.5 * num / denom;
            vertex = std::min(std::max(vertex, x0), x2);
            curve.refined_mu = vertex;
        }
    }
    return curve;
}

void LossCurve::to_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("LossCurve: cannot write '" + path + "'");
    out << "mu,loss\n";
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        out << csv::format_double(mu[i]) << "," << csv::format_double(loss[i]) << "\n";
    }
}

nlohmann::json LossCurve::report(IdentMode mode, std::uint64_t seed, double runtime_seconds) const {
    nlohmann::json j;
    j["argmin_mu"] = argmin_mu;
    if (refined_mu) j["refined_mu"] = *refined_mu;
    j["mode"] = mode == IdentMode::Gprc ? "gprc" : "gpr-baseline";
    j["grid"] = std::vector<double>(mu.data(), mu.data() + mu.size());
    j["loss"] = std::vector<double>(loss.data(), loss.data() + loss.size());
    j["seed"] = seed;
    j["runtime_seconds"] = runtime_seconds;
    return j;
}

}  // namespace gprc
