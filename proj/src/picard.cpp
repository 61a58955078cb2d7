#include "gprc/picard.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "gprc/csv.hpp"
#include "gprc/rng.hpp"

namespace gprc {

namespace {

double residual_rmse_of(const TrainedModel& model, const NonlinearProblem& problem,
                        const ExtendedSetConfig& extcfg, const PicardConfig& cfg) {
    const std::optional<ExtendedSetConfig> ext =
        model.constraint ? std::optional<ExtendedSetConfig>(extcfg) : std::nullopt;
    const FieldPrediction field =
        predict_field(model, problem.residual_targets, cfg.eval_grid, ext, {}, cfg.domain);
    double acc = 0.0;
    std::vector<double> values(problem.residual_targets.size());
    for (Eigen::Index g = 0; g < cfg.eval_grid.rows(); ++g) {
        for (size_t t = 0; t < values.size(); ++t) {
            values[t] = field.per_target[t][static_cast<size_t>(g)].mean;
        }
        const double r = problem.true_residual(cfg.eval_grid.row(g).transpose(), values);
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(cfg.eval_grid.rows()));
}

}  // namespace

std::function<double(const Eigen::VectorXd&)> posterior_mean_field(
    std::shared_ptr<const TrainedModel> model, std::optional<ExtendedSetConfig> extcfg,
    std::optional<DomainBox> domain) {
    auto cache = std::make_shared<std::map<std::vector<double>, double>>();
    const DerivativeTarget state = DerivativeTarget::state(model->dim());
    return [model, extcfg, domain, cache, state](const Eigen::VectorXd& x) {
        std::vector<double> key(x.data(), x.data() + x.size());
        if (const auto it = cache->find(key); it != cache->end()) return it->second;
        Eigen::MatrixXd extset(0, model->dim());
        if (extcfg && model->constraint) extset = build_extended_set(x, *extcfg, domain);
        const double mean = posterior(*model, state, x, extset).mean;
        (*cache)[key] = mean;
        return mean;
    };
}

PicardResult picard_solve(const Dataset& dataset, const NonlinearProblem& problem,
                          const ExtendedSetConfig& extcfg, const NoiseConfig& noise,
                          const PicardConfig& cfg, const TrainConfig& traincfg) {
    dataset.validate();
    if (cfg.eval_grid.rows() == 0) {
        throw std::invalid_argument("picard_solve: evaluation grid must be nonempty");
    }
    if (cfg.max_iters < 1) throw std::invalid_argument("picard_solve: max_iters must be >= 1");

    PicardResult result;

    TrainConfig tc0 = traincfg;
    tc0.seed = derive_seed(traincfg.seed, "picard-iter-0");
    TrainedModel current;
    try {
        current = train(dataset, std::nullopt, noise, tc0);
    } catch (const std::exception& e) {
        throw PicardError(std::string("picard_solve: plain-GPR start failed: ") + e.what(), {});
    }
    double rmse = residual_rmse_of(current, problem, extcfg, cfg);
    result.history.push_back({0, current.nlml_value, rmse});
    result.iterates.push_back(current);
    result.best_iteration = 0;
    result.best_rmse = rmse;

    auto u0 = posterior_mean_field(std::make_shared<TrainedModel>(current), extcfg, cfg.domain);

    for (int k = 1; k <= cfg.max_iters; ++k) {
        const AffineConstraint constraint = problem.linearize(u0);
        TrainConfig tck = traincfg;
        tck.seed = derive_seed(traincfg.seed, "picard-iter-" + std::to_string(k));
        tck.extra_inits.push_back(TrainInit{current.hp, current.noise.sigma_u2});

        try {
            current = train(dataset, constraint, noise, tck);
        } catch (const std::exception& e) {
            throw PicardError("picard_solve: training failed at iteration " + std::to_string(k) +
                                  ": " + e.what(),
                              result.history);
        }
        rmse = residual_rmse_of(current, problem, extcfg, cfg);
        result.history.push_back({k, current.nlml_value, rmse});
        result.iterates.push_back(current);
        if (rmse < result.best_rmse) {
            result.best_rmse = rmse;
            result.best_iteration = k;
        }

        const double improvement =
            result.history[result.history.size() - 2].residual_rmse - rmse;
        if (improvement < cfg.rmse_tol) break;

        u0 = posterior_mean_field(std::make_shared<TrainedModel>(current), extcfg, cfg.domain);
    }

    result.model = result.iterates[static_cast<size_t>(result.best_iteration)];
    return result;
}

AffineConstraint bake_constraint_grid1d(const AffineConstraint& constraint, double lo, double hi,
                                        int n) {
    if (constraint.dim() != 1) {
        throw std::invalid_argument("bake_constraint_grid1d: 1D operators only");
    }
    if (n < 2) throw std::invalid_argument("bake_constraint_grid1d: need at least 2 grid points");
    auto bake = [&](const ScalarField& field) {
        if (field.serializable()) return field;
        std::vector<double> xs(static_cast<size_t>(n)), vs(static_cast<size_t>(n));
        Eigen::VectorXd x(1);
        for (int i = 0; i < n; ++i) {
            xs[static_cast<size_t>(i)] = lo + (hi - lo) * i / (n - 1);
            x[0] = xs[static_cast<size_t>(i)];
            vs[static_cast<size_t>(i)] = field(x);
        }
        return ScalarField::grid1d(std::move(xs), std::move(vs));
    };
    std::vector<OperatorTerm> terms;
    for (const auto& t : constraint.op.terms()) {
        terms.push_back(OperatorTerm{bake(t.coeff), t.derivative});
    }
    return AffineConstraint{LinearOperator(std::move(terms)), bake(constraint.rhs)};
}

void write_picard_history_csv(const std::string& path,
                              const std::vector<PicardIterationRecord>& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_picard_history_csv: cannot write '" + path + "'");
    out << "iteration,nlml,residual_rmse\n";
    for (const auto& rec : history) {
        out << rec.iteration << "," << csv::format_double(rec.nlml) << ","
            << csv::format_double(rec.residual_rmse) << "\n";
    }
}

}  // namespace gprc
