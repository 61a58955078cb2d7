#include "gprc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "gprc/csv.hpp"
#include "gprc/rng.hpp"

namespace gprc {

namespace {

std::vector<DerivativeTarget> prediction_targets(const Scenario& scenario,
                                                 const ResidualEvaluator& residual) {
    std::vector<DerivativeTarget> targets = scenario.report_targets;
    for (const auto& t : residual.targets) {
        if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    return targets;
}

}  // namespace

double RmseReport::rmse_of(const std::string& label) const {
    for (const auto& [l, v] : target_rmse) {
        if (l == label) return v;
    }
    throw std::invalid_argument("RmseReport: no target '" + label + "'");
}

Dataset sample_observations(const Scenario& scenario, double noise_var, int n_obs,
                            std::uint64_t seed) {
    Dataset ds;
    ds.X = scenario.sample_plan(n_obs);
    ds.y.resize(ds.X.rows());
    Rng rng(seed);
    const double sd = std::sqrt(noise_var);
    const MultiIndex state = MultiIndex::zero(scenario.dim);
    for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
        ds.y[i] = scenario.truth(ds.X.row(i).transpose(), state) + sd * rng.normal();
    }
    return ds;
}

TrainedModel fit_method(const Scenario& scenario, const Dataset& data, const MethodSpec& method,
                        double sigma_r2, std::uint64_t seed, const TrainConfig& base) {
    NoiseConfig noise;
    noise.sigma_u2_trainable = true;
    noise.sigma_r2 = sigma_r2;
    TrainConfig tc = base;
    tc.seed = seed;

    if (method.kind == MethodSpec::Kind::Gpr) {
        return train(data, std::nullopt, noise, tc);
    }
    if (std::holds_alternative<AffineConstraint>(scenario.problem)) {
        return train(data, std::get<AffineConstraint>(scenario.problem), noise, tc);
    }
    PicardConfig pcfg;
    pcfg.max_iters = scenario.picard_iters;
    pcfg.rmse_tol = 0.0;
    pcfg.eval_grid = scenario.eval_grid;
    const PicardResult res = picard_solve(data, std::get<NonlinearProblem>(scenario.problem),
                                          scenario.extcfg, noise, pcfg, tc);
    return res.model;
}

std::vector<RmseReport> run_scenario(const Scenario& scenario,
                                     const std::vector<MethodSpec>& methods, std::uint64_t seed,
                                     const TrainConfig& base) {
    const Dataset data =
        sample_observations(scenario, scenario.noise_var, scenario.n_obs, derive_seed(seed, "noise"));
    const ResidualEvaluator residual = residual_of(scenario.problem);
    const std::vector<DerivativeTarget> targets = prediction_targets(scenario, residual);

    // truth values per report target on the evaluation grid
    std::vector<Eigen::VectorXd> truth(scenario.report_targets.size());
    for (size_t t = 0; t < scenario.report_targets.size(); ++t) {
        truth[t].resize(scenario.eval_grid.rows());
        for (Eigen::Index g = 0; g < scenario.eval_grid.rows(); ++g) {
            truth[t][g] = scenario.truth(scenario.eval_grid.row(g).transpose(),
                                         scenario.report_targets[t].derivative);
        }
    }
    std::vector<double> truth_concat;
    for (const auto& tv : truth) truth_concat.insert(truth_concat.end(), tv.data(), tv.data() + tv.size());
    const std::uint64_t grid_hash = csv::hash_doubles(scenario.eval_grid.data(),
                                                      static_cast<size_t>(scenario.eval_grid.size()));
    const std::uint64_t truth_hash = csv::hash_doubles(truth_concat.data(), truth_concat.size());

    std::vector<RmseReport> reports;
    for (const auto& method : methods) {
        const bool gprc = method.kind == MethodSpec::Kind::Gprc;
        const double sigma_r2 = method.sigma_r2.value_or(scenario.sigma_r2);
        const TrainedModel model =
            fit_method(scenario, data, method, sigma_r2, derive_seed(seed, method.label()), base);

        const std::optional<ExtendedSetConfig> ext =
            gprc ? std::optional<ExtendedSetConfig>(scenario.extcfg) : std::nullopt;
        const std::vector<AnchorSet> anchors =
            (gprc && method.use_anchors) ? scenario.anchors : std::vector<AnchorSet>{};
        const FieldPrediction field = predict_field(model, targets, scenario.eval_grid, ext, anchors);

        RmseReport rep;
        rep.scenario = scenario.name;
        rep.method = method.label();
        rep.seed = seed;
        rep.noise_var = scenario.noise_var;
        rep.sigma_r2 = gprc ? sigma_r2 : 0.0;
        rep.grid_hash = grid_hash;
        rep.truth_hash = truth_hash;

        for (size_t t = 0; t < scenario.report_targets.size(); ++t) {
            double acc = 0.0;
            for (Eigen::Index g = 0; g < scenario.eval_grid.rows(); ++g) {
                const double e = field.per_target[t][static_cast<size_t>(g)].mean - truth[t][g];
                acc += e * e;
            }
            rep.target_rmse.emplace_back(scenario.report_targets[t].derivative.label(),
                                         std::sqrt(acc / static_cast<double>(scenario.eval_grid.rows())));
        }

        std::vector<size_t> slot(residual.targets.size());
        for (size_t t = 0; t < residual.targets.size(); ++t) {
            slot[t] = static_cast<size_t>(
                std::find(targets.begin(), targets.end(), residual.targets[t]) - targets.begin());
        }
        double acc = 0.0;
        std::vector<double> values(residual.targets.size());
        for (Eigen::Index g = 0; g < scenario.eval_grid.rows(); ++g) {
            for (size_t t = 0; t < values.size(); ++t) {
                values[t] = field.per_target[slot[t]][static_cast<size_t>(g)].mean;
            }
            const double r = residual.eval(scenario.eval_grid.row(g).transpose(), values);
            acc += r * r;
        }
        rep.residual_rmse = std::sqrt(acc / static_cast<double>(scenario.eval_grid.rows()));
        reports.push_back(std::move(rep));
    }
    return reports;
}

SweepAxis sweep_axis_from_string(const std::string& name) {
    if (name == "step") return SweepAxis::Step;
    if (name == "width") return SweepAxis::Width;
    if (name == "sigma_r2") return SweepAxis::SigmaR2;
    if (name == "n_obs") return SweepAxis::NObs;
    throw std::invalid_argument("unknown sweep axis '" + name + "'; use step|width|sigma_r2|n_obs");
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::Step: return "step";
        case SweepAxis::Width: return "width";
        case SweepAxis::SigmaR2: return "sigma_r2";
        case SweepAxis::NObs: return "n_obs";
    }
    return "?";
}

std::vector<SweepRow> sweep(const Scenario& scenario, SweepAxis axis,
                            const std::vector<double>& values, const MethodSpec& method,
                            std::uint64_t seed, const TrainConfig& base) {
    if ((axis == SweepAxis::Step || axis == SweepAxis::Width) && scenario.dim != 1) {
        throw std::invalid_argument("sweep: step/width axes apply to 1D scenarios");
    }
    std::vector<SweepRow> rows;
    for (double value : values) {
        Scenario sc = scenario;
        MethodSpec ms = method;
        switch (axis) {
            case SweepAxis::Step: {
                const double w = sc.extcfg.half_width[0];
                sc.extcfg.count[0] = std::max(1, static_cast<int>(std::lround(2.0 * w / value)) + 1);
                break;
            }
            case SweepAxis::Width: {
                const double step = sc.extcfg.count[0] > 1
                                        ? 2.0 * sc.extcfg.half_width[0] / (sc.extcfg.count[0] - 1)
                                        : 2.0 * sc.extcfg.half_width[0];
                sc.extcfg.half_width[0] = value;
                sc.extcfg.count[0] = std::max(1, static_cast<int>(std::lround(2.0 * value / step)) + 1);
                break;
            }
            case SweepAxis::SigmaR2:
                sc.sigma_r2 = value;
                ms.sigma_r2 = value;
                break;
            case SweepAxis::NObs:
                sc.n_obs = static_cast<int>(std::lround(value));
                break;
        }
        auto reports = run_scenario(sc, {ms}, seed, base);
        rows.push_back(SweepRow{value, std::move(reports.front())});
    }
    return rows;
}

void write_reports_csv(const std::string& path, const std::vector<RmseReport>& reports) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_reports_csv: cannot write '" + path + "'");
    out << "scenario,method,seed,noise_var,sigma_r2,quantity,rmse\n";
    for (const auto& r : reports) {
        for (const auto& [label, rmse] : r.target_rmse) {
            out << r.scenario << "," << r.method << "," << r.seed << ","
                << csv::format_double(r.noise_var) << "," << csv::format_double(r.sigma_r2) << ","
                << label << "," << csv::format_double(rmse) << "\n";
        }
        out << r.scenario << "," << r.method << "," << r.seed << ","
            << csv::format_double(r.noise_var) << "," << csv::format_double(r.sigma_r2)
            << ",residual," << csv::format_double(r.residual_rmse) << "\n";
    }
}

void write_sweep_csv(const std::string& path, SweepAxis axis, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_sweep_csv: cannot write '" + path + "'");
    out << "axis,value,quantity,rmse\n";
    const std::string axis_name = to_string(axis);
    for (const auto& row : rows) {
        for (const auto& [label, rmse] : row.report.target_rmse) {
            out << axis_name << "," << csv::format_double(row.value) << "," << label << ","
                << csv::format_double(rmse) << "\n";
        }
        out << axis_name << "," << csv::format_double(row.value) << ",residual,"
            << csv::format_double(row.report.residual_rmse) << "\n";
    }
}

nlohmann::json manifest_json(const Scenario& scenario, const std::vector<RmseReport>& reports,
                             std::uint64_t seed) {
    nlohmann::json j;
    j["scenario"] = scenario.name;
    j["seed"] = seed;
    j["n_obs"] = scenario.n_obs;
    j["noise_var"] = scenario.noise_var;
    j["sigma_r2_default"] = scenario.sigma_r2;
    j["extended_set"] = {{"half_width", std::vector<double>(scenario.extcfg.half_width.data(),
                                                            scenario.extcfg.half_width.data() +
                                                                scenario.extcfg.dim())},
                         {"count", scenario.extcfg.count}};
    j["reports"] = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json rj;
        rj["method"] = r.method;
        rj["seed"] = r.seed;
        rj["sigma_r2"] = r.sigma_r2;
        for (const auto& [label, rmse] : r.target_rmse) rj["rmse"][label] = rmse;
        rj["rmse"]["residual"] = r.residual_rmse;
        rj["grid_hash"] = r.grid_hash;
        rj["truth_hash"] = r.truth_hash;
        j["reports"].push_back(rj);
    }
    return j;
}

}  // namespace gprc
