// Command-line front end: fit/predict on CSV data plus the built-in experiment
// scenarios with seeded, reproducible RMSE reports.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "gprc/csv.hpp"
#include "gprc/errors.hpp"
#include "gprc/harness.hpp"
#include "gprc/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<gprc::DerivativeTarget> parse_targets(const std::string& spec) {
    std::vector<gprc::DerivativeTarget> targets;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ';')) {
        std::vector<int> orders;
        std::stringstream cs(item);
        std::string cell;
        while (std::getline(cs, cell, ',')) orders.push_back(std::stoi(cell));
        targets.emplace_back(gprc::MultiIndex(orders));
    }
    if (targets.empty()) throw CLI::ValidationError("--targets", "no targets parsed");
    return targets;
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    json j;
    in >> j;
    return j;
}

void save_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

// Scenario/training overrides shared by the scenario-driven subcommands.
struct Overrides {
    std::optional<double> noise_var, sigma_r2;
    std::optional<int> n_obs, picard_iters, restarts, max_iterations;

    void apply(gprc::Scenario& s, gprc::TrainConfig& tc) const {
        if (noise_var) s.noise_var = *noise_var;
        if (sigma_r2) s.sigma_r2 = *sigma_r2;
        if (n_obs) s.n_obs = *n_obs;
        if (picard_iters) s.picard_iters = *picard_iters;
        if (restarts) tc.restarts = *restarts;
        if (max_iterations) tc.lbfgs.max_iterations = *max_iterations;
    }

    static Overrides from_json(const json& j) {
        Overrides o;
        if (j.contains("noise_var")) o.noise_var = j["noise_var"].get<double>();
        if (j.contains("sigma_r2")) o.sigma_r2 = j["sigma_r2"].get<double>();
        if (j.contains("n_obs")) o.n_obs = j["n_obs"].get<int>();
        if (j.contains("picard_iters")) o.picard_iters = j["picard_iters"].get<int>();
        if (j.contains("restarts")) o.restarts = j["restarts"].get<int>();
        if (j.contains("max_iterations")) o.max_iterations = j["max_iterations"].get<int>();
        return o;
    }
};

Eigen::MatrixXd grid_from_csv(const std::string& path) { return gprc::csv::read(path).values; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gprc: joint estimation of functions and derivatives from data and a differential equation"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    bool quiet = false;
    app.add_option("--seed", seed, "base seed for all randomness")->capture_default_str();
    app.add_flag("--quiet", quiet, "suppress warnings");

    // ---- fit ----
    auto* fit = app.add_subcommand("fit", "train a model from a dataset CSV and an operator JSON");
    std::string fit_data, fit_operator, fit_out = "model.json";
    std::optional<double> fit_sigma_r2, fit_fixed_noise;
    int fit_restarts = 8;
    fit->add_option("--data", fit_data, "dataset CSV (x1..xD columns then y, header required)")
        ->required();
    fit->add_option("--operator", fit_operator, "operator JSON; omit for plain GPR");
    fit->add_option("--out", fit_out, "output model JSON")->capture_default_str();
    fit->add_option("--sigma-r2", fit_sigma_r2,
                    "residual slack variance (default: 10x the plain-GPR noise estimate)");
    fit->add_option("--fix-noise-var", fit_fixed_noise,
                    "fix the observation noise variance instead of optimizing it");
    fit->add_option("--restarts", fit_restarts, "optimizer restarts")->capture_default_str();

    // ---- predict ----
    auto* predict = app.add_subcommand("predict", "posterior means/variances on a grid CSV");
    std::string pr_model, pr_grid, pr_targets = "0", pr_out = "prediction.csv", pr_anchors;
    std::vector<double> pr_width;
    std::vector<int> pr_count;
    predict->add_option("--model", pr_model, "model JSON from fit")->required();
    predict->add_option("--grid", pr_grid, "grid CSV (header x1..xD)")->required();
    predict->add_option("--targets", pr_targets,
                        "';'-separated derivative multi-indices, e.g. \"0;1;2\" or \"0,0;1,1\"")
        ->capture_default_str();
    predict->add_option("--ext-width", pr_width, "extended-set half width per dimension");
    predict->add_option("--ext-count", pr_count, "extended-set points per dimension");
    predict->add_option("--anchors", pr_anchors,
                        "anchors JSON: [{orders, x0, value}, ...] for IC/BC correction");
    predict->add_option("--out", pr_out, "output CSV")->capture_default_str();

    // ---- picard ----
    auto* picard = app.add_subcommand("picard", "Picard-linearized fit of a nonlinear scenario");
    std::string pi_scenario = "vanderpol", pi_out = "picard-out";
    std::optional<double> pi_sigma_r2;
    int pi_iters = 0;
    std::string pi_config;
    picard->add_option("--scenario", pi_scenario, "scenario name")->capture_default_str();
    picard->add_option("--iters", pi_iters, "constrained iterations (default: scenario setting)");
    picard->add_option("--sigma-r2", pi_sigma_r2, "residual slack variance");
    picard->add_option("--config", pi_config, "overrides JSON");
    picard->add_option("--out", pi_out, "output directory")->capture_default_str();

    // ---- identify ----
    auto* identify = app.add_subcommand("identify", "parameter identification over a mu grid");
    std::string id_scenario = "vanderpol", id_mode = "gprc", id_out = "identify-out", id_config;
    int id_nobs = 40;
    bool id_refine = false;
    identify->add_option("--scenario", id_scenario, "scenario family (vanderpol)")
        ->capture_default_str();
    identify->add_option("--mode", id_mode, "gprc | gpr")->capture_default_str();
    identify->add_option("--n-obs", id_nobs, "number of observations")->capture_default_str();
    identify->add_flag("--refine", id_refine, "quadratic refinement around the grid argmin");
    identify->add_option("--config", id_config, "overrides JSON");
    identify->add_option("--out", id_out, "output directory")->capture_default_str();

    // ---- experiment ----
    auto* experiment = app.add_subcommand("experiment", "reproduce a scenario's method comparison");
    std::string ex_name, ex_out = "experiment-out", ex_config;
    experiment->add_option("name", ex_name, "linear-ode | poisson | vanderpol")->required();
    experiment->add_option("--config", ex_config, "overrides JSON");
    experiment->add_option("--out", ex_out, "output directory")->capture_default_str();

    // ---- sweep ----
    auto* sweep_cmd = app.add_subcommand("sweep", "rerun a scenario varying one axis");
    std::string sw_scenario = "linear-ode", sw_axis = "step", sw_values, sw_method = "gprc",
                sw_out = "sweep.csv", sw_config;
    sweep_cmd->add_option("--scenario", sw_scenario, "scenario name")->capture_default_str();
    sweep_cmd->add_option("--axis", sw_axis, "step | width | sigma_r2 | n_obs")->capture_default_str();
    sweep_cmd->add_option("--values", sw_values, "comma-separated axis values")->required();
    sweep_cmd->add_option("--method", sw_method, "gpr | gprc")->capture_default_str();
    sweep_cmd->add_option("--config", sw_config, "overrides JSON");
    sweep_cmd->add_option("--out", sw_out, "output CSV")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    gprc::detail::set_warnings_enabled(!quiet);

    try {
        if (*fit) {
            gprc::Dataset data = gprc::Dataset::from_csv(fit_data);
            std::optional<gprc::AffineConstraint> constraint;
            if (!fit_operator.empty()) {
                constraint = gprc::AffineConstraint::from_json(load_json(fit_operator));
            }
            gprc::TrainConfig tc;
            tc.seed = seed;
            tc.restarts = fit_restarts;
            gprc::NoiseConfig noise;
            if (fit_fixed_noise) {
                noise.sigma_u2 = *fit_fixed_noise;
                noise.sigma_u2_trainable = false;
            }
            if (constraint) {
                noise.sigma_r2 = fit_sigma_r2 ? *fit_sigma_r2 : gprc::estimate_sigma_r2(data, tc);
            }
            const gprc::TrainedModel model = gprc::train(data, constraint, noise, tc);
            save_json(fit_out, model.to_json());
            std::cout << "nlml " << model.nlml_value << "  gamma_alpha " << model.hp.gamma_alpha
                      << "  sigma_u2 " << model.noise.sigma_u2;
            if (constraint) std::cout << "  sigma_r2 " << model.noise.sigma_r2;
            std::cout << "\nmodel written to " << fit_out << "\n";
        } else if (*predict) {
            const gprc::TrainedModel model = gprc::TrainedModel::from_json(load_json(pr_model));
            const Eigen::MatrixXd grid = grid_from_csv(pr_grid);
            const auto targets = parse_targets(pr_targets);
            std::optional<gprc::ExtendedSetConfig> ext;
            if (!pr_width.empty() || !pr_count.empty()) {
                if (pr_width.size() != pr_count.size()) {
                    throw CLI::ValidationError("--ext-width/--ext-count", "size mismatch");
                }
                gprc::ExtendedSetConfig cfg;
                cfg.half_width =
                    Eigen::Map<const Eigen::VectorXd>(pr_width.data(), static_cast<long>(pr_width.size()));
                cfg.count = pr_count;
                ext = cfg;
            }
            std::vector<gprc::AnchorSet> anchors;
            if (!pr_anchors.empty()) {
                for (const auto& aj : load_json(pr_anchors)) {
                    gprc::DerivativeTarget t(gprc::MultiIndex(aj.at("orders").get<std::vector<int>>()));
                    const auto x0 = aj.at("x0").get<std::vector<double>>();
                    gprc::IcbcAnchor anchor{
                        Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<long>(x0.size())),
                        aj.at("value").get<double>()};
                    auto it = std::find_if(anchors.begin(), anchors.end(),
                                           [&](const auto& s) { return s.target == t; });
                    if (it == anchors.end()) {
                        anchors.push_back(gprc::AnchorSet{t, {anchor}});
                    } else {
                        it->anchors.push_back(anchor);
                    }
                }
            }
            const auto field = gprc::predict_field(model, targets, grid, ext, anchors);
            gprc::write_field_csv(pr_out, grid, targets, field);
            std::cout << "prediction written to " << pr_out << "\n";
        } else if (*picard) {
            gprc::Scenario sc = gprc::get_scenario(pi_scenario);
            if (!std::holds_alternative<gprc::NonlinearProblem>(sc.problem)) {
                throw std::runtime_error("picard: scenario '" + pi_scenario + "' is already linear");
            }
            gprc::TrainConfig tc;
            tc.seed = gprc::derive_seed(seed, "picard");
            if (!pi_config.empty()) Overrides::from_json(load_json(pi_config)).apply(sc, tc);
            if (pi_sigma_r2) sc.sigma_r2 = *pi_sigma_r2;
            if (pi_iters > 0) sc.picard_iters = pi_iters;

            const gprc::Dataset data = gprc::sample_observations(
                sc, sc.noise_var, sc.n_obs, gprc::derive_seed(seed, "noise"));
            gprc::NoiseConfig noise;
            noise.sigma_r2 = sc.sigma_r2;
            gprc::PicardConfig pcfg;
            pcfg.max_iters = sc.picard_iters;
            pcfg.rmse_tol = 0.0;
            pcfg.eval_grid = sc.eval_grid;
            const gprc::PicardResult res = gprc::picard_solve(
                data, std::get<gprc::NonlinearProblem>(sc.problem), sc.extcfg, noise, pcfg, tc);

            fs::create_directories(pi_out);
            gprc::write_picard_history_csv((fs::path(pi_out) / "history.csv").string(), res.history);
            gprc::TrainedModel to_save = res.model;
            if (to_save.constraint) {
                to_save.constraint = gprc::bake_constraint_grid1d(
                    *to_save.constraint, sc.domain.lo[0], sc.domain.hi[0], 400);
                to_save.rebuild();
            }
            save_json((fs::path(pi_out) / "model.json").string(), to_save.to_json());
            std::cout << "best iteration " << res.best_iteration << " with residual RMSE "
                      << res.best_rmse << "; outputs in " << pi_out << "\n";
        } else if (*identify) {
            if (id_scenario != "vanderpol") {
                throw std::runtime_error("identify: only the vanderpol family is built in");
            }
            gprc::Scenario sc = gprc::get_scenario("vanderpol");
            gprc::TrainConfig tc;
            tc.seed = gprc::derive_seed(seed, "identify");
            if (!id_config.empty()) Overrides::from_json(load_json(id_config)).apply(sc, tc);

            const gprc::Dataset data = gprc::sample_observations(
                sc, sc.noise_var, id_nobs, gprc::derive_seed(seed, "noise"));
            gprc::ParamScenario ps = gprc::make_vdp_param_scenario();
            ps.picard_iters = sc.picard_iters;
            gprc::IdentConfig cfg;
            cfg.extcfg = sc.extcfg;
            cfg.noise.sigma_r2 = sc.sigma_r2;
            cfg.train = tc;
            cfg.refine = id_refine;
            const gprc::IdentMode mode =
                id_mode == "gprc" ? gprc::IdentMode::Gprc : gprc::IdentMode::GprBaseline;

            const auto t0 = std::chrono::steady_clock::now();
            const gprc::LossCurve curve = gprc::identify(data, ps, mode, cfg);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

            fs::create_directories(id_out);
            curve.to_csv((fs::path(id_out) / "loss.csv").string());
            save_json((fs::path(id_out) / "report.json").string(), curve.report(mode, seed, secs));
            std::cout << "argmin mu " << curve.argmin_mu << " (" << secs << " s); outputs in "
                      << id_out << "\n";
        } else if (*experiment) {
            gprc::Scenario sc = gprc::get_scenario(ex_name);
            gprc::TrainConfig tc;
            if (!ex_config.empty()) Overrides::from_json(load_json(ex_config)).apply(sc, tc);

            std::vector<gprc::MethodSpec> methods;
            methods.push_back({gprc::MethodSpec::Kind::Gpr, std::nullopt, false});
            if (ex_name == "linear-ode") {
                for (double s2 : {1e-3, 1e-1, 1e2}) {
                    methods.push_back({gprc::MethodSpec::Kind::Gprc, s2, true});
                }
            } else {
                methods.push_back({gprc::MethodSpec::Kind::Gprc, sc.sigma_r2, true});
            }

            const auto reports = gprc::run_scenario(sc, methods, seed, tc);
            fs::create_directories(ex_out);
            gprc::write_reports_csv((fs::path(ex_out) / "reports.csv").string(), reports);
            save_json((fs::path(ex_out) / "manifest.json").string(),
                      gprc::manifest_json(sc, reports, seed));
            for (const auto& r : reports) {
                std::cout << r.method << ":";
                for (const auto& [label, rmse] : r.target_rmse) std::cout << "  " << label << " " << rmse;
                std::cout << "  residual " << r.residual_rmse << "\n";
            }
            std::cout << "outputs in " << ex_out << "\n";
        } else if (*sweep_cmd) {
            gprc::Scenario sc = gprc::get_scenario(sw_scenario);
            gprc::TrainConfig tc;
            if (!sw_config.empty()) Overrides::from_json(load_json(sw_config)).apply(sc, tc);
            std::vector<double> values;
            std::stringstream ss(sw_values);
            std::string cell;
            while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
            gprc::MethodSpec method;
            method.kind = sw_method == "gpr" ? gprc::MethodSpec::Kind::Gpr
                                             : gprc::MethodSpec::Kind::Gprc;
            const auto rows =
                gprc::sweep(sc, gprc::sweep_axis_from_string(sw_axis), values, method, seed, tc);
            gprc::write_sweep_csv(sw_out, gprc::sweep_axis_from_string(sw_axis), rows);
            std::cout << "sweep written to " << sw_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
