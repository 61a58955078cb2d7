#ifndef GPRC_HARNESS_HPP
#define GPRC_HARNESS_HPP
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gprc/scenarios.hpp"

namespace gprc {

struct RmseReport {
    std::string scenario;
    std::string method;
    std::uint64_t seed = 0;
    double noise_var = 0.0;
    double sigma_r2 = 0.0;
    std::vector<std::pair<std::string, double>> target_rmse;  // target label -> rmse
    double residual_rmse = 0.0;
    std::uint64_t grid_hash = 0;   // fingerprint of the evaluation grid
    std::uint64_t truth_hash = 0;  // fingerprint of the truth values on it

    double rmse_of(const std::string& label) const;
};

/// Draws the scenario's observation set: locations from the sampling plan, values
/// from the truth plus Gaussian noise from the given seed.
Dataset sample_observations(const Scenario& scenario, double noise_var, int n_obs,
                            std::uint64_t seed);

/// Trains one method on the data: plain GPR, constrained GPR, or the Picard
/// pipeline for nonlinear scenarios (returns the best iterate).
TrainedModel fit_method(const Scenario& scenario, const Dataset& data, const MethodSpec& method,
                        double sigma_r2, std::uint64_t seed, const TrainConfig& base = {});

/// Runs every method on a fresh noise draw and reports RMSEs of the posterior
/// means against the truth on the evaluation grid, plus the RMSE of the true
/// equation residual evaluated on those means.
std::vector<RmseReport> run_scenario(const Scenario& scenario,
                                     const std::vector<MethodSpec>& methods, std::uint64_t seed,
                                     const TrainConfig& base = {});

enum class SweepAxis { Step, Width, SigmaR2, NObs };
SweepAxis sweep_axis_from_string(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepRow {
    double value = 0.0;
    RmseReport report;
};

/// Reruns the scenario varying one axis with a fixed seed.
std::vector<SweepRow> sweep(const Scenario& scenario, SweepAxis axis,
                            const std::vector<double>& values, const MethodSpec& method,
                            std::uint64_t seed, const TrainConfig& base = {});

void write_reports_csv(const std::string& path, const std::vector<RmseReport>& reports);
void write_sweep_csv(const std::string& path, SweepAxis axis, const std::vector<SweepRow>& rows);
nlohmann::json manifest_json(const Scenario& scenario, const std::vector<RmseReport>& reports,
                             std::uint64_t seed);

}  // namespace gprc

#endif  // GPRC_HARNESS_HPP
