#ifndef GPRC_SCENARIOS_HPP
#define GPRC_SCENARIOS_HPP
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gprc/ident.hpp"
#include "gprc/ode.hpp"
#include "gprc/predict.hpp"

namespace gprc {

/// One estimation method to run on a scenario.
struct MethodSpec {
    enum class Kind { Gpr, Gprc };
    Kind kind = Kind::Gprc;
    std::optional<double> sigma_r2;  // overrides the scenario default (GPRC only)
    bool use_anchors = true;         // IC/BC product-of-experts correction (GPRC only)

    std::string label() const;
};

/// A reproducible experiment: ground truth, equation, sampling plan, noise level
/// and prediction configuration. All constants that the source experiments leave
/// to figures are pinned here.
struct Scenario {
    std::string name;
    int dim = 1;
    DomainBox domain;
    std::function<double(const Eigen::VectorXd&, const MultiIndex&)> truth;
    MuProblem problem = NonlinearProblem{};
    std::function<Eigen::MatrixXd(int n)> sample_plan;
    int n_obs = 0;
    double noise_var = 0.0;
    double sigma_r2 = 0.1;
    ExtendedSetConfig extcfg;
    std::vector<AnchorSet> anchors;
    Eigen::MatrixXd eval_grid;
    std::vector<DerivativeTarget> report_targets;
    int picard_iters = 1;  // constrained iterations when the problem is nonlinear
};

/// Damped oscillator u'' + u' + 3u = 0 on [0, 10], u(0) = pi - 0.1, u'(0) = 0;
/// 21 equally spaced observations.
Scenario make_linear_ode_scenario();

/// Poisson equation on the unit square with source exp(-x1)(x1 - 2 + x2^3 + 6 x2)
/// and Dirichlet boundary data of exp(-x1)(x1 + x2^3); 15 fixed observations.
Scenario make_poisson_scenario();

/// Van der Pol oscillator u'' - mu (1 - u^2) u' + u = 0, mu = 0.5, u(0) = 2,
/// u'(0) = 0; 40 equally spaced observations on [0, 20]. Handled by Picard
/// linearization around the current state estimate.
Scenario make_vanderpol_scenario();

Scenario get_scenario(const std::string& name);
std::vector<std::string> scenario_names();

/// Scalar-parameter identification setup for the Van der Pol family: grid of mu
/// candidates with the matching linearizable problem and 200 design points.
ParamScenario make_vdp_param_scenario();

/// Equally spaced column vector, used by 1D sampling plans and grids.
Eigen::MatrixXd linspace_matrix(double lo, double hi, int n);

}  // namespace gprc

#endif  // GPRC_SCENARIOS_HPP
