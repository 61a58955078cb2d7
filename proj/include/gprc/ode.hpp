#ifndef GPRC_ODE_HPP
#define GPRC_ODE_HPP
#pragma once

#include <functional>
#include <vector>

namespace gprc {

/// Second-order scalar ODE u'' = rhs(t, u, u').
using Ode2Rhs = std::function<double(double t, double u, double du)>;

/// Dense solution sampler from classical RK4 on the first-order system. Values
/// between step nodes come from cubic Hermite interpolation; u'' is recovered
/// from the equation itself.
class OdeSolution {
public:
    double u(double t) const;
    double du(double t) const;
    double d2u(double t) const { return rhs_(t, u(t), du(t)); }

    double t_begin() const { return t0_; }
    double t_end() const { return t1_; }

private:
    friend OdeSolution ode_integrate(const Ode2Rhs&, double, double, double, double, double);

    double hermite(const std::vector<double>& value, const std::vector<double>& slope,
                   double t) const;

    Ode2Rhs rhs_;
    double t0_ = 0.0, t1_ = 0.0, h_ = 0.0;
    std::vector<double> u_, du_, d2u_;  // node values
};

/// Integrates u'' = rhs with u(t0) = u0, u'(t0) = du0 up to t1. The step is
/// shrunk slightly if needed so the nodes land exactly on t1. Throws on blow-up.
OdeSolution ode_integrate(const Ode2Rhs& rhs, double u0, double du0, double t0, double t1,
                          double step);

}  // namespace gprc

#endif  // GPRC_ODE_HPP
