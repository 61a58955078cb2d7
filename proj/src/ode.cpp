#include "gprc/ode.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gprc {

OdeSolution ode_integrate(const Ode2Rhs& rhs, double u0, double du0, double t0, double t1,
                          double step) {
    if (!(step > 0.0)) throw std::invalid_argument("ode_integrate: step must be positive");
    if (!(t1 > t0)) throw std::invalid_argument("ode_integrate: t1 must exceed t0");

    const auto nsteps = static_cast<size_t>(std::ceil((t1 - t0) / step - 1e-12));
    const double h = (t1 - t0) / static_cast<double>(nsteps);

    OdeSolution sol;
    sol.rhs_ = rhs;
    sol.t0_ = t0;
    sol.t1_ = t1;
    sol.h_ = h;
    sol.u_.reserve(nsteps + 1);
    sol.du_.reserve(nsteps + 1);
    sol.d2u_.reserve(nsteps + 1);

    double u = u0, du = du0;
    sol.u_.push_back(u);
    sol.du_.push_back(du);
    sol.d2u_.push_back(rhs(t0, u, du));

    for (size_t k = 0; k < nsteps; ++k) {
        const double t = t0 + h * static_cast<double>(k);
        const double k1u = du;
        const double k1v = rhs(t, u, du);
        const double k2u = du + 0.5 * h * k1v;
        const double k2v = rhs(t + 0.5 * h, u + 0.5 * h * k1u, du + 0.5 * h * k1v);
        const double k3u = du + 0.5 * h * k2v;
        const double k3v = rhs(t + 0.5 * h, u + 0.5 * h * k2u, du + 0.5 * h * k2v);
        const double k4u = du + h * k3v;
        const double k4v = rhs(t + h, u + h * k3u, du + h * k3v);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        du += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if (!std::isfinite(u) || !std::isfinite(du)) {
            throw std::runtime_error("ode_integrate: solution blow-up at t = " +
                                     std::to_string(t + h));
        }
        sol.u_.push_back(u);
        sol.du_.push_back(du);
        sol.d2u_.push_back(rhs(t + h, u, du));
    }
    return sol;
}

double OdeSolution::hermite(const std::vector<double>& value, const std::vector<double>& slope,
                            double t) const {
    const double span = t1_ - t0_;
    if (t < t0_ - 1e-9 * span || t > t1_ + 1e-9 * span) {
        throw std::out_of_range("OdeSolution: query at t = " + std::to_string(t) +
                                " outside [" + std::to_string(t0_) + ", " + std::to_string(t1_) + "]");
    }
    const double clamped = std::min(std::max(t, t0_), t1_);
    auto cell = static_cast<size_t>((clamped - t0_) / h_);
    if (cell >= value.size() - 1) cell = value.size() - 2;
    const double tl = t0_ + h_ * static_cast<double>(cell);
    const double s = (clamped - tl) / h_;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return h00 * value[cell] + h10 * h_ * slope[cell] + h01 * value[cell + 1] +
           h11 * h_ * slope[cell + 1];
}

double OdeSolution::u(double t) const { return hermite(u_, du_, t); }

double OdeSolution::du(double t) const { return hermite(du_, d2u_, t); }

}  // namespace gprc
