#ifndef GPRC_ERRORS_HPP
#define GPRC_ERRORS_HPP
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gprc {

/// A covariance matrix could not be factorized even after escalating jitter.
class ConditioningError : public std::runtime_error {
public:
    ConditioningError(const std::string& what, std::vector<double> jitters_tried)
        : std::runtime_error(what), jitters_tried_(std::move(jitters_tried)) {}

    const std::vector<double>& jitters_tried() const { return jitters_tried_; }

private:
    std::vector<double> jitters_tried_;
};

/// A kernel or covariance evaluation produced a non-finite value.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A derivative order above the configured per-argument cap was requested.
class UnsupportedOrderError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {
/// Warning sink; writes to stderr unless silenced.
void warn(const std::string& message);
void set_warnings_enabled(bool enabled);
}  // namespace detail

}  // namespace gprc

#endif  // GPRC_ERRORS_HPP
