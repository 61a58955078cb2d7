#ifndef GPRC_MULTIINDEX_HPP
#define GPRC_MULTIINDEX_HPP
#pragma once

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace gprc {

/// Per-dimension derivative orders. The all-zero index requests the state itself.
class MultiIndex {
public:
    MultiIndex() = default;

    explicit MultiIndex(std::vector<int> orders) : orders_(std::move(orders)) {
        if (orders_.empty()) throw std::invalid_argument("MultiIndex: dimension must be >= 1");
        for (int o : orders_) {
            if (o < 0) throw std::invalid_argument("MultiIndex: orders must be nonnegative");
        }
    }

    static MultiIndex zero(int dim) { return MultiIndex(std::vector<int>(static_cast<size_t>(dim), 0)); }

    /// Single-axis derivative of the given order.
    static MultiIndex axis(int dim, int which, int order = 1) {
        std::vector<int> o(static_cast<size_t>(dim), 0);
        o.at(static_cast<size_t>(which)) = order;
        return MultiIndex(std::move(o));
    }

    int dim() const { return static_cast<int>(orders_.size()); }
    int order(int d) const { return orders_.at(static_cast<size_t>(d)); }
    int total() const { return std::accumulate(orders_.begin(), orders_.end(), 0); }
    bool is_zero() const { return total() == 0; }
    const std::vector<int>& orders() const { return orders_; }

    bool operator==(const MultiIndex& other) const { return orders_ == other.orders_; }
    bool operator!=(const MultiIndex& other) const { return !(*this == other); }
    bool operator<(const MultiIndex& other) const { return orders_ < other.orders_; }

    /// Compact id used in CSV output: "u", "u_x1", "u_x1x2", ...
    std::string label() const {
        if (is_zero()) return "u";
        std::string s = "u_";
        for (int d = 0; d < dim(); ++d) {
            for (int k = 0; k < order(d); ++k) s += "x" + std::to_string(d + 1);
        }
        return s;
    }

private:
    std::vector<int> orders_;
};

}  // namespace gprc

#endif  // GPRC_MULTIINDEX_HPP
