#ifndef GPRC_CSV_HPP
#define GPRC_CSV_HPP
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace gprc::csv {

struct Table {
    std::vector<std::string> header;
    Eigen::MatrixXd values;
};

/// Reads a numeric CSV with a required header row.
Table read(const std::string& path);

void write(const std::string& path, const std::vector<std::string>& header,
           const Eigen::MatrixXd& values);

/// Shortest-round-trip formatting so reruns produce byte-identical files.
std::string format_double(double v);

/// FNV-1a over the raw bytes of the doubles; used to fingerprint grids/truths.
std::uint64_t hash_doubles(const double* data, size_t count);

}  // namespace gprc::csv

#endif  // GPRC_CSV_HPP
