#include "gprc/csv.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gprc::csv {

namespace {
std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim whitespace and CR
        size_t a = cell.find_first_not_of(" \t\r");
        size_t b = cell.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
    }
    return out;
}
}  // namespace

Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty file '" + path + "'");
    Table table;
    table.header = split_line(line);
    const size_t cols = table.header.size();
    if (cols == 0) throw std::runtime_error("csv: missing header in '" + path + "'");

    std::vector<double> data;
    size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != cols) {
            throw std::runtime_error("csv: row " + std::to_string(rows + 2) + " of '" + path +
                                     "' has " + std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(cols));
        }
        for (const auto& c : cells) {
            try {
                data.push_back(std::stod(c));
            } catch (const std::exception&) {
                throw std::runtime_error("csv: non-numeric cell '" + c + "' in '" + path + "'");
            }
        }
        ++rows;
    }
    table.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < cols; ++c) {
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                data[r * cols + c];
        }
    }
    return table;
}

void write(const std::string& path, const std::vector<std::string>& header,
           const Eigen::MatrixXd& values) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("csv: cannot write '" + path + "'");
    for (size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << "\n";
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            out << (c ? "," : "") << format_double(values(r, c));
        }
        out << "\n";
    }
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::uint64_t hash_doubles(const double* data, size_t count) {
    std::uint64_t h = 1469598103934665603ull;
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(data);
    for (size_t i = 0; i < count * sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace gprc::csv
