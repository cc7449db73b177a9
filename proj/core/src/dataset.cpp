#include "coin/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace coin {

Dataset::Dataset(std::vector<double> values, std::size_t n_cols,
                 std::vector<std::string> attribute_names,
                 std::vector<std::string> instance_ids)
    : n_cols_(n_cols),
      values_(std::move(values)),
      attribute_names_(std::move(attribute_names)),
      instance_ids_(std::move(instance_ids)) {
    if (n_cols_ == 0) throw InputError("dataset must have at least one attribute");
    if (values_.size() % n_cols_ != 0) throw InputError("dataset value buffer is ragged");
    n_rows_ = values_.size() / n_cols_;
    if (n_rows_ == 0) throw InputError("dataset must have at least one row");
    if (attribute_names_.size() != n_cols_)
        throw InputError("attribute name count does not match column count");
    if (instance_ids_.size() != n_rows_)
        throw InputError("instance id count does not match row count");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw InputError("non-finite value at row " + std::to_string(i / n_cols_) +
                             ", column " + std::to_string(i % n_cols_));
        }
    }
    id_to_row_.reserve(n_rows_);
    for (std::size_t r = 0; r < n_rows_; ++r) {
        if (!id_to_row_.emplace(instance_ids_[r], r).second)
            throw InputError("duplicate instance id '" + instance_ids_[r] + "'");
    }
}

std::size_t Dataset::row_of(const std::string& id) const {
    const auto it = id_to_row_.find(id);
    if (it == id_to_row_.end()) throw InputError("unknown instance id '" + id + "'");
    return it->second;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t line_no, const std::string& column) {
    const std::string s = trim(raw);
    double value = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || s.empty()) {
        throw InputError("cannot parse '" + s + "' as a number at line " +
                         std::to_string(line_no) + ", column '" + column + "'");
    }
    if (!std::isfinite(value)) {
        throw InputError("non-finite value at line " + std::to_string(line_no) +
                         ", column '" + column + "'");
    }
    return value;
}

} // namespace

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw InputError("'" + path + "' is empty");
    const auto header = split_csv_line(line);
    if (header.empty()) throw InputError("'" + path + "' has an empty header");

    std::optional<std::size_t> id_col;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = trim(header[c]);
        if (name == "id" && !id_col) {
            id_col = c;
        } else {
            names.push_back(name);
        }
    }
    if (names.empty()) throw InputError("'" + path + "' has no numeric columns");

    std::vector<double> values;
    std::vector<std::string> ids;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw InputError("ragged row at line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        }
        std::size_t name_idx = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (id_col && c == *id_col) {
                ids.push_back(trim(cells[c]));
            } else {
                values.push_back(parse_cell(cells[c], line_no, names[name_idx]));
                ++name_idx;
            }
        }
        if (!id_col) ids.push_back(std::to_string(ids.size()));
    }
    const std::size_t n_cols = names.size();
    return Dataset(std::move(values), n_cols, std::move(names), std::move(ids));
}

void save_dataset(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << "id";
    for (const auto& name : data.attribute_names()) out << ',' << name;
    out << '\n';
    char buf[64];
    for (std::size_t r = 0; r < data.rows(); ++r) {
        out << data.id_of(r);
        for (std::size_t m = 0; m < data.cols(); ++m) {
            // %.17g round-trips IEEE doubles exactly.
            std::snprintf(buf, sizeof(buf), "%.17g", data.at(r, m));
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw InputError("failed while writing '" + path + "'");
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw InputError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    double acc = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m) {
        const double d = a[m] - b[m];
        acc += d * d;
    }
    return acc;
}

double distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

NeighborList knn(const Dataset& data, std::span<const double> query, std::size_t k,
                 std::span<const std::size_t> candidate_rows,
                 std::optional<std::size_t> exclude_row) {
    if (query.size() != data.cols()) throw InputError("query dimension does not match dataset");

    NeighborList result;
    result.query_row = exclude_row;
    result.entries.reserve(candidate_rows.size());
    for (const std::size_t r : candidate_rows) {
        if (exclude_row && r == *exclude_row) continue;
        result.entries.push_back({r, distance(query, data.row(r))});
    }
    if (k > result.entries.size()) {
        throw InputError("k=" + std::to_string(k) + " exceeds candidate count " +
                         std::to_string(result.entries.size()));
    }
    std::sort(result.entries.begin(), result.entries.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.row < b.row;
    });
    result.entries.resize(k);
    return result;
}

} // namespace coin
