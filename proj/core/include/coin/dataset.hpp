#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "coin/errors.hpp"

namespace coin {

// Row-major point set without ids; the working currency of the pipeline
// (contexts, clusters, synthetic classes all travel as PointMatrix).
struct PointMatrix {
    std::vector<double> values;
    std::size_t n_cols = 0;

    PointMatrix() = default;
    PointMatrix(std::vector<double> v, std::size_t cols) : values(std::move(v)), n_cols(cols) {}

    std::size_t rows() const { return n_cols == 0 ? 0 : values.size() / n_cols; }

    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * n_cols, n_cols};
    }

    void append(std::span<const double> point) {
        values.insert(values.end(), point.begin(), point.end());
    }
};

// Immutable N x M numeric table with attribute names and unique instance ids.
// All entries are finite; reads are safe from any number of threads.
class Dataset {
public:
    Dataset(std::vector<double> values, std::size_t n_cols,
            std::vector<std::string> attribute_names,
            std::vector<std::string> instance_ids);

    std::size_t rows() const { return n_rows_; }
    std::size_t cols() const { return n_cols_; }

    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * n_cols_, n_cols_};
    }

    double at(std::size_t i, std::size_t m) const { return values_[i * n_cols_ + m]; }

    const std::vector<std::string>& attribute_names() const { return attribute_names_; }
    const std::vector<std::string>& instance_ids() const { return instance_ids_; }
    const std::string& id_of(std::size_t row) const { return instance_ids_[row]; }

    // Throws InputError for unknown ids.
    std::size_t row_of(const std::string& id) const;

    bool has_id(const std::string& id) const { return id_to_row_.count(id) != 0; }

private:
    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
    std::vector<double> values_;
    std::vector<std::string> attribute_names_;
    std::vector<std::string> instance_ids_;
    std::unordered_map<std::string, std::size_t> id_to_row_;
};

struct Neighbor {
    std::size_t row = 0;
    double distance = 0.0;
};

// Neighbors sorted by ascending distance, ties by ascending row.
struct NeighborList {
    std::optional<std::size_t> query_row;
    std::vector<Neighbor> entries;
};

// CSV with a header row; an optional `id` column carries instance ids,
// every other column must parse as a finite real. Row order is preserved.
Dataset load_dataset(const std::string& path);

// Writes a CSV (id column first) that round-trips bit-exactly through
// load_dataset.
void save_dataset(const Dataset& data, const std::string& path);

// Euclidean distance; dimension mismatch throws InputError.
double distance(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

// k nearest candidates to `query` by Euclidean distance. `exclude_row`, when
// present, is skipped (the usual "query is itself an instance" case). Throws
// InputError when fewer than k candidates remain.
NeighborList knn(const Dataset& data, std::span<const double> query, std::size_t k,
                 std::span<const std::size_t> candidate_rows,
                 std::optional<std::size_t> exclude_row = std::nullopt);

} // namespace coin
