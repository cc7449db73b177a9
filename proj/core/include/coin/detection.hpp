#pragma once

#include <string>
#include <vector>

#include "coin/dataset.hpp"

namespace coin {

// Output of the reference detector. The interpreter only consumes the
// membership list; scores are kept for diagnostics.
struct DetectionResult {
    std::vector<std::size_t> outlier_rows; // descending score, ties by ascending row
    std::vector<double> scores;            // per instance: distance to its k-th neighbor
};

// Distance-to-k-th-neighbor detector. Flags the ceil(fraction * N) highest
// scoring instances. Any external detector can substitute via an id file.
DetectionResult detect_knn_distance(const Dataset& data, std::size_t k, double fraction);

// One instance id per line.
std::vector<std::string> read_outlier_ids(const std::string& path);
void write_outlier_ids(const std::vector<std::string>& ids, const std::string& path);

} // namespace coin
