#include "coin/detection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace coin {

DetectionResult detect_knn_distance(const Dataset& data, std::size_t k, double fraction) {
    const std::size_t n = data.rows();
    if (k == 0) throw InputError("k must be positive");
    if (k >= n) throw InputError("k must be smaller than the number of instances");
    if (fraction < 0.0 || fraction > 1.0) throw InputError("fraction must lie in [0,1]");

    const auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    if (count >= n && count > 0)
        throw InputError("fraction flags every instance; nothing would remain normal");

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);

    DetectionResult result;
    result.scores.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto neighbors = knn(data, data.row(r), k, all, r);
        result.scores[r] = neighbors.entries.back().distance;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return result.scores[a] != result.scores[b] ? result.scores[a] > result.scores[b] : a < b;
    });
    result.outlier_rows.assign(order.begin(), order.begin() + count);
    return result;
}

std::vector<std::string> read_outlier_ids(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (!line.empty()) ids.push_back(line);
    }
    return ids;
}

void write_outlier_ids(const std::vector<std::string>& ids, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    for (const auto& id : ids) out << id << '\n';
}

} // namespace coin
