#pragma once

#include <cstdint>
#include <vector>

#include "coin/dataset.hpp"
#include "coin/rng.hpp"

namespace coin {

struct KMeansResult {
    std::vector<std::size_t> assignment; // per point, cluster index in [0, k)
    std::vector<double> centroids;       // k x M row-major
    double objective = 0.0;              // within-cluster sum of squared distances
    std::size_t iterations = 0;
    std::vector<double> objective_trace; // objective after each Lloyd step (winning restart)
};

struct KMeansOptions {
    std::size_t restarts = 10;
    std::size_t max_iterations = 100;
};

// Lloyd iterations with k-means++ seeding. Restarts keep the lowest final
// objective; ties keep the earliest restart. Assignment ties go to the lowest
// centroid index, so the result is a pure function of (points, rng state).
KMeansResult kmeans(const PointMatrix& points, std::size_t k, const KMeansOptions& options,
                    Rng& rng);

// Index of the nearest centroid (ties: lowest index).
std::size_t nearest_centroid(std::span<const double> point, const std::vector<double>& centroids,
                             std::size_t n_cols);

} // namespace coin
