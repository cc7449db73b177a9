#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coin/dataset.hpp"

namespace coin {

// Smallest context we will try to resolve.
inline constexpr std::size_t kMinContextSize = 10;

// The k nearest normal instances around one query point.
struct Context {
    std::vector<std::size_t> member_rows; // ascending distance to the query
    std::vector<double> member_distances;
    std::size_t k = 0;

    PointMatrix points(const Dataset& data) const;
};

struct ContextClusters {
    struct Cluster {
        std::vector<std::size_t> members; // offsets into the context point set
        std::vector<double> centroid;     // arithmetic mean of the members
    };
    std::vector<Cluster> clusters;        // surviving clusters only
    std::size_t chosen_l = 1;             // cluster count picked by prediction strength
    std::size_t pruned_count = 0;         // clusters dropped by the size rule
    std::vector<std::size_t> pruned_members;

    std::size_t surviving_size() const;
};

// k = max(kMinContextSize, ceil(context_fraction * |normal|)) nearest normal
// instances under Euclidean distance. Fewer than kMinContextSize normals is
// an error: such a context cannot be resolved.
Context build_context(const Dataset& data, std::span<const std::size_t> normal_rows,
                      std::span<const double> query, double context_fraction);

// Stability of a candidate cluster count: average over random 50/50 splits of
// the worst per-cluster fraction of test-point pairs that land on the same
// training centroid. 1.0 exactly for candidate_k == 1; singleton test
// clusters contribute 1.
double prediction_strength(const PointMatrix& points, std::size_t candidate_k,
                           std::size_t splits, std::uint64_t seed);

// Score for one split; exposed so the pair counting can be cross-checked
// against direct enumeration.
double prediction_strength_of_split(const std::vector<double>& train_centroids,
                                    std::size_t n_cols, const PointMatrix& test_points,
                                    const std::vector<std::size_t>& test_assignment,
                                    std::size_t candidate_k);

// Picks L as the largest candidate in [1, max_l] whose prediction strength
// clears ps_threshold, partitions with k-means, then drops clusters of size
// <= min_cluster_fraction * |context|. Dropped members take no further part
// in the pipeline. Throws DegenerateError when nothing survives.
ContextClusters resolve_context(const PointMatrix& context_points, std::size_t max_l,
                                double ps_threshold, double min_cluster_fraction,
                                std::uint64_t seed, std::size_t ps_splits = 5);

} // namespace coin
