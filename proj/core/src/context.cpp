#include "coin/context.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coin/kmeans.hpp"
#include "coin/rng.hpp"

namespace coin {

PointMatrix Context::points(const Dataset& data) const {
    PointMatrix pts;
    pts.n_cols = data.cols();
    pts.values.reserve(member_rows.size() * data.cols());
    for (const std::size_t r : member_rows) pts.append(data.row(r));
    return pts;
}

std::size_t ContextClusters::surviving_size() const {
    std::size_t total = 0;
    for (const auto& c : clusters) total += c.members.size();
    return total;
}

Context build_context(const Dataset& data, std::span<const std::size_t> normal_rows,
                      std::span<const double> query, double context_fraction) {
    if (normal_rows.empty()) throw InputError("no normal instances to build a context from");
    if (context_fraction <= 0.0 || context_fraction > 1.0)
        throw InputError("context_fraction must lie in (0,1]");
    if (normal_rows.size() < kMinContextSize)
        throw InputError("only " + std::to_string(normal_rows.size()) +
                         " normal instances; at least " + std::to_string(kMinContextSize) +
                         " are needed to resolve a context");

    const auto wanted = static_cast<std::size_t>(
        std::ceil(context_fraction * static_cast<double>(normal_rows.size())));
    const std::size_t k = std::max(kMinContextSize, wanted);

    const auto neighbors = knn(data, query, k, normal_rows);
    Context ctx;
    ctx.k = k;
    ctx.member_rows.reserve(k);
    ctx.member_distances.reserve(k);
    for (const auto& n : neighbors.entries) {
        ctx.member_rows.push_back(n.row);
        ctx.member_distances.push_back(n.distance);
    }
    return ctx;
}

double prediction_strength_of_split(const std::vector<double>& train_centroids,
                                    std::size_t n_cols, const PointMatrix& test_points,
                                    const std::vector<std::size_t>& test_assignment,
                                    std::size_t candidate_k) {
    // Group test points by their own clustering.
    std::vector<std::vector<std::size_t>> groups(candidate_k);
    for (std::size_t i = 0; i < test_assignment.size(); ++i)
        groups[test_assignment[i]].push_back(i);

    std::vector<std::size_t> train_side(test_points.rows());
    for (std::size_t i = 0; i < test_points.rows(); ++i)
        train_side[i] = nearest_centroid(test_points.row(i), train_centroids, n_cols);

    double worst = 1.0;
    for (const auto& group : groups) {
        if (group.size() < 2) continue; // singletons (and emptied clusters) count as 1
        std::size_t agree = 0;
        std::size_t total = 0;
        for (std::size_t a = 0; a < group.size(); ++a) {
            for (std::size_t b = a + 1; b < group.size(); ++b) {
                ++total;
                if (train_side[group[a]] == train_side[group[b]]) ++agree;
            }
        }
        worst = std::min(worst, static_cast<double>(agree) / static_cast<double>(total));
    }
    return worst;
}

double prediction_strength(const PointMatrix& points, std::size_t candidate_k,
                           std::size_t splits, std::uint64_t seed) {
    const std::size_t n = points.rows();
    if (n < 4) throw InputError("prediction strength needs at least 4 points");
    if (candidate_k == 0) throw InputError("candidate_k must be positive");
    if (candidate_k > n / 2)
        throw InputError("candidate_k exceeds half the point count");
    if (splits == 0) throw InputError("splits must be positive");
    if (candidate_k == 1) return 1.0;

    Rng rng(seed);
    const KMeansOptions opts;
    double total = 0.0;
    for (std::size_t s = 0; s < splits; ++s) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);

        const std::size_t n_train = n / 2;
        PointMatrix train, test;
        train.n_cols = test.n_cols = points.n_cols;
        for (std::size_t i = 0; i < n; ++i)
            (i < n_train ? train : test).append(points.row(order[i]));

        const KMeansResult train_fit = kmeans(train, candidate_k, opts, rng);
        const KMeansResult test_fit = kmeans(test, candidate_k, opts, rng);
        total += prediction_strength_of_split(train_fit.centroids, points.n_cols, test,
                                              test_fit.assignment, candidate_k);
    }
    return total / static_cast<double>(splits);
}

ContextClusters resolve_context(const PointMatrix& context_points, std::size_t max_l,
                                double ps_threshold, double min_cluster_fraction,
                                std::uint64_t seed, std::size_t ps_splits) {
    const std::size_t n = context_points.rows();
    if (n == 0) throw InputError("empty context");
    const std::size_t m = context_points.n_cols;

    std::size_t cap = std::max<std::size_t>(1, max_l);
    cap = std::min(cap, n >= 4 ? n / 2 : std::size_t{1});

    std::size_t chosen = 1;
    for (std::size_t candidate = 2; candidate <= cap; ++candidate) {
        const double ps = prediction_strength(context_points, candidate, ps_splits,
                                              stable_seed(seed, candidate));
        if (ps >= ps_threshold) chosen = candidate;
    }

    Rng rng(stable_seed(seed, "partition"));
    const KMeansResult fit = kmeans(context_points, chosen, KMeansOptions{}, rng);

    std::vector<std::vector<std::size_t>> groups(chosen);
    for (std::size_t i = 0; i < n; ++i) groups[fit.assignment[i]].push_back(i);

    ContextClusters out;
    out.chosen_l = chosen;
    const double prune_at = min_cluster_fraction * static_cast<double>(n);
    for (auto& group : groups) {
        if (group.empty()) continue;
        if (static_cast<double>(group.size()) <= prune_at) {
            ++out.pruned_count;
            out.pruned_members.insert(out.pruned_members.end(), group.begin(), group.end());
            continue;
        }
        ContextClusters::Cluster cluster;
        cluster.members = std::move(group);
        cluster.centroid.assign(m, 0.0);
        for (const std::size_t i : cluster.members) {
            const auto row = context_points.row(i);
            for (std::size_t d = 0; d < m; ++d) cluster.centroid[d] += row[d];
        }
        for (std::size_t d = 0; d < m; ++d)
            cluster.centroid[d] /= static_cast<double>(cluster.members.size());
        out.clusters.push_back(std::move(cluster));
    }
    if (out.clusters.empty())
        throw DegenerateError("every context cluster fell below the size threshold");
    return out;
}

} // namespace coin
