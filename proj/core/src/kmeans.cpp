#include "coin/kmeans.hpp"

#include <algorithm>
#include <limits>

namespace coin {

std::size_t nearest_centroid(std::span<const double> point, const std::vector<double>& centroids,
                             std::size_t n_cols) {
    const std::size_t k = centroids.size() / n_cols;
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(point, {centroids.data() + c * n_cols, n_cols});
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

namespace {

std::vector<double> seed_plus_plus(const PointMatrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    const std::size_t m = points.n_cols;
    std::vector<double> centroids;
    centroids.reserve(k * m);

    const std::size_t first = rng.uniform_index(n);
    centroids.insert(centroids.end(), points.row(first).begin(), points.row(first).end());

    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < k; ++c) {
        const std::span<const double> last{centroids.data() + (c - 1) * m, m};
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            min_d2[i] = std::min(min_d2[i], squared_distance(points.row(i), last));
            total += min_d2[i];
        }
        std::size_t chosen;
        if (total <= 0.0) {
            chosen = rng.uniform_index(n); // all mass on existing centers (duplicate points)
        } else {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += min_d2[i];
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
        }
        centroids.insert(centroids.end(), points.row(chosen).begin(), points.row(chosen).end());
    }
    return centroids;
}

double sum_objective(const PointMatrix& points, const std::vector<std::size_t>& assignment,
                     const std::vector<double>& centroids) {
    const std::size_t m = points.n_cols;
    double total = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        total += squared_distance(points.row(i),
                                  {centroids.data() + assignment[i] * m, m});
    }
    return total;
}

KMeansResult run_once(const PointMatrix& points, std::size_t k, std::size_t max_iterations,
                      Rng& rng) {
    const std::size_t n = points.rows();
    const std::size_t m = points.n_cols;

    KMeansResult result;
    result.centroids = seed_plus_plus(points, k, rng);
    result.assignment.assign(n, 0);

    std::vector<std::size_t> counts(k, 0);
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        bool changed = iter == 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = nearest_centroid(points.row(i), result.centroids, m);
            if (c != result.assignment[i]) {
                result.assignment[i] = c;
                changed = true;
            }
        }
        if (!changed) break;
        result.iterations = iter + 1;

        std::fill(result.centroids.begin(), result.centroids.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = result.assignment[i];
            ++counts[c];
            for (std::size_t d = 0; d < m; ++d) result.centroids[c * m + d] += points.row(i)[d];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t d = 0; d < m; ++d)
                result.centroids[c * m + d] /= static_cast<double>(counts[c]);
        }
        // An emptied cluster adopts the point farthest from its centroid.
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[result.assignment[i]] <= 1) continue;
                const std::size_t a = result.assignment[i];
                const double d = squared_distance(points.row(i),
                                                  {result.centroids.data() + a * m, m});
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far_d < 0.0) continue; // nothing movable
            --counts[result.assignment[far]];
            result.assignment[far] = c;
            counts[c] = 1;
            for (std::size_t d = 0; d < m; ++d)
                result.centroids[c * m + d] = points.row(far)[d];
        }

        result.objective_trace.push_back(sum_objective(points, result.assignment, result.centroids));
    }

    result.objective = sum_objective(points, result.assignment, result.centroids);
    return result;
}

} // namespace

KMeansResult kmeans(const PointMatrix& points, std::size_t k, const KMeansOptions& options,
                    Rng& rng) {
    const std::size_t n = points.rows();
    if (k == 0) throw InputError("k must be positive");
    if (k > n) throw InputError("k exceeds the number of points");

    KMeansResult best;
    best.objective = std::numeric_limits<double>::infinity();
    const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
    for (std::size_t r = 0; r < restarts; ++r) {
        KMeansResult candidate = run_once(points, k, options.max_iterations, rng);
        if (candidate.objective < best.objective) best = std::move(candidate);
    }
    return best;
}

} // namespace coin
