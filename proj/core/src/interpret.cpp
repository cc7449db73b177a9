#include "coin/interpret.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>
#include <unordered_set>

#include "coin/rng.hpp"
#include "coin/sampler.hpp"

namespace coin {

PriorKnowledge PriorKnowledge::neutral(std::size_t n_attributes) {
    PriorKnowledge prior;
    prior.beta.assign(n_attributes, 1.0);
    prior.direction.assign(n_attributes, 0);
    return prior;
}

PriorKnowledge PriorKnowledge::from_config(const Config& cfg, std::size_t n_attributes) {
    PriorKnowledge prior = neutral(n_attributes);
    if (cfg.beta.size() == 1) {
        prior.beta.assign(n_attributes, cfg.beta.front());
    } else if (!cfg.beta.empty()) {
        prior.beta = cfg.beta;
    }
    if (cfg.direction.size() == 1) {
        prior.direction.assign(n_attributes, cfg.direction.front());
    } else if (!cfg.direction.empty()) {
        prior.direction = cfg.direction;
    }
    prior.validate(n_attributes);
    return prior;
}

void PriorKnowledge::validate(std::size_t n_attributes) const {
    if (beta.size() != n_attributes)
        throw ConfigError("beta has " + std::to_string(beta.size()) + " entries, expected " +
                          std::to_string(n_attributes));
    if (direction.size() != n_attributes)
        throw ConfigError("p has " + std::to_string(direction.size()) + " entries, expected " +
                          std::to_string(n_attributes));
    for (const double b : beta)
        if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("beta entries must be finite and >= 0");
    for (const int p : direction)
        if (p != -1 && p != 0 && p != 1) throw ConfigError("p entries must be -1, 0 or 1");
}

std::vector<double> aggregate_attribute_scores(std::span<const ClusterEvidence> evidence,
                                               std::size_t context_size) {
    if (evidence.empty()) throw InputError("no cluster evidence to aggregate");
    std::vector<double> total(evidence.front().scores.size(), 0.0);
    for (const auto& ev : evidence)
        for (std::size_t m = 0; m < total.size(); ++m)
            total[m] += static_cast<double>(ev.cluster_size) * ev.scores[m];
    for (double& v : total) v /= static_cast<double>(context_size);
    return total;
}

std::vector<std::size_t> select_abnormal_attributes(std::span<const double> scores,
                                                    double theta_rel) {
    std::vector<std::size_t> selected;
    const double top = scores.empty() ? 0.0 : *std::max_element(scores.begin(), scores.end());
    if (top <= 0.0) return selected;
    const double cutoff = theta_rel * top;
    for (std::size_t m = 0; m < scores.size(); ++m)
        if (scores[m] >= cutoff) selected.push_back(m);
    std::sort(selected.begin(), selected.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
    });
    return selected;
}

double base_outlierness(std::span<const ClusterEvidence> evidence, std::size_t context_size) {
    if (evidence.empty()) throw InputError("no cluster evidence to aggregate");
    double total = 0.0;
    for (const auto& ev : evidence)
        total += static_cast<double>(ev.cluster_size) * ev.margin / ev.resolution.cluster_gamma;
    return total / static_cast<double>(context_size);
}

namespace {

// Shared core of the prior-refined cluster score: callers supply |g(query)|.
double prior_adjusted_impl(const LinearBoundary& boundary, double abs_decision,
                           double cluster_gamma, const PriorKnowledge& prior) {
    const double norm = boundary.weight_norm2();
    if (norm == 0.0) return 0.0;
    const double scale = abs_decision / (cluster_gamma * norm);
    double acc = 0.0;
    for (std::size_t m = 0; m < boundary.w.size(); ++m) {
        // Inliers carry +1: a positive expected deviation (p=+1) conforms
        // with negative weight, so only min(w,0) survives; p=-1 mirrors it.
        double kept = boundary.w[m];
        if (prior.direction[m] == 1) kept = std::min(0.0, kept);
        else if (prior.direction[m] == -1) kept = std::max(0.0, kept);
        const double component = scale * (kept / norm) * prior.beta[m];
        acc += component * component;
    }
    return std::sqrt(acc);
}

} // namespace

double prior_adjusted_cluster_outlierness(const LinearBoundary& boundary,
                                          const ResolutionProfile& resolution,
                                          std::span<const double> query,
                                          const PriorKnowledge& prior) {
    if (boundary.weight_norm2() == 0.0) return 0.0;
    return prior_adjusted_impl(boundary, std::abs(boundary.decision(query)),
                               resolution.cluster_gamma, prior);
}

double overall_outlierness(std::span<const ClusterEvidence> evidence,
                           const PriorKnowledge& prior, std::size_t context_size) {
    if (evidence.empty()) throw InputError("no cluster evidence to aggregate");
    double total = 0.0;
    for (const auto& ev : evidence) {
        const double dl =
            prior_adjusted_impl(ev.boundary, ev.abs_decision, ev.resolution.cluster_gamma, prior);
        total += static_cast<double>(ev.cluster_size) * dl;
    }
    return total / static_cast<double>(context_size);
}

Interpretation interpret_point(const Dataset& data, std::span<const std::size_t> normal_rows,
                               std::span<const double> query, const std::string& query_tag,
                               const PriorKnowledge& prior, const Config& cfg,
                               std::uint64_t seed) {
    prior.validate(data.cols());

    Interpretation result;
    result.outlier_id = query_tag;
    result.query_point.assign(query.begin(), query.end());

    const Context context = build_context(data, normal_rows, query, cfg.context_fraction);
    const PointMatrix context_points = context.points(data);

    const std::size_t max_l =
        std::max<std::size_t>(1, std::min(cfg.max_l, context.member_rows.size() / 5));
    const ContextClusters clusters =
        resolve_context(context_points, max_l, cfg.ps_threshold, cfg.min_cluster_fraction,
                        stable_seed(seed, "resolve"), cfg.ps_splits);
    result.chosen_l = clusters.chosen_l;
    result.pruned_clusters = clusters.pruned_count;
    result.context_size = clusters.surviving_size();

    // Pruned members drop out of everything downstream, including sampling.
    PointMatrix surviving;
    surviving.n_cols = context_points.n_cols;
    for (const auto& cluster : clusters.clusters)
        for (const std::size_t i : cluster.members) surviving.append(context_points.row(i));

    const SyntheticOutlierClass synthetic =
        expand_outlier(query, surviving, result.context_size, cfg.radius_factor,
                       stable_seed(seed, "sample"));

    ResolutionProfile context_resolution; // fallback for singleton clusters
    bool have_context_resolution = false;
    if (surviving.rows() >= 2) {
        context_resolution = attribute_resolution(surviving);
        have_context_resolution = true;
    }

    ExplainOptions options;
    options.lambda_grid = cfg.lambda_grid;
    options.holdout_fraction = cfg.holdout_fraction;

    result.evidence.reserve(clusters.clusters.size());
    for (std::size_t l = 0; l < clusters.clusters.size(); ++l) {
        PointMatrix cluster_points;
        cluster_points.n_cols = context_points.n_cols;
        for (const std::size_t i : clusters.clusters[l].members)
            cluster_points.append(context_points.row(i));
        ClusterEvidence ev = explain_against_cluster(
            query, cluster_points, synthetic, options, stable_seed(seed, l),
            have_context_resolution ? &context_resolution : nullptr);
        ev.centroid = clusters.clusters[l].centroid;
        if (ev.degenerate)
            result.flags.push_back("cluster " + std::to_string(l) + ": zero-weight boundary");
        if (!ev.boundary.converged)
            result.flags.push_back("cluster " + std::to_string(l) + ": fit did not converge");
        result.evidence.push_back(std::move(ev));
    }

    result.attribute_score_vector =
        aggregate_attribute_scores(result.evidence, result.context_size);
    const auto selected = select_abnormal_attributes(result.attribute_score_vector, cfg.theta_rel);
    for (const std::size_t m : selected) {
        result.abnormal_attributes.push_back(
            {m, data.attribute_names()[m], result.attribute_score_vector[m]});
    }
    if (selected.empty()) result.flags.push_back("all attribute scores are zero");

    result.outlierness = overall_outlierness(result.evidence, prior, result.context_size);
    if (result.outlierness < cfg.misdetection_threshold)
        result.flags.push_back("low outlierness; possibly a misdetected normal instance");
    return result;
}

Interpretation interpret_outlier(const Dataset& data, std::span<const std::size_t> normal_rows,
                                 const std::string& outlier_id, const PriorKnowledge& prior,
                                 const Config& cfg, std::uint64_t seed) {
    const std::size_t row = data.row_of(outlier_id);
    for (const std::size_t r : normal_rows)
        if (r == row) throw InputError("query '" + outlier_id + "' is listed as normal");
    return interpret_point(data, normal_rows, data.row(row), outlier_id, prior, cfg, seed);
}

std::vector<Interpretation> interpret_all(const Dataset& data,
                                          const std::vector<std::string>& outlier_ids,
                                          const PriorKnowledge& prior, const Config& cfg,
                                          std::uint64_t master_seed) {
    std::vector<std::size_t> outlier_rows;
    outlier_rows.reserve(outlier_ids.size());
    std::unordered_set<std::size_t> outlier_set;
    for (const auto& id : outlier_ids) {
        const std::size_t row = data.row_of(id);
        outlier_rows.push_back(row);
        outlier_set.insert(row);
    }
    std::vector<std::size_t> normal_rows;
    normal_rows.reserve(data.rows() - outlier_set.size());
    for (std::size_t r = 0; r < data.rows(); ++r)
        if (!outlier_set.count(r)) normal_rows.push_back(r);

    std::vector<Interpretation> results(outlier_ids.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= outlier_ids.size()) return;
            const std::uint64_t seed = stable_seed(master_seed, outlier_ids[i]);
            try {
                results[i] =
                    interpret_outlier(data, normal_rows, outlier_ids[i], prior, cfg, seed);
            } catch (const std::exception& e) {
                Interpretation failed;
                failed.outlier_id = outlier_ids[i];
                failed.failed = true;
                failed.flags.push_back(std::string("error: ") + e.what());
                results[i] = std::move(failed);
            }
        }
    };

    std::size_t n_threads = cfg.threads != 0 ? cfg.threads : std::thread::hardware_concurrency();
    n_threads = std::max<std::size_t>(1, std::min(n_threads, outlier_ids.size()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return results;
}

} // namespace coin
