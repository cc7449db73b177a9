#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coin/config.hpp"
#include "coin/context.hpp"
#include "coin/dataset.hpp"
#include "coin/explainer.hpp"

namespace coin {

// Per-attribute prior: beta[m] >= 0 weights how much attribute m matters,
// direction[m] in {-1,0,+1} encodes the expected side of the deviation
// (+1: outliers run high on m, -1: low, 0: no preference).
struct PriorKnowledge {
    std::vector<double> beta;
    std::vector<int> direction;

    static PriorKnowledge neutral(std::size_t n_attributes);
    // Broadcasts scalar config entries to n_attributes and validates.
    static PriorKnowledge from_config(const Config& cfg, std::size_t n_attributes);
    void validate(std::size_t n_attributes) const;
};

struct AttributeScore {
    std::size_t index = 0;
    std::string name;
    double score = 0.0;
};

// The interpretation triple for one query: suspicious attributes, a unified
// outlierness score, and the resolved context clusters (as evidence).
struct Interpretation {
    std::string outlier_id;
    std::vector<double> query_point;
    std::vector<AttributeScore> abnormal_attributes; // selected set, descending score
    std::vector<double> attribute_score_vector;      // all attributes
    double outlierness = 0.0;
    std::size_t context_size = 0;           // surviving members across clusters
    std::size_t chosen_l = 1;
    std::size_t pruned_clusters = 0;
    std::vector<ClusterEvidence> evidence;  // one entry per surviving cluster
    std::vector<std::string> flags;
    bool failed = false;                    // batch runs collect failures here
};

// Cluster-size weighted mean of the per-cluster attribute scores.
// context_size counts surviving members, so the weights sum to one.
std::vector<double> aggregate_attribute_scores(std::span<const ClusterEvidence> evidence,
                                               std::size_t context_size);

// Indices with score >= theta_rel * max score, descending by score.
// All-zero scores select nothing.
std::vector<std::size_t> select_abnormal_attributes(std::span<const double> scores,
                                                    double theta_rel);

// Size-weighted mean of margin / cluster_gamma (prior-free form).
double base_outlierness(std::span<const ClusterEvidence> evidence, std::size_t context_size);

// Prior-refined per-cluster outlierness. Weight components that point against
// the expected direction are kept, conforming ones are zeroed out of w'; then
//   d = || (|g(q)| / (gamma * ||w||)) * (w' / ||w||) o beta ||_2.
// With a neutral prior this reduces exactly to margin / gamma.
double prior_adjusted_cluster_outlierness(const LinearBoundary& boundary,
                                          const ResolutionProfile& resolution,
                                          std::span<const double> query,
                                          const PriorKnowledge& prior);

// Size-weighted mean of the prior-refined cluster terms.
double overall_outlierness(std::span<const ClusterEvidence> evidence,
                           const PriorKnowledge& prior, std::size_t context_size);

// Full pipeline for one query: context, cluster resolution, synthetic
// expansion, one local boundary per surviving cluster, aggregation.
Interpretation interpret_outlier(const Dataset& data, std::span<const std::size_t> normal_rows,
                                 const std::string& outlier_id, const PriorKnowledge& prior,
                                 const Config& cfg, std::uint64_t seed);

// Same pipeline for an arbitrary query point (used by evaluation protocols
// where inlier instances are fed through as queries).
Interpretation interpret_point(const Dataset& data, std::span<const std::size_t> normal_rows,
                               std::span<const double> query, const std::string& query_tag,
                               const PriorKnowledge& prior, const Config& cfg,
                               std::uint64_t seed);

// One interpretation per id, in input order. Normal instances are everything
// not listed. Per-query seeds are derived from (master_seed, id), so results
// do not depend on execution order or thread count; per-query failures come
// back as flagged records instead of aborting the batch.
std::vector<Interpretation> interpret_all(const Dataset& data,
                                          const std::vector<std::string>& outlier_ids,
                                          const PriorKnowledge& prior, const Config& cfg,
                                          std::uint64_t master_seed);

} // namespace coin
