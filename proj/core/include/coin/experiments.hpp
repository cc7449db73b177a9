#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "coin/config.hpp"
#include "coin/dataset.hpp"
#include "coin/interpret.hpp"

namespace coin {

// ---------------------------------------------------------------------------
// Synthetic benchmark data with planted ground truth
// ---------------------------------------------------------------------------

enum class SyntheticVariant { Syn1, Syn2 };

struct SyntheticSpec {
    SyntheticVariant variant = SyntheticVariant::Syn1;
    std::size_t n_inliers = 375;
    std::size_t n_outliers = 30;
    std::size_t n_attributes = 15;
    std::size_t n_clusters = 5;
    std::uint64_t seed = 0;
};

struct GroundTruth {
    std::vector<std::string> outlier_ids; // row order
    std::map<std::string, std::vector<std::size_t>> planted; // id -> attribute indices
    std::vector<bool> is_outlier;         // per dataset row
};

// Generator internals kept for oracle checks: cluster parameters and each
// outlier's parent cluster(s).
struct GeneratorModel {
    std::size_t n_clusters = 0;
    std::size_t n_attributes = 0;
    std::vector<double> means; // clusters x attributes, row-major
    std::vector<double> stds;
    std::vector<std::vector<std::size_t>> parents; // per outlier, 1 (Syn1) or 2 (Syn2) clusters

    double mean_of(std::size_t c, std::size_t m) const { return means[c * n_attributes + m]; }
    double std_of(std::size_t c, std::size_t m) const { return stds[c * n_attributes + m]; }
};

struct SyntheticData {
    Dataset dataset;
    GroundTruth truth;
    GeneratorModel model;
};

// Gaussian clusters plus planted outliers. Every planted attribute value lies
// outside every cluster's +-3 sigma band on that axis; unplanted attributes
// stay inside the parent band (Syn1) or inside the hull of the two parents'
// bands (Syn2, whose outliers sit at the midpoint of a near cluster pair).
SyntheticData generate_synthetic(const SyntheticSpec& spec);

void save_ground_truth(const GroundTruth& truth, const std::string& path);
GroundTruth load_ground_truth(const std::string& path, const Dataset& data);

// Appends `count` attributes drawn i.i.d. from N(0, (scale * sigma_bar)^2),
// sigma_bar being the mean per-attribute standard deviation of the input.
// Returns the augmented dataset and the indices of the new columns.
std::pair<Dataset, std::vector<std::size_t>> augment_noise_attributes(const Dataset& data,
                                                                      std::size_t count,
                                                                      double scale,
                                                                      std::uint64_t seed);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Per-query precision/recall/F1 against planted attributes, averaged over
// queries. Empty prediction scores zero; the key sets must match exactly.
Prf attribute_prf(const std::map<std::string, std::vector<std::size_t>>& predicted,
                  const std::map<std::string, std::vector<std::size_t>>& truth);

// Probability that a random positive outscores a random negative; ties count
// half. Rank-based (the tests cross-check against all-pairs enumeration).
double ranking_auc(std::span<const double> scores, std::span<const int> labels);

// ---------------------------------------------------------------------------
// CAL baseline: lasso on one unresolved two-class problem
// ---------------------------------------------------------------------------

struct LassoFit {
    std::vector<double> coefficients;
    double intercept = 0.0;
    double penalty = 0.0;
    bool converged = false;

    double predict(std::span<const double> x) const;
};

// Squared loss + l1 via cyclic coordinate descent; intercept unpenalized.
LassoFit fit_lasso(const PointMatrix& x, std::span<const double> y, double penalty);

struct CalResult {
    std::vector<std::size_t> attributes; // nonzero coefficients, ascending index
    double outlierness = 0.0;            // 5-fold CV sign accuracy
    LassoFit fit;
};

// Single local lasso against the whole (unclustered) context.
CalResult baseline_cal(const Dataset& data, std::span<const std::size_t> normal_rows,
                       std::span<const double> query, const Config& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Evaluation protocols
// ---------------------------------------------------------------------------

struct FaithfulnessResult {
    Prf coin;
    Prf cal;
    std::map<std::string, std::vector<std::size_t>> coin_predicted;
    std::map<std::string, std::vector<std::size_t>> cal_predicted;
};

// Interprets every true outlier and scores the predicted attribute sets
// against the planted truth; optionally runs the CAL baseline alongside.
FaithfulnessResult faithfulness_eval(const Dataset& data, const GroundTruth& truth,
                                     const Config& cfg, std::uint64_t seed, bool with_cal);

struct RankingQuery {
    std::string id;
    int label = 0; // 1 = true outlier
    double coin_score = 0.0;
    double cal_score = 0.0;
};

struct RankingResult {
    double coin_auc = 0.0;
    double cal_auc = 0.0;
    std::vector<RankingQuery> queries;
};

// Mixed-query protocol: all true outliers plus an equal number of sampled
// inliers are scored; AUC of the induced ranking.
RankingResult ranking_eval(const Dataset& data, const GroundTruth& truth, const Config& cfg,
                           std::uint64_t seed, bool with_cal);

struct BetaSweepPoint {
    double beta = 0.0;
    double auc_mean = 0.0;
    double auc_q25 = 0.0;
    double auc_q75 = 0.0;
};

// Ranking AUC as the significance weight of the simulated attribute block
// varies; original attributes keep weight 1 and directions stay neutral.
// Local boundaries are fitted once per repeat and re-scored per beta.
std::vector<BetaSweepPoint> beta_sweep(const Dataset& augmented, const GroundTruth& truth,
                                       std::span<const std::size_t> simulated_attrs,
                                       std::span<const double> beta_grid, const Config& cfg,
                                       std::size_t repeats, std::uint64_t seed);

} // namespace coin
