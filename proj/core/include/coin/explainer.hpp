#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coin/dataset.hpp"
#include "coin/sampler.hpp"

namespace coin {

// Fixed label convention throughout: context members (inliers) are +1,
// synthetic outlier-class points are -1.
inline constexpr double kInlierLabel = 1.0;
inline constexpr double kOutlierLabel = -1.0;

// Resolution floor; attribute spacings below this are clamped.
inline constexpr double kResolutionFloor = 1e-8;

struct LinearBoundary {
    std::vector<double> w;
    double intercept = 0.0;
    double penalty = 0.0;   // l1 strength the fit used
    double objective = 0.0; // mean hinge + penalty * ||w||_1 at the solution
    bool converged = false;

    double decision(std::span<const double> x) const;
    double weight_norm2() const;
    std::size_t nonzero_weights(double eps = 0.0) const;
};

// Local density scales of one cluster. per_attribute[m] is the mean per-axis
// gap |x[m] - nn(x)[m]| to each member's nearest other member (nearest in the
// full space); cluster_gamma is the mean full-space nearest-neighbor distance.
struct ResolutionProfile {
    std::vector<double> per_attribute;
    double cluster_gamma = 0.0;
};

// Everything one local classifier says about (query, cluster).
struct ClusterEvidence {
    std::size_t cluster_size = 0;
    std::vector<double> centroid;
    LinearBoundary boundary;
    ResolutionProfile resolution;
    std::vector<double> scores; // |w[m]| / per_attribute[m]
    double margin = 0.0;        // |decision(query)| / ||w||_2, 0 when w == 0
    double abs_decision = 0.0;  // |decision(query)|
    bool degenerate = false;    // w == 0
};

// Minimizes mean hinge loss of w.x + intercept (intercept unpenalized) plus
// penalty * ||w||_1. Proximal subgradient phase (step 1/sqrt(t), soft
// thresholding, at most 5000 iterations, 1e-6 relative-objective stop) on
// internally standardized coordinates, then exact cyclic coordinate polish of
// the piecewise-linear objective. `best_objective_trace`, when given,
// receives the best-so-far objective per subgradient iteration.
LinearBoundary fit_l1_maxmargin(const PointMatrix& inliers, const PointMatrix& outliers,
                                double penalty, std::uint64_t seed,
                                std::vector<double>* best_objective_trace = nullptr);

// Picks the grid value with the best holdout accuracy on a stratified split
// (holdout_fraction per class); ties go to the larger penalty.
double select_penalty(const PointMatrix& inliers, const PointMatrix& outliers,
                      std::span<const double> grid, double holdout_fraction,
                      std::uint64_t seed);

ResolutionProfile attribute_resolution(const PointMatrix& cluster);

struct ExplainOptions {
    std::vector<double> lambda_grid{0.001, 0.003, 0.01, 0.03, 0.1, 0.3};
    double holdout_fraction = 0.2;
};

// Full per-cluster evidence: validation-selected penalty, fitted boundary,
// resolution, attribute scores and margin. Clusters with fewer than two
// members fall back to `fallback_resolution` (they carry no spacing of their
// own).
ClusterEvidence explain_against_cluster(std::span<const double> query, const PointMatrix& cluster,
                                        const SyntheticOutlierClass& synthetic,
                                        const ExplainOptions& options, std::uint64_t seed,
                                        const ResolutionProfile* fallback_resolution = nullptr);

// Formula pieces, shared with the aggregation layer and tests.
double boundary_margin(const LinearBoundary& boundary, std::span<const double> query);
std::vector<double> attribute_scores(const LinearBoundary& boundary,
                                     const ResolutionProfile& resolution);

} // namespace coin
