#include "coin/explainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "coin/rng.hpp"

namespace coin {

double LinearBoundary::decision(std::span<const double> x) const {
    double acc = intercept;
    for (std::size_t m = 0; m < w.size(); ++m) acc += w[m] * x[m];
    return acc;
}

double LinearBoundary::weight_norm2() const {
    double acc = 0.0;
    for (const double v : w) acc += v * v;
    return std::sqrt(acc);
}

std::size_t LinearBoundary::nonzero_weights(double eps) const {
    std::size_t count = 0;
    for (const double v : w) count += std::abs(v) > eps ? 1 : 0;
    return count;
}

namespace {

// Training problem in standardized coordinates. The substitution
// x~ = (x - mu) / sigma, w~ = w * sigma (per axis) leaves the objective
// identical while giving the solver unit-scale geometry; the l1 term becomes
// a per-coordinate penalty lambda / sigma_m.
struct Standardized {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<double> x;      // n x m
    std::vector<double> y;      // +1 inliers, -1 outliers
    std::vector<double> mean;   // m
    std::vector<double> sigma;  // m (1.0 where the column is constant)
};

Standardized standardize(const PointMatrix& inliers, const PointMatrix& outliers) {
    Standardized s;
    s.m = inliers.n_cols;
    s.n = inliers.rows() + outliers.rows();
    s.x.reserve(s.n * s.m);
    s.y.reserve(s.n);
    for (std::size_t i = 0; i < inliers.rows(); ++i) {
        s.x.insert(s.x.end(), inliers.row(i).begin(), inliers.row(i).end());
        s.y.push_back(kInlierLabel);
    }
    for (std::size_t i = 0; i < outliers.rows(); ++i) {
        s.x.insert(s.x.end(), outliers.row(i).begin(), outliers.row(i).end());
        s.y.push_back(kOutlierLabel);
    }

    s.mean.assign(s.m, 0.0);
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t d = 0; d < s.m; ++d) s.mean[d] += s.x[i * s.m + d];
    for (double& v : s.mean) v /= static_cast<double>(s.n);

    s.sigma.assign(s.m, 0.0);
    for (std::size_t i = 0; i < s.n; ++i) {
        for (std::size_t d = 0; d < s.m; ++d) {
            const double c = s.x[i * s.m + d] - s.mean[d];
            s.sigma[d] += c * c;
        }
    }
    for (double& v : s.sigma) {
        v = std::sqrt(v / static_cast<double>(s.n));
        if (!(v > 1e-12)) v = 1.0;
    }
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t d = 0; d < s.m; ++d)
            s.x[i * s.m + d] = (s.x[i * s.m + d] - s.mean[d]) / s.sigma[d];
    return s;
}

double objective_of(const Standardized& s, const std::vector<double>& w, double b,
                    const std::vector<double>& penalty_per_coord) {
    double hinge = 0.0;
    for (std::size_t i = 0; i < s.n; ++i) {
        double z = b;
        for (std::size_t d = 0; d < s.m; ++d) z += w[d] * s.x[i * s.m + d];
        hinge += std::max(0.0, 1.0 - s.y[i] * z);
    }
    double pen = 0.0;
    for (std::size_t d = 0; d < s.m; ++d) pen += penalty_per_coord[d] * std::abs(w[d]);
    return hinge / static_cast<double>(s.n) + pen;
}

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

// Exact minimizer of the convex piecewise-linear restriction of the objective
// to one coordinate. Candidates are the hinge breakpoints plus the l1 kink;
// the minimum of a convex PWL function is always attained at one of them.
struct CoordinateProblem {
    const Standardized* s;
    std::vector<double>* decision; // cached w.x~ + b per point
};

double eval_coordinate(const CoordinateProblem& p, std::size_t coord, bool is_intercept,
                       double current, double candidate, double penalty_coeff,
                       double penalty_rest) {
    const auto& s = *p.s;
    const double delta = candidate - current;
    double hinge = 0.0;
    for (std::size_t i = 0; i < s.n; ++i) {
        const double xi = is_intercept ? 1.0 : s.x[i * s.m + coord];
        const double margin = s.y[i] * ((*p.decision)[i] + xi * delta);
        hinge += std::max(0.0, 1.0 - margin);
    }
    const double pen = is_intercept ? 0.0 : penalty_coeff * std::abs(candidate);
    return hinge / static_cast<double>(s.n) + pen + penalty_rest;
}

bool polish_coordinate(const CoordinateProblem& p, std::size_t coord, bool is_intercept,
                       double& value, double penalty_coeff, double penalty_rest,
                       double* objective_out) {
    const auto& s = *p.s;
    std::vector<double> candidates;
    candidates.reserve(s.n + 2);
    candidates.push_back(value);
    if (!is_intercept) candidates.push_back(0.0);
    for (std::size_t i = 0; i < s.n; ++i) {
        const double xi = is_intercept ? 1.0 : s.x[i * s.m + coord];
        const double a = s.y[i] * xi;
        if (std::abs(a) < 1e-300) continue;
        // margin_i(v) = y_i * (decision_i + xi * (v - value)); kink where it is 1.
        const double rest = s.y[i] * (*p.decision)[i] - a * value;
        candidates.push_back((1.0 - rest) / a);
    }

    double best_v = value;
    double best_f = eval_coordinate(p, coord, is_intercept, value, value, penalty_coeff,
                                    penalty_rest);
    for (const double v : candidates) {
        if (!std::isfinite(v)) continue;
        const double f = eval_coordinate(p, coord, is_intercept, value, v, penalty_coeff,
                                         penalty_rest);
        if (f < best_f - 1e-15 ||
            (f <= best_f + 1e-15 && std::abs(v) < std::abs(best_v) - 1e-15)) {
            best_f = f;
            best_v = v;
        }
    }
    if (objective_out) *objective_out = best_f;
    if (best_v == value) return false;

    const double delta = best_v - value;
    for (std::size_t i = 0; i < s.n; ++i) {
        const double xi = is_intercept ? 1.0 : s.x[i * s.m + coord];
        (*p.decision)[i] += xi * delta;
    }
    value = best_v;
    return true;
}

} // namespace

LinearBoundary fit_l1_maxmargin(const PointMatrix& inliers, const PointMatrix& outliers,
                                double penalty, std::uint64_t /*seed*/,
                                std::vector<double>* best_objective_trace) {
    if (inliers.rows() == 0 || outliers.rows() == 0)
        throw InputError("both classes must be nonempty");
    if (inliers.n_cols != outliers.n_cols) throw InputError("class dimension mismatch");
    if (penalty < 0.0) throw InputError("penalty must be nonnegative");

    const Standardized s = standardize(inliers, outliers);
    std::vector<double> penalty_per_coord(s.m);
    for (std::size_t d = 0; d < s.m; ++d) penalty_per_coord[d] = penalty / s.sigma[d];

    constexpr std::size_t kMaxIterations = 5000;
    constexpr std::size_t kCheckInterval = 50;
    constexpr double kRelTolerance = 1e-6;

    std::vector<double> w(s.m, 0.0);
    double b = 0.0;
    std::vector<double> best_w = w;
    double best_b = b;
    double best_f = objective_of(s, w, b, penalty_per_coord);
    double checkpoint_f = best_f;
    bool converged = false;

    std::vector<double> margin(s.n);
    std::vector<double> grad(s.m);
    for (std::size_t t = 1; t <= kMaxIterations; ++t) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < s.n; ++i) {
            double z = b;
            for (std::size_t d = 0; d < s.m; ++d) z += w[d] * s.x[i * s.m + d];
            margin[i] = s.y[i] * z;
            if (margin[i] < 1.0) {
                for (std::size_t d = 0; d < s.m; ++d)
                    grad[d] -= s.y[i] * s.x[i * s.m + d];
                grad_b -= s.y[i];
            }
        }
        const double inv_n = 1.0 / static_cast<double>(s.n);
        const double step = 1.0 / std::sqrt(static_cast<double>(t));
        for (std::size_t d = 0; d < s.m; ++d)
            w[d] = soft_threshold(w[d] - step * grad[d] * inv_n, step * penalty_per_coord[d]);
        b -= step * grad_b * inv_n;

        const double f = objective_of(s, w, b, penalty_per_coord);
        if (!std::isfinite(f)) throw DegenerateError("boundary fit produced a non-finite objective");
        if (f < best_f) {
            best_f = f;
            best_w = w;
            best_b = b;
        }
        if (best_objective_trace) best_objective_trace->push_back(best_f);

        if (t % kCheckInterval == 0) {
            if (checkpoint_f - best_f < kRelTolerance * std::max(1.0, std::abs(checkpoint_f))) {
                converged = true;
                break;
            }
            checkpoint_f = best_f;
        }
    }

    // Exact cyclic coordinate polish. Each restriction is convex and
    // piecewise linear, so the per-coordinate minimum is found exactly; the
    // sweep settles in a few passes and pins zero coordinates to zero.
    std::vector<double> decision(s.n);
    for (std::size_t i = 0; i < s.n; ++i) {
        double z = best_b;
        for (std::size_t d = 0; d < s.m; ++d) z += best_w[d] * s.x[i * s.m + d];
        decision[i] = z;
    }
    CoordinateProblem problem{&s, &decision};
    double polished_f = best_f;
    for (std::size_t sweep = 0; sweep < 100; ++sweep) {
        bool any_change = false;
        for (std::size_t d = 0; d <= s.m; ++d) {
            const bool is_intercept = d == s.m;
            double penalty_rest = 0.0;
            if (!is_intercept) {
                for (std::size_t j = 0; j < s.m; ++j)
                    if (j != d) penalty_rest += penalty_per_coord[j] * std::abs(best_w[j]);
            } else {
                for (std::size_t j = 0; j < s.m; ++j)
                    penalty_rest += penalty_per_coord[j] * std::abs(best_w[j]);
            }
            double& value = is_intercept ? best_b : best_w[d];
            any_change |= polish_coordinate(problem, d, is_intercept, value,
                                            is_intercept ? 0.0 : penalty_per_coord[d],
                                            penalty_rest, &polished_f);
        }
        if (!any_change) {
            converged = true;
            break;
        }
    }
    if (!std::isfinite(polished_f))
        throw DegenerateError("boundary fit produced a non-finite objective");

    // Map back to the original coordinates.
    LinearBoundary out;
    out.penalty = penalty;
    out.w.resize(s.m);
    out.intercept = best_b;
    for (std::size_t d = 0; d < s.m; ++d) {
        out.w[d] = best_w[d] / s.sigma[d];
        out.intercept -= best_w[d] * s.mean[d] / s.sigma[d];
    }
    out.converged = converged;

    // Report the objective in original coordinates (identical up to rounding).
    double hinge = 0.0;
    for (std::size_t i = 0; i < inliers.rows(); ++i)
        hinge += std::max(0.0, 1.0 - kInlierLabel * out.decision(inliers.row(i)));
    for (std::size_t i = 0; i < outliers.rows(); ++i)
        hinge += std::max(0.0, 1.0 - kOutlierLabel * out.decision(outliers.row(i)));
    double l1 = 0.0;
    for (const double v : out.w) l1 += std::abs(v);
    out.objective = hinge / static_cast<double>(s.n) + penalty * l1;
    return out;
}

double select_penalty(const PointMatrix& inliers, const PointMatrix& outliers,
                      std::span<const double> grid, double holdout_fraction,
                      std::uint64_t seed) {
    if (grid.empty()) throw InputError("penalty grid is empty");
    if (inliers.rows() < 4 || outliers.rows() < 4)
        throw InputError("penalty selection needs at least 4 points per class");
    if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0)
        throw InputError("holdout_fraction must lie in (0,1)");

    std::vector<double> sorted(grid.begin(), grid.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    Rng rng(seed);
    const auto split = [&](const PointMatrix& cls) {
        std::vector<std::size_t> order(cls.rows());
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        std::size_t holdout = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(holdout_fraction * cls.rows())));
        holdout = std::min(holdout, cls.rows() - 1);
        PointMatrix train, test;
        train.n_cols = test.n_cols = cls.n_cols;
        for (std::size_t i = 0; i < order.size(); ++i)
            (i < holdout ? test : train).append(cls.row(order[i]));
        return std::pair{std::move(train), std::move(test)};
    };
    const auto [in_train, in_test] = split(inliers);
    const auto [out_train, out_test] = split(outliers);

    double best_lambda = sorted.front();
    double best_acc = -1.0;
    for (const double lambda : sorted) {
        const LinearBoundary fit = fit_l1_maxmargin(in_train, out_train, lambda, seed);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < in_test.rows(); ++i)
            correct += fit.decision(in_test.row(i)) >= 0.0 ? 1 : 0;
        for (std::size_t i = 0; i < out_test.rows(); ++i)
            correct += fit.decision(out_test.row(i)) < 0.0 ? 1 : 0;
        const double acc =
            static_cast<double>(correct) / static_cast<double>(in_test.rows() + out_test.rows());
        if (acc >= best_acc) { // >= : ties prefer the larger (sparser) penalty
            best_acc = acc;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

ResolutionProfile attribute_resolution(const PointMatrix& cluster) {
    const std::size_t n = cluster.rows();
    if (n < 2) throw InputError("attribute resolution needs at least 2 members");
    const std::size_t m = cluster.n_cols;

    ResolutionProfile profile;
    profile.per_attribute.assign(m, 0.0);
    double gamma = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t nn = n;
        double nn_d2 = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d2 = squared_distance(cluster.row(i), cluster.row(j));
            if (d2 < nn_d2) {
                nn_d2 = d2;
                nn = j;
            }
        }
        gamma += std::sqrt(nn_d2);
        for (std::size_t d = 0; d < m; ++d)
            profile.per_attribute[d] += std::abs(cluster.row(i)[d] - cluster.row(nn)[d]);
    }
    for (double& v : profile.per_attribute)
        v = std::max(kResolutionFloor, v / static_cast<double>(n));
    profile.cluster_gamma = std::max(kResolutionFloor, gamma / static_cast<double>(n));
    return profile;
}

double boundary_margin(const LinearBoundary& boundary, std::span<const double> query) {
    const double norm = boundary.weight_norm2();
    if (norm == 0.0) return 0.0;
    return std::abs(boundary.decision(query)) / norm;
}

std::vector<double> attribute_scores(const LinearBoundary& boundary,
                                     const ResolutionProfile& resolution) {
    std::vector<double> scores(boundary.w.size(), 0.0);
    if (boundary.weight_norm2() == 0.0) return scores;
    for (std::size_t m = 0; m < scores.size(); ++m)
        scores[m] = std::abs(boundary.w[m]) / resolution.per_attribute[m];
    return scores;
}

ClusterEvidence explain_against_cluster(std::span<const double> query, const PointMatrix& cluster,
                                        const SyntheticOutlierClass& synthetic,
                                        const ExplainOptions& options, std::uint64_t seed,
                                        const ResolutionProfile* fallback_resolution) {
    if (cluster.rows() == 0) throw InputError("cannot explain against an empty cluster");

    double lambda;
    if (cluster.rows() >= 4 && synthetic.points.rows() >= 4) {
        lambda = select_penalty(cluster, synthetic.points, options.lambda_grid,
                                options.holdout_fraction, stable_seed(seed, "lambda"));
    } else {
        // Too few points to validate; take the middle of the grid.
        std::vector<double> sorted = options.lambda_grid;
        std::sort(sorted.begin(), sorted.end());
        lambda = sorted[sorted.size() / 2];
    }

    ClusterEvidence evidence;
    evidence.cluster_size = cluster.rows();
    evidence.boundary =
        fit_l1_maxmargin(cluster, synthetic.points, lambda, stable_seed(seed, "fit"));
    if (cluster.rows() >= 2) {
        evidence.resolution = attribute_resolution(cluster);
    } else if (fallback_resolution) {
        evidence.resolution = *fallback_resolution;
    } else {
        throw InputError("cluster of size 1 needs a fallback resolution profile");
    }
    evidence.scores = attribute_scores(evidence.boundary, evidence.resolution);
    evidence.abs_decision = std::abs(evidence.boundary.decision(query));
    evidence.margin = boundary_margin(evidence.boundary, query);
    evidence.degenerate = evidence.boundary.weight_norm2() == 0.0;
    if (evidence.degenerate) {
        evidence.margin = 0.0;
        evidence.abs_decision = 0.0;
    }
    return evidence;
}

} // namespace coin
