#include "coin/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "coin/rng.hpp"
#include "coin/sampler.hpp"

namespace coin {

namespace {

using json = nlohmann::ordered_json;

// Planted values land this many mean-sigmas beyond the all-cluster band.
constexpr double kPlantMarginLo = 1.5;
constexpr double kPlantMarginHi = 3.0;
// Per-axis offset (in sigmas) between the two clusters of a Syn2 pair:
// narrow on most axes so a midpoint query is in the vicinity of both,
// wide on the pair's designated axes so a band gap opens between them.
constexpr double kCompanionLo = 2.0;
constexpr double kCompanionHi = 4.0;
constexpr double kPairGapLo = 9.0;
constexpr double kPairGapHi = 13.0;

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& f) {
    std::size_t n_threads = threads != 0 ? threads : std::thread::hardware_concurrency();
    n_threads = std::max<std::size_t>(1, std::min(n_threads, n));
    if (n_threads == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            f(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    if (v.empty()) return 0.0;
    const double h = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

} // namespace

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    const std::size_t m = spec.n_attributes;
    const std::size_t c = spec.n_clusters;
    if (m < 2) throw InputError("synthetic data needs at least 2 attributes");
    if (c < 1) throw InputError("synthetic data needs at least 1 cluster");
    if (spec.variant == SyntheticVariant::Syn2 && c < 2)
        throw InputError("the multi-neighbor variant needs at least 2 clusters");
    if (spec.n_inliers < c) throw InputError("need at least one inlier per cluster");

    Rng rng(spec.seed);
    GeneratorModel model;
    model.n_clusters = c;
    model.n_attributes = m;
    model.means.assign(c * m, 0.0);
    model.stds.assign(c * m, 0.0);

    // Cluster pairs for the multi-neighbor variant: the last n_pairs clusters
    // are companions of the first n_pairs, a few sigmas away on most axes
    // (so a midpoint query is in the vicinity of both) and far apart on the
    // pair's designated gap axes, opening a band gap between the two
    // clusters. Companions share the anchor's spread so the two halves of a
    // query's neighborhood stay balanced, and the other clusters are redrawn
    // off the middle of each gap so the planted slot stays clear.
    const std::size_t q_hi = std::min<std::size_t>(5, m);
    const std::size_t q_lo = std::min<std::size_t>(2, q_hi);
    const std::size_t n_pairs = spec.variant == SyntheticVariant::Syn2 ? c / 2 : 0;
    const std::size_t n_anchors = c - n_pairs;
    for (std::size_t i = 0; i < n_anchors * m; ++i) model.means[i] = rng.uniform(-10.0, 10.0);
    for (std::size_t i = 0; i < n_anchors * m; ++i) model.stds[i] = rng.uniform(0.5, 1.5);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::vector<std::size_t>> pair_gap_axes;
    std::vector<std::size_t> axis_order(m);
    if (n_pairs > 0) {
        for (std::size_t p = 0; p < n_pairs; ++p) {
            const std::size_t companion = n_anchors + p;
            for (std::size_t d = 0; d < m; ++d)
                model.stds[companion * m + d] = model.std_of(p, d);
            pairs.emplace_back(p, companion);
        }

        // Disjoint gap-axis sets, one per pair.
        std::iota(axis_order.begin(), axis_order.end(), 0);
        rng.shuffle(axis_order);
        std::size_t cursor = 0;
        for (std::size_t p = 0; p < n_pairs; ++p) {
            std::size_t n_gap = q_lo + rng.uniform_index(q_hi - q_lo + 1);
            n_gap = std::min(n_gap, m - cursor);
            if (n_gap == 0)
                throw InputError("not enough attributes for the requested cluster pairs");
            std::vector<std::size_t> gap_axes(axis_order.begin() + cursor,
                                              axis_order.begin() + cursor + n_gap);
            cursor += n_gap;
            std::sort(gap_axes.begin(), gap_axes.end());
            pair_gap_axes.push_back(std::move(gap_axes));
        }

        for (std::size_t p = 0; p < n_pairs; ++p) {
            const std::size_t companion = n_anchors + p;
            for (std::size_t d = 0; d < m; ++d) {
                const bool wide = std::binary_search(pair_gap_axes[p].begin(),
                                                     pair_gap_axes[p].end(), d);
                const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
                const double mult = wide ? rng.uniform(kPairGapLo, kPairGapHi)
                                         : rng.uniform(kCompanionLo, kCompanionHi);
                model.means[companion * m + d] =
                    model.mean_of(p, d) + sign * mult * model.std_of(p, d);
            }
        }

        // Keep every other cluster's band away from the middle of each gap.
        for (std::size_t p = 0; p < n_pairs; ++p) {
            const auto [ca, cb] = pairs[p];
            for (const std::size_t d : pair_gap_axes[p]) {
                const double mid = 0.5 * (model.mean_of(ca, d) + model.mean_of(cb, d));
                const double half = 1.5 * model.std_of(ca, d);
                const double slot_lo = mid - half;
                const double slot_hi = mid + half;
                for (std::size_t g = 0; g < n_pairs + (n_anchors - n_pairs); ++g) {
                    // Groups move as a unit: a pair keeps its companion
                    // offset, a lone cluster moves alone.
                    std::size_t lead, mate;
                    if (g < n_pairs) {
                        lead = pairs[g].first;
                        mate = pairs[g].second;
                    } else {
                        lead = mate = n_pairs + (g - n_pairs); // lone anchors
                    }
                    if (lead == ca) continue;
                    const double delta = model.mean_of(mate, d) - model.mean_of(lead, d);
                    const auto band = [&](double a) {
                        const double lo = std::min(a - 3.0 * model.std_of(lead, d),
                                                   a + delta - 3.0 * model.std_of(mate, d));
                        const double hi = std::max(a + 3.0 * model.std_of(lead, d),
                                                   a + delta + 3.0 * model.std_of(mate, d));
                        return std::pair{lo, hi};
                    };
                    double a = model.mean_of(lead, d);
                    bool clear = false;
                    for (std::size_t attempt = 0; attempt < 500; ++attempt) {
                        const auto [lo, hi] = band(a);
                        if (hi <= slot_lo || lo >= slot_hi) {
                            clear = true;
                            break;
                        }
                        a = rng.uniform(-10.0, 10.0);
                    }
                    if (!clear) {
                        const auto [lo, hi] = band(a);
                        a += slot_hi + 0.1 - lo; // push the whole group past the slot
                    }
                    model.means[lead * m + d] = a;
                    if (mate != lead) model.means[mate * m + d] = a + delta;
                }
            }
        }
    }

    std::vector<double> env_lo(m, std::numeric_limits<double>::infinity());
    std::vector<double> env_hi(m, -std::numeric_limits<double>::infinity());
    std::vector<double> sigma_bar(m, 0.0);
    for (std::size_t cl = 0; cl < c; ++cl) {
        for (std::size_t d = 0; d < m; ++d) {
            env_lo[d] = std::min(env_lo[d], model.mean_of(cl, d) - 3.0 * model.std_of(cl, d));
            env_hi[d] = std::max(env_hi[d], model.mean_of(cl, d) + 3.0 * model.std_of(cl, d));
            sigma_bar[d] += model.std_of(cl, d) / static_cast<double>(c);
        }
    }

    std::vector<double> values;
    values.reserve((spec.n_inliers + spec.n_outliers) * m);
    for (std::size_t cl = 0; cl < c; ++cl) {
        std::size_t count = spec.n_inliers / c + (cl < spec.n_inliers % c ? 1 : 0);
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t d = 0; d < m; ++d)
                values.push_back(rng.normal(model.mean_of(cl, d), model.std_of(cl, d)));
    }

    GroundTruth truth;
    truth.is_outlier.assign(spec.n_inliers + spec.n_outliers, false);

    // Point near the middle of the stretch between the pair's bands on one
    // axis, avoiding every other cluster's band. Such a value is outlying
    // with respect to each neighbor separately yet inside the range of the
    // data, and keeps the query roughly equidistant from both neighbors.
    const auto place_between_bands = [&](std::size_t ca, std::size_t cb, std::size_t d,
                                         double* out) {
        const double a_hi = model.mean_of(ca, d) + 3.0 * model.std_of(ca, d);
        const double a_lo = model.mean_of(ca, d) - 3.0 * model.std_of(ca, d);
        const double b_hi = model.mean_of(cb, d) + 3.0 * model.std_of(cb, d);
        const double b_lo = model.mean_of(cb, d) - 3.0 * model.std_of(cb, d);
        double lo = std::min(a_hi, b_hi);
        double hi = std::max(a_lo, b_lo);
        if (hi - lo <= 0.1 * sigma_bar[d]) return false;
        const double shrink = 0.05 * (hi - lo);
        lo += shrink;
        hi -= shrink;
        std::vector<std::pair<double, double>> free{{lo, hi}};
        for (std::size_t cl = 0; cl < c; ++cl) {
            if (cl == ca || cl == cb) continue;
            const double pad = 0.05 * sigma_bar[d];
            const double c_lo = model.mean_of(cl, d) - 3.0 * model.std_of(cl, d) - pad;
            const double c_hi = model.mean_of(cl, d) + 3.0 * model.std_of(cl, d) + pad;
            std::vector<std::pair<double, double>> next;
            for (const auto& [s, e] : free) {
                if (c_hi <= s || c_lo >= e) {
                    next.emplace_back(s, e);
                    continue;
                }
                if (c_lo > s) next.emplace_back(s, c_lo);
                if (c_hi < e) next.emplace_back(c_hi, e);
            }
            free = std::move(next);
        }
        const double target = lo + rng.uniform(0.42, 0.58) * (hi - lo);
        double best = 0.0;
        double best_gap = std::numeric_limits<double>::infinity();
        for (const auto& [s, e] : free) {
            if (e - s <= 0.1 * sigma_bar[d]) continue;
            const double candidate = std::clamp(target, s, e);
            if (std::abs(candidate - target) < best_gap) {
                best_gap = std::abs(candidate - target);
                best = candidate;
            }
        }
        if (!std::isfinite(best_gap)) return false;
        *out = best;
        return true;
    };

    for (std::size_t o = 0; o < spec.n_outliers; ++o) {
        std::vector<double> point(m);
        std::vector<std::size_t> parents;
        std::vector<std::size_t> planted;
        if (spec.variant == SyntheticVariant::Syn1) {
            const std::size_t parent = rng.uniform_index(c);
            parents = {parent};
            // Start from an in-band parent sample so unplanted axes stay
            // inside the parent's +-3 sigma envelope.
            bool accepted = false;
            for (std::size_t attempt = 0; attempt < 1000 && !accepted; ++attempt) {
                accepted = true;
                for (std::size_t d = 0; d < m; ++d) {
                    point[d] = rng.normal(model.mean_of(parent, d), model.std_of(parent, d));
                    if (std::abs(point[d] - model.mean_of(parent, d)) >
                        3.0 * model.std_of(parent, d))
                        accepted = false;
                }
            }
            if (!accepted) {
                for (std::size_t d = 0; d < m; ++d) {
                    const double lo = model.mean_of(parent, d) - 3.0 * model.std_of(parent, d);
                    const double hi = model.mean_of(parent, d) + 3.0 * model.std_of(parent, d);
                    point[d] = std::clamp(point[d], lo, hi);
                }
            }

            const std::size_t q = q_lo + rng.uniform_index(q_hi - q_lo + 1);
            std::iota(axis_order.begin(), axis_order.end(), 0);
            rng.shuffle(axis_order);
            const double u = rng.uniform(kPlantMarginLo, kPlantMarginHi);

            planted.assign(axis_order.begin(), axis_order.begin() + q);
            // Excursions of comparable magnitude: every planted axis leaves
            // the all-cluster band by the same outlier-level stretch (plus
            // axis jitter), measured toward the nearer edge.
            double needed = 0.0;
            for (const std::size_t d : planted)
                needed = std::max(needed, std::min(point[d] - env_lo[d], env_hi[d] - point[d]));
            for (const std::size_t d : planted) {
                const double offset = needed * rng.uniform(1.0, 1.3) + u * sigma_bar[d];
                const bool up = env_hi[d] - point[d] <= point[d] - env_lo[d];
                point[d] += up ? offset : -offset;
            }
            std::sort(planted.begin(), planted.end());
        } else {
            const std::size_t pi = rng.uniform_index(pairs.size());
            const auto [ca, cb] = pairs[pi];
            parents = {ca, cb};
            for (std::size_t d = 0; d < m; ++d)
                point[d] = 0.5 * (model.mean_of(ca, d) + model.mean_of(cb, d));
            planted = pair_gap_axes[pi];
            for (const std::size_t d : planted) {
                if (place_between_bands(ca, cb, d, &point[d])) continue;
                // Other bands cover the whole gap: push past the global band
                // instead.
                const double exit =
                    std::min(point[d] - env_lo[d], env_hi[d] - point[d]);
                const double offset =
                    exit + rng.uniform(kPlantMarginLo, kPlantMarginHi) * sigma_bar[d];
                const bool up = env_hi[d] - point[d] <= point[d] - env_lo[d];
                point[d] += up ? offset : -offset;
            }
        }

        const std::string id = std::to_string(spec.n_inliers + o);
        truth.outlier_ids.push_back(id);
        truth.planted[id] = std::move(planted);
        truth.is_outlier[spec.n_inliers + o] = true;
        values.insert(values.end(), point.begin(), point.end());
        model.parents.push_back(std::move(parents));
    }

    std::vector<std::string> names(m);
    for (std::size_t d = 0; d < m; ++d) names[d] = "a" + std::to_string(d);
    std::vector<std::string> ids(spec.n_inliers + spec.n_outliers);
    for (std::size_t r = 0; r < ids.size(); ++r) ids[r] = std::to_string(r);

    return SyntheticData{Dataset(std::move(values), m, std::move(names), std::move(ids)),
                         std::move(truth), std::move(model)};
}

void save_ground_truth(const GroundTruth& truth, const std::string& path) {
    json j = json::object();
    for (const auto& id : truth.outlier_ids) j[id] = truth.planted.at(id);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

GroundTruth load_ground_truth(const std::string& path, const Dataset& data) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    json j;
    try {
        j = json::parse(buffer.str());
    } catch (const json::exception& e) {
        throw InputError("ground truth '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw InputError("ground truth root must be a JSON object");

    GroundTruth truth;
    truth.is_outlier.assign(data.rows(), false);
    for (const auto& [id, attrs] : j.items()) {
        const std::size_t row = data.row_of(id);
        truth.is_outlier[row] = true;
        truth.outlier_ids.push_back(id);
        std::vector<std::size_t> planted;
        for (const auto& a : attrs) {
            const auto idx = a.get<std::size_t>();
            if (idx >= data.cols())
                throw InputError("ground truth attribute index " + std::to_string(idx) +
                                 " out of range");
            planted.push_back(idx);
        }
        std::sort(planted.begin(), planted.end());
        truth.planted[id] = std::move(planted);
    }
    return truth;
}

std::pair<Dataset, std::vector<std::size_t>> augment_noise_attributes(const Dataset& data,
                                                                      std::size_t count,
                                                                      double scale,
                                                                      std::uint64_t seed) {
    if (count == 0) throw InputError("count must be positive");
    if (scale < 0.0) throw InputError("scale must be nonnegative");

    double sigma_bar = 0.0;
    for (std::size_t d = 0; d < data.cols(); ++d) {
        double mean = 0.0;
        for (std::size_t r = 0; r < data.rows(); ++r) mean += data.at(r, d);
        mean /= static_cast<double>(data.rows());
        double var = 0.0;
        for (std::size_t r = 0; r < data.rows(); ++r) {
            const double c = data.at(r, d) - mean;
            var += c * c;
        }
        if (data.rows() > 1) var /= static_cast<double>(data.rows() - 1);
        sigma_bar += std::sqrt(var) / static_cast<double>(data.cols());
    }

    Rng rng(seed);
    const double sd = scale * sigma_bar;
    const std::size_t m_new = data.cols() + count;
    std::vector<double> values;
    values.reserve(data.rows() * m_new);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        const auto row = data.row(r);
        values.insert(values.end(), row.begin(), row.end());
        for (std::size_t d = 0; d < count; ++d) values.push_back(rng.normal(0.0, sd));
    }

    std::vector<std::string> names = data.attribute_names();
    std::vector<std::size_t> new_indices;
    for (std::size_t d = 0; d < count; ++d) {
        names.push_back("noise_" + std::to_string(d));
        new_indices.push_back(data.cols() + d);
    }
    return {Dataset(std::move(values), m_new, std::move(names), data.instance_ids()),
            std::move(new_indices)};
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

Prf attribute_prf(const std::map<std::string, std::vector<std::size_t>>& predicted,
                  const std::map<std::string, std::vector<std::size_t>>& truth) {
    if (predicted.size() != truth.size())
        throw InputError("predicted and truth cover different query sets");

    Prf total;
    for (const auto& [id, true_attrs] : truth) {
        const auto it = predicted.find(id);
        if (it == predicted.end()) throw InputError("no prediction for query '" + id + "'");

        std::vector<std::size_t> a = it->second;
        std::vector<std::size_t> b = true_attrs;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        std::vector<std::size_t> common;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));

        const double inter = static_cast<double>(common.size());
        const double p = a.empty() ? 0.0 : inter / static_cast<double>(a.size());
        const double r = b.empty() ? 0.0 : inter / static_cast<double>(b.size());
        total.precision += p;
        total.recall += r;
        total.f1 += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    const auto n = static_cast<double>(truth.size());
    if (n > 0.0) {
        total.precision /= n;
        total.recall /= n;
        total.f1 /= n;
    }
    return total;
}

double ranking_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw InputError("scores and labels differ in length");
    std::size_t n_pos = 0;
    for (const int l : labels) n_pos += l != 0 ? 1 : 0;
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw InputError("both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over tie groups, then Mann-Whitney U.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] != 0) pos_rank_sum += avg_rank;
        i = j;
    }
    const double u = pos_rank_sum -
                     0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// ---------------------------------------------------------------------------
// Lasso / CAL
// ---------------------------------------------------------------------------

double LassoFit::predict(std::span<const double> x) const {
    double acc = intercept;
    for (std::size_t m = 0; m < coefficients.size(); ++m) acc += coefficients[m] * x[m];
    return acc;
}

LassoFit fit_lasso(const PointMatrix& x, std::span<const double> y, double penalty) {
    const std::size_t n = x.rows();
    const std::size_t m = x.n_cols;
    if (n == 0 || n != y.size()) throw InputError("design matrix and labels disagree");
    if (penalty < 0.0) throw InputError("penalty must be nonnegative");

    // Standardize columns and center the response; the l1 term becomes a
    // per-coordinate penalty lambda / sigma_m on the internal coefficients.
    std::vector<double> mean(m, 0.0), sigma(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < m; ++d) mean[d] += x.row(i)[d];
    for (double& v : mean) v /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < m; ++d) {
            const double c = x.row(i)[d] - mean[d];
            sigma[d] += c * c;
        }
    }
    std::vector<bool> constant(m, false);
    for (std::size_t d = 0; d < m; ++d) {
        sigma[d] = std::sqrt(sigma[d] / static_cast<double>(n));
        if (!(sigma[d] > 1e-12)) {
            sigma[d] = 1.0;
            constant[d] = true;
        }
    }
    double y_mean = 0.0;
    for (const double v : y) y_mean += v;
    y_mean /= static_cast<double>(n);

    std::vector<double> xs(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < m; ++d)
            xs[i * m + d] = (x.row(i)[d] - mean[d]) / sigma[d];

    std::vector<double> w(m, 0.0);
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - y_mean;

    std::vector<double> col_sq(m, 0.0);
    for (std::size_t d = 0; d < m; ++d) {
        for (std::size_t i = 0; i < n; ++i) col_sq[d] += xs[i * m + d] * xs[i * m + d];
        col_sq[d] /= static_cast<double>(n);
    }

    bool converged = false;
    for (std::size_t sweep = 0; sweep < 1000; ++sweep) {
        double max_delta = 0.0;
        for (std::size_t d = 0; d < m; ++d) {
            if (constant[d] || col_sq[d] <= 0.0) continue;
            double rho = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                rho += xs[i * m + d] * (residual[i] + xs[i * m + d] * w[d]);
            rho /= static_cast<double>(n);
            double updated = rho - penalty / sigma[d];
            if (rho < 0.0) updated = rho + penalty / sigma[d];
            updated = std::abs(rho) <= penalty / sigma[d] ? 0.0 : updated / col_sq[d];
            const double delta = updated - w[d];
            if (delta != 0.0) {
                for (std::size_t i = 0; i < n; ++i) residual[i] -= xs[i * m + d] * delta;
                w[d] = updated;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        if (max_delta < 1e-10) {
            converged = true;
            break;
        }
    }

    LassoFit fit;
    fit.penalty = penalty;
    fit.converged = converged;
    fit.coefficients.resize(m);
    fit.intercept = y_mean;
    for (std::size_t d = 0; d < m; ++d) {
        fit.coefficients[d] = w[d] / sigma[d];
        fit.intercept -= w[d] * mean[d] / sigma[d];
    }
    return fit;
}

CalResult baseline_cal(const Dataset& data, std::span<const std::size_t> normal_rows,
                       std::span<const double> query, const Config& cfg, std::uint64_t seed) {
    const Context context = build_context(data, normal_rows, query, cfg.context_fraction);
    const PointMatrix ctx = context.points(data);
    const SyntheticOutlierClass synthetic = expand_outlier(
        query, ctx, ctx.rows(), cfg.radius_factor, stable_seed(seed, "sample"));

    const std::size_t n_in = ctx.rows();
    const std::size_t n_out = synthetic.points.rows();
    PointMatrix x;
    x.n_cols = ctx.n_cols;
    for (std::size_t i = 0; i < n_in; ++i) x.append(ctx.row(i));
    for (std::size_t i = 0; i < n_out; ++i) x.append(synthetic.points.row(i));
    std::vector<double> y(n_in + n_out);
    std::fill(y.begin(), y.begin() + n_in, kInlierLabel);
    std::fill(y.begin() + n_in, y.end(), kOutlierLabel);

    const auto accuracy = [&](const LassoFit& fit, std::span<const std::size_t> rows) {
        std::size_t correct = 0;
        for (const std::size_t i : rows) {
            const double pred = fit.predict(x.row(i)) >= 0.0 ? kInlierLabel : kOutlierLabel;
            correct += pred == y[i] ? 1 : 0;
        }
        return rows.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(rows.size());
    };

    // Penalty by stratified holdout, ties to the sparser model.
    std::vector<double> grid = cfg.lambda_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    double best_lambda = grid.front();
    {
        Rng rng(stable_seed(seed, "lambda"));
        std::vector<std::size_t> in_order(n_in), out_order(n_out);
        std::iota(in_order.begin(), in_order.end(), 0);
        std::iota(out_order.begin(), out_order.end(), std::size_t{n_in});
        rng.shuffle(in_order);
        rng.shuffle(out_order);
        const auto cut = [&](const std::vector<std::size_t>& order) {
            std::size_t holdout = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(cfg.holdout_fraction * order.size())));
            holdout = std::min(holdout, order.size() - 1);
            return holdout;
        };
        const std::size_t in_cut = cut(in_order);
        const std::size_t out_cut = cut(out_order);
        std::vector<std::size_t> holdout_rows(in_order.begin(), in_order.begin() + in_cut);
        holdout_rows.insert(holdout_rows.end(), out_order.begin(), out_order.begin() + out_cut);
        PointMatrix train;
        train.n_cols = x.n_cols;
        std::vector<double> train_y;
        for (std::size_t i = in_cut; i < in_order.size(); ++i) {
            train.append(x.row(in_order[i]));
            train_y.push_back(y[in_order[i]]);
        }
        for (std::size_t i = out_cut; i < out_order.size(); ++i) {
            train.append(x.row(out_order[i]));
            train_y.push_back(y[out_order[i]]);
        }
        double best_acc = -1.0;
        for (const double lambda : grid) {
            const LassoFit fit = fit_lasso(train, train_y, lambda);
            const double acc = accuracy(fit, holdout_rows);
            if (acc >= best_acc) {
                best_acc = acc;
                best_lambda = lambda;
            }
        }
    }

    CalResult result;
    result.fit = fit_lasso(x, y, best_lambda);
    for (std::size_t d = 0; d < result.fit.coefficients.size(); ++d)
        if (std::abs(result.fit.coefficients[d]) > 1e-6) result.attributes.push_back(d);

    // Outlierness: pooled 5-fold cross-validated sign accuracy.
    const std::size_t folds = std::min<std::size_t>({5, n_in, n_out});
    if (folds < 2) {
        std::vector<std::size_t> all(n_in + n_out);
        std::iota(all.begin(), all.end(), 0);
        result.outlierness = accuracy(result.fit, all);
        return result;
    }
    Rng rng(stable_seed(seed, "cv"));
    std::vector<std::size_t> fold_of(n_in + n_out);
    {
        std::vector<std::size_t> in_order(n_in), out_order(n_out);
        std::iota(in_order.begin(), in_order.end(), 0);
        std::iota(out_order.begin(), out_order.end(), std::size_t{n_in});
        rng.shuffle(in_order);
        rng.shuffle(out_order);
        for (std::size_t i = 0; i < in_order.size(); ++i) fold_of[in_order[i]] = i % folds;
        for (std::size_t i = 0; i < out_order.size(); ++i) fold_of[out_order[i]] = i % folds;
    }
    std::size_t correct = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        PointMatrix train;
        train.n_cols = x.n_cols;
        std::vector<double> train_y;
        std::vector<std::size_t> test_rows;
        for (std::size_t i = 0; i < fold_of.size(); ++i) {
            if (fold_of[i] == f) {
                test_rows.push_back(i);
            } else {
                train.append(x.row(i));
                train_y.push_back(y[i]);
            }
        }
        const LassoFit fit = fit_lasso(train, train_y, best_lambda);
        for (const std::size_t i : test_rows) {
            const double pred = fit.predict(x.row(i)) >= 0.0 ? kInlierLabel : kOutlierLabel;
            correct += pred == y[i] ? 1 : 0;
        }
    }
    result.outlierness = static_cast<double>(correct) / static_cast<double>(fold_of.size());
    return result;
}

// ---------------------------------------------------------------------------
// Protocols
// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> normal_rows_of(const GroundTruth& truth) {
    std::vector<std::size_t> normals;
    for (std::size_t r = 0; r < truth.is_outlier.size(); ++r)
        if (!truth.is_outlier[r]) normals.push_back(r);
    return normals;
}

std::vector<std::size_t> sans(std::span<const std::size_t> rows, std::size_t removed) {
    std::vector<std::size_t> result;
    result.reserve(rows.size());
    for (const std::size_t r : rows)
        if (r != removed) result.push_back(r);
    return result;
}

} // namespace

FaithfulnessResult faithfulness_eval(const Dataset& data, const GroundTruth& truth,
                                     const Config& cfg, std::uint64_t seed, bool with_cal) {
    const PriorKnowledge prior = PriorKnowledge::from_config(cfg, data.cols());
    const auto interpretations = interpret_all(data, truth.outlier_ids, prior, cfg, seed);

    FaithfulnessResult result;
    for (const auto& itp : interpretations) {
        std::vector<std::size_t> attrs;
        for (const auto& a : itp.abnormal_attributes) attrs.push_back(a.index);
        std::sort(attrs.begin(), attrs.end());
        result.coin_predicted[itp.outlier_id] = std::move(attrs);
    }
    result.coin = attribute_prf(result.coin_predicted, truth.planted);

    if (with_cal) {
        const std::vector<std::size_t> normals = normal_rows_of(truth);
        std::vector<std::vector<std::size_t>> cal_attrs(truth.outlier_ids.size());
        parallel_for(truth.outlier_ids.size(), cfg.threads, [&](std::size_t i) {
            const auto& id = truth.outlier_ids[i];
            const std::uint64_t query_seed = stable_seed(stable_seed(seed, id), "cal");
            try {
                const CalResult cal = baseline_cal(data, normals, data.row(data.row_of(id)),
                                                   cfg, query_seed);
                cal_attrs[i] = cal.attributes;
            } catch (const std::exception&) {
                cal_attrs[i] = {};
            }
        });
        for (std::size_t i = 0; i < truth.outlier_ids.size(); ++i)
            result.cal_predicted[truth.outlier_ids[i]] = std::move(cal_attrs[i]);
        result.cal = attribute_prf(result.cal_predicted, truth.planted);
    }
    return result;
}

RankingResult ranking_eval(const Dataset& data, const GroundTruth& truth, const Config& cfg,
                           std::uint64_t seed, bool with_cal) {
    const std::vector<std::size_t> normals = normal_rows_of(truth);
    const PriorKnowledge prior = PriorKnowledge::from_config(cfg, data.cols());

    // Inlier queries: same count as the true outliers, sampled without
    // replacement.
    std::vector<std::size_t> pool = normals;
    Rng rng(stable_seed(seed, "inlier-queries"));
    rng.shuffle(pool);
    const std::size_t n_inlier_queries = std::min(pool.size(), truth.outlier_ids.size());

    RankingResult result;
    for (const auto& id : truth.outlier_ids) result.queries.push_back({id, 1, 0.0, 0.0});
    for (std::size_t i = 0; i < n_inlier_queries; ++i)
        result.queries.push_back({data.id_of(pool[i]), 0, 0.0, 0.0});

    parallel_for(result.queries.size(), cfg.threads, [&](std::size_t i) {
        RankingQuery& q = result.queries[i];
        const std::size_t row = data.row_of(q.id);
        const std::vector<std::size_t> query_normals =
            q.label == 1 ? normals : sans(normals, row);
        const std::uint64_t base = stable_seed(seed, q.id);
        try {
            const Interpretation itp = interpret_point(data, query_normals, data.row(row), q.id,
                                                       prior, cfg, stable_seed(base, "coin"));
            q.coin_score = itp.failed ? 0.0 : itp.outlierness;
        } catch (const std::exception&) {
            q.coin_score = 0.0;
        }
        if (with_cal) {
            try {
                const CalResult cal = baseline_cal(data, query_normals, data.row(row), cfg,
                                                   stable_seed(base, "cal"));
                q.cal_score = cal.outlierness;
            } catch (const std::exception&) {
                q.cal_score = 0.0;
            }
        }
    });

    std::vector<double> coin_scores, cal_scores;
    std::vector<int> labels;
    for (const auto& q : result.queries) {
        coin_scores.push_back(q.coin_score);
        cal_scores.push_back(q.cal_score);
        labels.push_back(q.label);
    }
    result.coin_auc = ranking_auc(coin_scores, labels);
    result.cal_auc = with_cal ? ranking_auc(cal_scores, labels) : 0.0;
    return result;
}

std::vector<BetaSweepPoint> beta_sweep(const Dataset& augmented, const GroundTruth& truth,
                                       std::span<const std::size_t> simulated_attrs,
                                       std::span<const double> beta_grid, const Config& cfg,
                                       std::size_t repeats, std::uint64_t seed) {
    if (beta_grid.empty()) throw InputError("beta grid is empty");
    if (repeats == 0) throw InputError("repeats must be positive");
    for (const std::size_t idx : simulated_attrs)
        if (idx >= augmented.cols())
            throw InputError("simulated attribute index out of range");

    const std::vector<std::size_t> normals = normal_rows_of(truth);

    std::vector<std::vector<double>> auc_per_beta(beta_grid.size());
    for (std::size_t rep = 0; rep < repeats; ++rep) {
        const std::uint64_t rep_seed = stable_seed(seed, rep);

        std::vector<std::size_t> pool = normals;
        Rng rng(stable_seed(rep_seed, "inlier-queries"));
        rng.shuffle(pool);
        const std::size_t n_inlier_queries = std::min(pool.size(), truth.outlier_ids.size());

        struct QueryEvidence {
            int label;
            bool ok;
            std::vector<ClusterEvidence> evidence;
            std::size_t context_size;
        };
        std::vector<std::pair<std::string, int>> queries;
        for (const auto& id : truth.outlier_ids) queries.emplace_back(id, 1);
        for (std::size_t i = 0; i < n_inlier_queries; ++i)
            queries.emplace_back(augmented.id_of(pool[i]), 0);

        // Boundaries do not depend on beta, so fit once and re-score per
        // grid value.
        std::vector<QueryEvidence> cache(queries.size());
        const PriorKnowledge neutral = PriorKnowledge::neutral(augmented.cols());
        parallel_for(queries.size(), cfg.threads, [&](std::size_t i) {
            const auto& [id, label] = queries[i];
            const std::size_t row = augmented.row_of(id);
            const std::vector<std::size_t> query_normals =
                label == 1 ? normals : sans(normals, row);
            cache[i].label = label;
            try {
                Interpretation itp =
                    interpret_point(augmented, query_normals, augmented.row(row), id, neutral,
                                    cfg, stable_seed(rep_seed, id));
                cache[i].ok = !itp.failed;
                cache[i].context_size = itp.context_size;
                cache[i].evidence = std::move(itp.evidence);
            } catch (const std::exception&) {
                cache[i].ok = false;
            }
        });

        for (std::size_t b = 0; b < beta_grid.size(); ++b) {
            PriorKnowledge prior = PriorKnowledge::neutral(augmented.cols());
            for (const std::size_t idx : simulated_attrs) prior.beta[idx] = beta_grid[b];

            std::vector<double> scores;
            std::vector<int> labels;
            for (const auto& q : cache) {
                labels.push_back(q.label);
                scores.push_back(q.ok ? overall_outlierness(q.evidence, prior, q.context_size)
                                      : 0.0);
            }
            auc_per_beta[b].push_back(ranking_auc(scores, labels));
        }
    }

    std::vector<BetaSweepPoint> points;
    for (std::size_t b = 0; b < beta_grid.size(); ++b) {
        BetaSweepPoint p;
        p.beta = beta_grid[b];
        p.auc_mean = std::accumulate(auc_per_beta[b].begin(), auc_per_beta[b].end(), 0.0) /
                     static_cast<double>(auc_per_beta[b].size());
        p.auc_q25 = quantile(auc_per_beta[b], 0.25);
        p.auc_q75 = quantile(auc_per_beta[b], 0.75);
        points.push_back(p);
    }
    return points;
}

} // namespace coin
