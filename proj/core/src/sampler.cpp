#include "coin/sampler.hpp"

#include <cmath>
#include <limits>

#include "coin/rng.hpp"

namespace coin {

SyntheticOutlierClass expand_outlier(std::span<const double> query, const PointMatrix& context,
                                     std::size_t count, double radius_factor,
                                     std::uint64_t seed) {
    if (context.rows() == 0) throw InputError("cannot expand a query against an empty context");
    if (count == 0) throw InputError("sample count must be positive");
    if (radius_factor <= 0.0 || radius_factor >= 1.0)
        throw InputError("radius_factor must lie in (0,1)");
    if (context.n_cols != query.size())
        throw InputError("query dimension does not match context");

    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < context.rows(); ++i)
        nearest = std::min(nearest, distance(query, context.row(i)));
    const double radius = radius_factor * nearest;
    if (radius <= 0.0)
        throw DegenerateError("query coincides with a context member; it is not isolated");

    SyntheticOutlierClass out;
    out.center.assign(query.begin(), query.end());
    out.radius = radius;
    out.seed = seed;
    out.points.n_cols = query.size();
    out.points.values.reserve(count * query.size());
    out.points.append(query);

    // Uniform in the ball: direction from a normalized Gaussian, length r*u^(1/M).
    Rng rng(seed);
    const std::size_t m = query.size();
    std::vector<double> dir(m);
    for (std::size_t i = 1; i < count; ++i) {
        double norm = 0.0;
        do {
            norm = 0.0;
            for (std::size_t d = 0; d < m; ++d) {
                dir[d] = rng.normal();
                norm += dir[d] * dir[d];
            }
            norm = std::sqrt(norm);
        } while (norm < 1e-300);
        const double len =
            radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(m)) / norm;
        for (std::size_t d = 0; d < m; ++d) dir[d] = query[d] + len * dir[d];
        out.points.append(dir);
    }
    return out;
}

} // namespace coin
