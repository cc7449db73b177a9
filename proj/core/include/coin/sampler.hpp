#pragma once

#include <cstdint>
#include <vector>

#include "coin/dataset.hpp"

namespace coin {

// Hypothetical outlier class: the query itself plus points drawn uniformly
// from the ball around it. With radius_factor 0.5 every sample stays at
// least `radius` away from every context point (triangle inequality), so the
// two classes never overlap.
struct SyntheticOutlierClass {
    PointMatrix points;         // row 0 is the original query
    std::vector<double> center;
    double radius = 0.0;
    std::uint64_t seed = 0;
};

// radius = radius_factor * (distance from the query to its nearest context
// member). A zero radius means the query sits on a context member and cannot
// be treated as isolated; that throws DegenerateError.
SyntheticOutlierClass expand_outlier(std::span<const double> query, const PointMatrix& context,
                                     std::size_t count, double radius_factor,
                                     std::uint64_t seed);

} // namespace coin
