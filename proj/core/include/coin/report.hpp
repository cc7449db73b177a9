#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coin/config.hpp"
#include "coin/interpret.hpp"

namespace coin {

// Optional run timings; reports carry them only on request so that repeated
// runs with the same seed stay byte-identical.
struct RunTimings {
    double total_seconds = 0.0;
};

// Machine-readable run output: one record per query plus the effective
// config echo, which is sufficient to reproduce the run.
std::string report_to_json(const std::vector<Interpretation>& interpretations,
                           const Config& cfg, std::uint64_t master_seed,
                           const std::string& data_path,
                           const std::optional<RunTimings>& timings = std::nullopt);

void write_report(const std::string& json_text, const std::string& path);

} // namespace coin
