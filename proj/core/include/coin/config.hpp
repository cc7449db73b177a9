#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace coin {

// Pipeline knobs. Defaults: 8% context, half-distance sampling radius, 3%
// cluster pruning, prediction-strength 0.8 over 5 splits, relative attribute
// cutoff 0.1.
struct Config {
    double context_fraction = 0.08;
    double radius_factor = 0.5;
    double min_cluster_fraction = 0.03;
    double ps_threshold = 0.8;
    std::size_t ps_splits = 5;
    std::size_t max_l = 10;
    std::vector<double> lambda_grid{0.001, 0.003, 0.01, 0.03, 0.1, 0.3};
    double holdout_fraction = 0.2;
    double theta_rel = 0.1;
    // Scalar prior defaults; per-attribute vectors come from the config file.
    std::vector<double> beta;   // empty -> all ones
    std::vector<int> direction; // empty -> all zeros; entries in {-1,0,1}
    std::uint64_t master_seed = 42;
    std::size_t threads = 0; // 0 -> hardware concurrency
    // Queries whose outlierness lands below this are flagged as likely
    // misdetections in the report.
    double misdetection_threshold = 0.5;

    void validate() const; // throws ConfigError

    static Config from_json_file(const std::string& path);
    static Config from_json_text(const std::string& text);
    std::string to_json_text() const; // effective config echo, reproduces the run
};

} // namespace coin
