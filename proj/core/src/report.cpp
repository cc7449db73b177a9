#include "coin/report.hpp"

#include <fstream>

#include <json.hpp>

namespace coin {

namespace {
using json = nlohmann::ordered_json;
}

std::string report_to_json(const std::vector<Interpretation>& interpretations,
                           const Config& cfg, std::uint64_t master_seed,
                           const std::string& data_path,
                           const std::optional<RunTimings>& timings) {
    json run;
    run["data"] = data_path;
    run["seed"] = master_seed;
    run["config"] = json::parse(cfg.to_json_text());
    if (timings) run["timings"] = {{"total_seconds", timings->total_seconds}};

    json records = json::array();
    for (const auto& itp : interpretations) {
        json rec;
        rec["id"] = itp.outlier_id;
        rec["failed"] = itp.failed;
        rec["outlierness"] = itp.outlierness;
        json attrs = json::array();
        for (const auto& a : itp.abnormal_attributes)
            attrs.push_back({{"index", a.index}, {"name", a.name}, {"score", a.score}});
        rec["attributes"] = attrs;
        json clusters = json::array();
        for (const auto& ev : itp.evidence) {
            json c;
            c["size"] = ev.cluster_size;
            c["centroid"] = ev.centroid;
            c["margin"] = ev.margin;
            c["gamma"] = ev.resolution.cluster_gamma;
            c["nonzero_weight_count"] = ev.boundary.nonzero_weights();
            c["converged"] = ev.boundary.converged;
            clusters.push_back(std::move(c));
        }
        rec["clusters"] = clusters;
        rec["chosen_l"] = itp.chosen_l;
        rec["pruned_clusters"] = itp.pruned_clusters;
        rec["flags"] = itp.flags;
        records.push_back(std::move(rec));
    }

    json root;
    root["run"] = run;
    root["outliers"] = records;
    return root.dump(2) + "\n";
}

void write_report(const std::string& json_text, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << json_text;
    if (!out) throw InputError("failed while writing '" + path + "'");
}

} // namespace coin
