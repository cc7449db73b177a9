// coin: contextual interpretation of detector-flagged outliers.
//
// Subcommands:
//   detect    flag outliers with a distance-to-kth-neighbor reference detector
//   interpret explain flagged outliers (abnormal attributes, outlierness, context)
//   generate  synthetic benchmark data with planted abnormal attributes
//   evaluate  faithfulness / ranking / beta-sweep / CAL-comparison protocols

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "coin/config.hpp"
#include "coin/detection.hpp"
#include "coin/rng.hpp"
#include "coin/experiments.hpp"
#include "coin/interpret.hpp"
#include "coin/report.hpp"

namespace {

using coin::Config;
using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;
constexpr int kExitRuntime = 4;

Config load_config(const std::string& path) {
    Config cfg;
    if (!path.empty()) cfg = Config::from_json_file(path);
    if (const char* env = std::getenv("COIN_SEED")) {
        try {
            cfg.master_seed = std::stoull(env);
        } catch (const std::exception&) {
            throw coin::ConfigError("COIN_SEED is not an unsigned integer");
        }
    }
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw coin::InputError("cannot write '" + path + "'");
    out << text;
    if (!out) throw coin::InputError("failed while writing '" + path + "'");
}

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> grid;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            grid.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw coin::InputError("cannot parse grid entry '" + cell + "'");
        }
    }
    if (grid.empty()) throw coin::InputError("empty grid");
    return grid;
}

int cmd_detect(const std::string& data_path, std::size_t k, double fraction,
               const std::string& out_path) {
    const coin::Dataset data = coin::load_dataset(data_path);
    const coin::DetectionResult result = coin::detect_knn_distance(data, k, fraction);
    std::vector<std::string> ids;
    ids.reserve(result.outlier_rows.size());
    for (const std::size_t r : result.outlier_rows) ids.push_back(data.id_of(r));
    coin::write_outlier_ids(ids, out_path);
    std::cout << "flagged " << ids.size() << " of " << data.rows() << " instances -> "
              << out_path << "\n";
    return kExitOk;
}

int cmd_interpret(const std::string& data_path, const std::string& outliers_path,
                  const std::string& config_path, const std::string& out_path,
                  std::optional<std::uint64_t> seed_flag, std::optional<std::size_t> threads_flag,
                  bool with_timings) {
    Config cfg = load_config(config_path);
    if (seed_flag) cfg.master_seed = *seed_flag;
    if (threads_flag) cfg.threads = *threads_flag;
    cfg.validate();

    const coin::Dataset data = coin::load_dataset(data_path);
    const std::vector<std::string> ids = coin::read_outlier_ids(outliers_path);
    const coin::PriorKnowledge prior = coin::PriorKnowledge::from_config(cfg, data.cols());

    const auto started = std::chrono::steady_clock::now();
    const auto interpretations =
        coin::interpret_all(data, ids, prior, cfg, cfg.master_seed);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    std::optional<coin::RunTimings> timings;
    if (with_timings) timings = coin::RunTimings{seconds};
    coin::write_report(
        coin::report_to_json(interpretations, cfg, cfg.master_seed, data_path, timings),
        out_path);

    std::size_t failed = 0;
    for (const auto& itp : interpretations) failed += itp.failed ? 1 : 0;
    std::cout << "interpreted " << interpretations.size() << " queries (" << failed
              << " failed) in " << seconds << " s -> " << out_path << "\n";
    return kExitOk;
}

int cmd_generate(const std::string& variant, std::uint64_t seed, const std::string& out_data,
                 const std::string& out_truth) {
    coin::SyntheticSpec spec;
    if (variant == "syn1") {
        spec.variant = coin::SyntheticVariant::Syn1;
    } else if (variant == "syn2") {
        spec.variant = coin::SyntheticVariant::Syn2;
    } else {
        throw coin::InputError("unknown variant '" + variant + "' (expected syn1 or syn2)");
    }
    spec.seed = seed;
    const coin::SyntheticData data = coin::generate_synthetic(spec);
    coin::save_dataset(data.dataset, out_data);
    coin::save_ground_truth(data.truth, out_truth);
    std::cout << "generated " << data.dataset.rows() << "x" << data.dataset.cols() << " ("
              << data.truth.outlier_ids.size() << " outliers) -> " << out_data << ", "
              << out_truth << "\n";
    return kExitOk;
}

int cmd_evaluate(const std::string& mode, const std::string& data_path,
                 const std::string& truth_path, const std::string& config_path,
                 const std::string& out_path, std::optional<std::uint64_t> seed_flag,
                 std::optional<std::size_t> threads_flag, std::size_t repeats,
                 const std::string& beta_grid_csv, double sim_scale) {
    Config cfg = load_config(config_path);
    if (seed_flag) cfg.master_seed = *seed_flag;
    if (threads_flag) cfg.threads = *threads_flag;
    cfg.validate();
    if (repeats == 0) throw coin::InputError("--repeats must be positive");

    const coin::Dataset data = coin::load_dataset(data_path);
    const coin::GroundTruth truth = coin::load_ground_truth(truth_path, data);

    if (mode == "faithfulness") {
        const auto result = coin::faithfulness_eval(data, truth, cfg, cfg.master_seed, false);
        json j;
        j["mode"] = mode;
        j["seed"] = cfg.master_seed;
        j["coin"] = {{"precision", result.coin.precision},
                     {"recall", result.coin.recall},
                     {"f1", result.coin.f1}};
        json per_query = json::object();
        for (const auto& [id, attrs] : result.coin_predicted) per_query[id] = attrs;
        j["predicted"] = per_query;
        write_text(out_path, j.dump(2) + "\n");
        std::cout << "faithfulness: P=" << result.coin.precision << " R=" << result.coin.recall
                  << " F1=" << result.coin.f1 << " -> " << out_path << "\n";
        return kExitOk;
    }

    if (mode == "ranking") {
        json runs = json::array();
        double mean_auc = 0.0;
        for (std::size_t rep = 0; rep < repeats; ++rep) {
            const std::uint64_t seed = coin::stable_seed(cfg.master_seed, rep);
            const auto result = coin::ranking_eval(data, truth, cfg, seed, false);
            runs.push_back({{"seed", seed}, {"auc", result.coin_auc}});
            mean_auc += result.coin_auc / static_cast<double>(repeats);
            std::cout << "ranking run " << rep << ": AUC=" << result.coin_auc << "\n";
        }
        json j;
        j["mode"] = mode;
        j["auc_mean"] = mean_auc;
        j["runs"] = runs;
        write_text(out_path, j.dump(2) + "\n");
        std::cout << "ranking: mean AUC=" << mean_auc << " -> " << out_path << "\n";
        return kExitOk;
    }

    if (mode == "beta-sweep") {
        const auto [augmented, simulated] = coin::augment_noise_attributes(
            data, data.cols(), sim_scale, coin::stable_seed(cfg.master_seed, "simulated"));
        const std::vector<double> grid = parse_grid(beta_grid_csv);
        const auto points = coin::beta_sweep(augmented, truth, simulated, grid, cfg, repeats,
                                             cfg.master_seed);

        std::size_t inversions = 0;
        double worst = 0.0;
        for (std::size_t i = 1; i < points.size(); ++i) {
            if (points[i].auc_mean > points[i - 1].auc_mean) {
                ++inversions;
                worst = std::max(worst, points[i].auc_mean - points[i - 1].auc_mean);
            }
        }
        std::ostringstream csv;
        csv << "beta,auc_mean,auc_q25,auc_q75\n";
        char buf[128];
        for (const auto& p : points) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", p.beta, p.auc_mean,
                          p.auc_q25, p.auc_q75);
            csv << buf;
        }
        csv << "# trend: adjacent_inversions=" << inversions << " worst_inversion=" << worst
            << "\n";
        write_text(out_path, csv.str());
        std::cout << "beta sweep over " << points.size() << " grid points, " << inversions
                  << " adjacent inversions -> " << out_path << "\n";
        return kExitOk;
    }

    if (mode == "cal-compare") {
        const auto faith = coin::faithfulness_eval(data, truth, cfg, cfg.master_seed, true);
        const auto rank = coin::ranking_eval(data, truth, cfg, cfg.master_seed, true);
        json j;
        j["mode"] = mode;
        j["seed"] = cfg.master_seed;
        j["coin"] = {{"precision", faith.coin.precision},
                     {"recall", faith.coin.recall},
                     {"f1", faith.coin.f1},
                     {"auc", rank.coin_auc}};
        j["cal"] = {{"precision", faith.cal.precision},
                    {"recall", faith.cal.recall},
                    {"f1", faith.cal.f1},
                    {"auc", rank.cal_auc}};
        write_text(out_path, j.dump(2) + "\n");
        std::cout << "coin: F1=" << faith.coin.f1 << " AUC=" << rank.coin_auc
                  << " | cal: F1=" << faith.cal.f1 << " AUC=" << rank.cal_auc << " -> "
                  << out_path << "\n";
        return kExitOk;
    }

    throw coin::InputError("unknown mode '" + mode + "'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"contextual outlier interpretation"};
    app.require_subcommand(1);

    // detect
    auto* detect = app.add_subcommand("detect", "flag outliers by kth-neighbor distance");
    std::string d_data, d_out;
    std::size_t d_k = 10;
    double d_fraction = 0.05;
    detect->add_option("--data", d_data, "input CSV")->required();
    detect->add_option("--k", d_k, "neighbor rank for the distance score");
    detect->add_option("--fraction", d_fraction, "fraction of instances to flag");
    detect->add_option("--out", d_out, "output id file (one id per line)")->required();

    // interpret
    auto* interpret = app.add_subcommand("interpret", "explain flagged outliers");
    std::string i_data, i_outliers, i_config, i_out;
    std::optional<std::uint64_t> i_seed;
    std::optional<std::size_t> i_threads;
    bool i_timings = false;
    interpret->add_option("--data", i_data, "input CSV")->required();
    interpret->add_option("--outliers", i_outliers, "outlier id file")->required();
    interpret->add_option("--config", i_config, "config JSON");
    interpret->add_option("--out", i_out, "report JSON")->required();
    interpret->add_option("--seed", i_seed, "master seed (overrides config and COIN_SEED)");
    interpret->add_option("--threads", i_threads, "worker cap (0 = machine parallelism)");
    interpret->add_flag("--timings", i_timings,
                        "include wall-clock timings (breaks byte-reproducibility)");

    // generate
    auto* generate = app.add_subcommand("generate", "synthetic benchmark data");
    std::string g_spec, g_out_data, g_out_truth;
    std::uint64_t g_seed = 0;
    generate->add_option("--spec", g_spec, "syn1 or syn2")->required();
    generate->add_option("--seed", g_seed, "generator seed");
    generate->add_option("--out-data", g_out_data, "output CSV")->required();
    generate->add_option("--out-truth", g_out_truth, "output truth JSON")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "run an evaluation protocol");
    std::string e_mode, e_data, e_truth, e_config, e_out;
    std::optional<std::uint64_t> e_seed;
    std::optional<std::size_t> e_threads;
    std::size_t e_repeats = 5;
    std::string e_beta_grid = "0,0.5,1,1.5,2";
    double e_sim_scale = 1.0;
    evaluate->add_option("--mode", e_mode, "faithfulness|ranking|beta-sweep|cal-compare")
        ->required();
    evaluate->add_option("--data", e_data, "input CSV")->required();
    evaluate->add_option("--truth", e_truth, "ground truth JSON")->required();
    evaluate->add_option("--config", e_config, "config JSON");
    evaluate->add_option("--out", e_out, "metrics output file")->required();
    evaluate->add_option("--seed", e_seed, "master seed (overrides config and COIN_SEED)");
    evaluate->add_option("--threads", e_threads, "worker cap");
    evaluate->add_option("--repeats", e_repeats, "repeat runs (ranking, beta-sweep)");
    evaluate->add_option("--beta-grid", e_beta_grid, "comma-separated beta grid");
    evaluate->add_option("--sim-scale", e_sim_scale, "simulated attribute scale (beta-sweep)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitInput;
    }

    try {
        if (detect->parsed()) return cmd_detect(d_data, d_k, d_fraction, d_out);
        if (interpret->parsed())
            return cmd_interpret(i_data, i_outliers, i_config, i_out, i_seed, i_threads,
                                 i_timings);
        if (generate->parsed()) return cmd_generate(g_spec, g_seed, g_out_data, g_out_truth);
        if (evaluate->parsed())
            return cmd_evaluate(e_mode, e_data, e_truth, e_config, e_out, e_seed, e_threads,
                                e_repeats, e_beta_grid, e_sim_scale);
    } catch (const coin::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const coin::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
