#include "coin/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "coin/errors.hpp"

namespace coin {

void Config::validate() const {
    const auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
    if (!in_unit(context_fraction)) throw ConfigError("context_fraction must lie in (0,1]");
    if (!(radius_factor > 0.0 && radius_factor < 1.0))
        throw ConfigError("radius_factor must lie in (0,1)");
    if (!(min_cluster_fraction > 0.0 && min_cluster_fraction <= 1.0))
        throw ConfigError("min_cluster_fraction must lie in (0,1]");
    if (!(ps_threshold > 0.0 && ps_threshold <= 1.0))
        throw ConfigError("ps_threshold must lie in (0,1]");
    if (ps_splits == 0) throw ConfigError("ps_splits must be positive");
    if (max_l == 0) throw ConfigError("max_l must be positive");
    if (lambda_grid.empty()) throw ConfigError("lambda_grid must be nonempty");
    for (const double l : lambda_grid)
        if (l < 0.0) throw ConfigError("lambda_grid entries must be nonnegative");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
        throw ConfigError("holdout_fraction must lie in (0,1)");
    if (!in_unit(theta_rel)) throw ConfigError("theta_rel must lie in (0,1]");
    for (const double b : beta)
        if (b < 0.0) throw ConfigError("beta entries must be nonnegative");
    for (const int p : direction)
        if (p != -1 && p != 0 && p != 1) throw ConfigError("direction entries must be -1, 0 or 1");
    if (misdetection_threshold < 0.0)
        throw ConfigError("misdetection_threshold must be nonnegative");
}

namespace {

using json = nlohmann::ordered_json;

template <class T>
void read_if(const json& j, const char* key, T& out) {
    if (const auto it = j.find(key); it != j.end()) {
        try {
            out = it->get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
        }
    }
}

} // namespace

Config Config::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    Config cfg;
    read_if(j, "context_fraction", cfg.context_fraction);
    read_if(j, "radius_factor", cfg.radius_factor);
    read_if(j, "min_cluster_fraction", cfg.min_cluster_fraction);
    read_if(j, "ps_threshold", cfg.ps_threshold);
    read_if(j, "ps_splits", cfg.ps_splits);
    read_if(j, "max_l", cfg.max_l);
    read_if(j, "lambda_grid", cfg.lambda_grid);
    read_if(j, "holdout_fraction", cfg.holdout_fraction);
    read_if(j, "theta_rel", cfg.theta_rel);
    read_if(j, "master_seed", cfg.master_seed);
    read_if(j, "threads", cfg.threads);
    read_if(j, "misdetection_threshold", cfg.misdetection_threshold);

    // beta / p accept a scalar (broadcast at use) or a per-attribute array.
    if (const auto it = j.find("beta"); it != j.end()) {
        if (it->is_number()) {
            cfg.beta.assign(1, it->get<double>());
        } else {
            read_if(j, "beta", cfg.beta);
        }
    }
    if (const auto it = j.find("p"); it != j.end()) {
        if (it->is_number()) {
            cfg.direction.assign(1, it->get<int>());
        } else {
            read_if(j, "p", cfg.direction);
        }
    }

    static const char* known[] = {"context_fraction", "radius_factor", "min_cluster_fraction",
                                  "ps_threshold", "ps_splits", "max_l", "lambda_grid",
                                  "holdout_fraction", "theta_rel", "beta", "p", "master_seed",
                                  "threads", "misdetection_threshold"};
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok |= key == k;
        if (!ok) throw ConfigError("unknown config key '" + key + "'");
    }

    cfg.validate();
    return cfg;
}

Config Config::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

std::string Config::to_json_text() const {
    json j;
    j["context_fraction"] = context_fraction;
    j["radius_factor"] = radius_factor;
    j["min_cluster_fraction"] = min_cluster_fraction;
    j["ps_threshold"] = ps_threshold;
    j["ps_splits"] = ps_splits;
    j["max_l"] = max_l;
    j["lambda_grid"] = lambda_grid;
    j["holdout_fraction"] = holdout_fraction;
    j["theta_rel"] = theta_rel;
    if (beta.empty()) {
        j["beta"] = 1.0;
    } else if (beta.size() == 1) {
        j["beta"] = beta.front();
    } else {
        j["beta"] = beta;
    }
    if (direction.empty()) {
        j["p"] = 0;
    } else if (direction.size() == 1) {
        j["p"] = direction.front();
    } else {
        j["p"] = direction;
    }
    j["master_seed"] = master_seed;
    j["threads"] = threads;
    j["misdetection_threshold"] = misdetection_threshold;
    return j.dump(2);
}

} // namespace coin
