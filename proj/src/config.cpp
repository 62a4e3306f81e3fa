#include "whistle/config.hpp"

#include <fstream>
#include <sstream>

#include "whistle/error.hpp"
#include "whistle/json_io.hpp"

namespace whistle {

namespace {

const char* window_name(WindowFunction f) {
    switch (f) {
        case WindowFunction::hann:
            return "hann";
        case WindowFunction::hamming:
            return "hamming";
        case WindowFunction::rectangular:
            return "rectangular";
    }
    return "hann";
}

WindowFunction window_from(const std::string& s) {
    if (s == "hann") return WindowFunction::hann;
    if (s == "hamming") return WindowFunction::hamming;
    if (s == "rectangular") return WindowFunction::rectangular;
    throw ConfigError("unknown window function '" + s + "'");
}

template <typename T>
void read_opt(const Json& j, const char* key, T& field) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) field = it->get<T>();
}

}  // namespace

void to_json(Json& j, const StftConfig& c) {
    j = Json{{"window_length", c.window_length}, {"hop", c.hop}, {"window_function", window_name(c.window_function)}};
}

void from_json(const Json& j, StftConfig& c) {
    read_opt(j, "window_length", c.window_length);
    read_opt(j, "hop", c.hop);
    if (j.contains("window_function")) c.window_function = window_from(j.at("window_function").get<std::string>());
}

void to_json(Json& j, const FrangiConfig& c) {
    j = Json{{"scales", c.scales}, {"beta", c.beta}, {"binarize_threshold", c.binarize_threshold}};
    if (c.adaptive_c()) {
        j["c"] = "adaptive";
    } else {
        j["c"] = c.c;
    }
}

void from_json(const Json& j, FrangiConfig& c) {
    read_opt(j, "scales", c.scales);
    read_opt(j, "beta", c.beta);
    read_opt(j, "binarize_threshold", c.binarize_threshold);
    if (auto it = j.find("c"); it != j.end()) {
        if (it->is_string()) {
            if (it->get<std::string>() != "adaptive") throw ConfigError("frangi.c must be a number or \"adaptive\"");
            c.c = 0.0;
        } else {
            c.c = it->get<double>();
            if (!(c.c > 0.0)) throw ConfigError("frangi.c must be positive");
        }
    }
}

void to_json(Json& j, const HoughConfig& c) {
    j = Json{{"theta_step", c.theta_step},
             {"vote_threshold", c.vote_threshold},
             {"min_length", c.min_length},
             {"max_gap", c.max_gap},
             {"inclination_band", {c.band_low, c.band_high}},
             {"rng_seed", c.rng_seed},
             {"line_tolerance", c.line_tolerance},
             {"clear_radius", c.clear_radius},
             {"refine_passes", c.refine_passes}};
}

void from_json(const Json& j, HoughConfig& c) {
    read_opt(j, "theta_step", c.theta_step);
    read_opt(j, "vote_threshold", c.vote_threshold);
    read_opt(j, "min_length", c.min_length);
    read_opt(j, "max_gap", c.max_gap);
    if (auto it = j.find("inclination_band"); it != j.end()) {
        if (!it->is_array() || it->size() != 2) throw ConfigError("hough.inclination_band must be [low, high]");
        c.band_low = (*it)[0].get<double>();
        c.band_high = (*it)[1].get<double>();
    }
    read_opt(j, "rng_seed", c.rng_seed);
    read_opt(j, "line_tolerance", c.line_tolerance);
    read_opt(j, "clear_radius", c.clear_radius);
    read_opt(j, "refine_passes", c.refine_passes);
}

void to_json(Json& j, const SnakeConfig& c) {
    j = Json{{"n_points", c.n_points},         {"alpha", c.alpha},
             {"beta_bend", c.beta_bend},       {"w_line", c.w_line},
             {"w_edge", c.w_edge},             {"max_iterations", c.max_iterations},
             {"step_size", c.step_size},       {"convergence_tol", c.convergence_tol},
             {"dedupe", c.dedupe},             {"dedupe_distance", c.dedupe_distance}};
}

void from_json(const Json& j, SnakeConfig& c) {
    read_opt(j, "n_points", c.n_points);
    read_opt(j, "alpha", c.alpha);
    read_opt(j, "beta_bend", c.beta_bend);
    read_opt(j, "w_line", c.w_line);
    read_opt(j, "w_edge", c.w_edge);
    read_opt(j, "max_iterations", c.max_iterations);
    read_opt(j, "step_size", c.step_size);
    read_opt(j, "convergence_tol", c.convergence_tol);
    read_opt(j, "dedupe", c.dedupe);
    read_opt(j, "dedupe_distance", c.dedupe_distance);
}

void to_json(Json& j, const FeatureConfig& c) {
    j = Json{{"length_norm_l", c.length_norm_l},
             {"low_density_cutoff", c.low_density_cutoff},
             {"long_cutoff", c.long_cutoff},
             {"low_freq_cutoff_y", c.low_freq_cutoff_y}};
}

void from_json(const Json& j, FeatureConfig& c) {
    read_opt(j, "length_norm_l", c.length_norm_l);
    read_opt(j, "low_density_cutoff", c.low_density_cutoff);
    read_opt(j, "long_cutoff", c.long_cutoff);
    read_opt(j, "low_freq_cutoff_y", c.low_freq_cutoff_y);
}

void to_json(Json& j, const TrainConfig& c) {
    Json crit = Json::array();
    for (auto k : c.grid.criteria) crit.push_back(to_string(k));
    j = Json{{"grid", {{"n_estimators", c.grid.n_estimators}, {"criterion", crit}}},
             {"split_ratio", c.split_ratio},
             {"k_folds", c.k_folds},
             {"reduced", c.reduced}};
}

void from_json(const Json& j, TrainConfig& c) {
    if (auto g = j.find("grid"); g != j.end()) {
        read_opt(*g, "n_estimators", c.grid.n_estimators);
        if (auto it = g->find("criterion"); it != g->end()) {
            c.grid.criteria.clear();
            for (const auto& s : *it) c.grid.criteria.push_back(criterion_from_string(s.get<std::string>()));
        }
    }
    read_opt(j, "split_ratio", c.split_ratio);
    read_opt(j, "k_folds", c.k_folds);
    read_opt(j, "reduced", c.reduced);
}

void to_json(Json& j, const PipelineConfig& c) {
    j = Json{{"schema_version", c.schema_version},
             {"stft", c.stft},
             {"frangi", c.frangi},
             {"hough", c.hough},
             {"snake", c.snake},
             {"feature", c.feature},
             {"train", c.train},
             {"window_seconds", c.window_seconds},
             {"output_dir", c.output_dir},
             {"seed", c.seed},
             {"workers", c.workers}};
}

void from_json(const Json& j, PipelineConfig& c) {
    read_opt(j, "schema_version", c.schema_version);
    if (c.schema_version != kConfigSchemaVersion) {
        throw ConfigError("unsupported config schema_version " + std::to_string(c.schema_version));
    }
    if (j.contains("stft")) from_json(j.at("stft"), c.stft);
    if (j.contains("frangi")) from_json(j.at("frangi"), c.frangi);
    if (j.contains("hough")) from_json(j.at("hough"), c.hough);
    if (j.contains("snake")) from_json(j.at("snake"), c.snake);
    if (j.contains("feature")) from_json(j.at("feature"), c.feature);
    if (j.contains("train")) from_json(j.at("train"), c.train);
    read_opt(j, "window_seconds", c.window_seconds);
    read_opt(j, "output_dir", c.output_dir);
    read_opt(j, "seed", c.seed);
    read_opt(j, "workers", c.workers);
}

void PipelineConfig::validate() const {
    stft.validate();
    frangi.validate();
    hough.validate();
    snake.validate();
    feature.validate();
    if (!(window_seconds > 0.0)) throw ConfigError("window_seconds must be positive");
    if (workers < 0) throw ConfigError("workers must be non-negative");
    if (!(train.split_ratio > 0.0 && train.split_ratio < 1.0)) throw ConfigError("train.split_ratio must lie in (0, 1)");
    if (train.k_folds < 2) throw ConfigError("train.k_folds must be at least 2");
    if (train.grid.n_estimators.empty() || train.grid.criteria.empty()) throw ConfigError("train.grid must not be empty");
    for (int n : train.grid.n_estimators) {
        if (n < 1) throw ConfigError("train.grid.n_estimators entries must be positive");
    }
}

PipelineConfig parse_config(const std::string& json_text) {
    PipelineConfig cfg;
    try {
        const Json j = Json::parse(json_text);
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        from_json(j, cfg);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const PipelineConfig& cfg) { return Json(cfg).dump(2) + "\n"; }

}  // namespace whistle
