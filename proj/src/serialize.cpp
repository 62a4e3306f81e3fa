#include <algorithm>

#include "whistle/error.hpp"
#include "whistle/json_io.hpp"

namespace whistle {

void to_json(Json& j, const LineSegment& s) {
    j = Json{{"p0", {s.p0.x(), s.p0.y()}}, {"p1", {s.p1.x(), s.p1.y()}}, {"inclination", s.inclination}, {"votes", s.votes}};
}

void from_json(const Json& j, LineSegment& s) {
    const auto& a = j.at("p0");
    const auto& b = j.at("p1");
    s.p0 = {a.at(0).get<int>(), a.at(1).get<int>()};
    s.p1 = {b.at(0).get<int>(), b.at(1).get<int>()};
    s.inclination = j.at("inclination").get<double>();
    s.votes = j.value("votes", 0);
}

void to_json(Json& j, const Snake& s) {
    Json pts = Json::array();
    for (Eigen::Index i = 0; i < s.points.rows(); ++i) pts.push_back({s.points(i, 0), s.points(i, 1)});
    j = Json{{"points", pts},
             {"converged", s.converged},
             {"energy", s.energy},
             {"iterations", s.iterations},
             {"endpoints_fixed", s.endpoints_fixed},
             {"source", s.source}};
}

void from_json(const Json& j, Snake& s) {
    const auto& pts = j.at("points");
    s.points.resize(static_cast<Eigen::Index>(pts.size()), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        s.points(static_cast<Eigen::Index>(i), 0) = pts[i].at(0).get<double>();
        s.points(static_cast<Eigen::Index>(i), 1) = pts[i].at(1).get<double>();
    }
    s.converged = j.value("converged", false);
    s.energy = j.value("energy", 0.0);
    s.iterations = j.value("iterations", 0);
    s.endpoints_fixed = j.value("endpoints_fixed", true);
    if (j.contains("source")) s.source = j.at("source").get<LineSegment>();
}

void to_json(Json& j, const FeatureVector& v) {
    j = Json{{"avg_density", v.avg_density},
             {"avg_x", v.avg_x},
             {"avg_y", v.avg_y},
             {"inertia", v.inertia},
             {"length", v.length},
             {"relative_density", v.relative_density},
             {"low_density", v.low_density},
             {"long", v.long_},
             {"low", v.low}};
    if (v.target) {
        j["target"] = *v.target;
    } else {
        j["target"] = nullptr;
    }
}

void from_json(const Json& j, FeatureVector& v) {
    v.avg_density = j.at("avg_density").get<double>();
    v.avg_x = j.at("avg_x").get<double>();
    v.avg_y = j.at("avg_y").get<double>();
    v.inertia = j.at("inertia").get<double>();
    v.length = j.at("length").get<double>();
    v.relative_density = j.at("relative_density").get<double>();
    v.low_density = j.at("low_density").get<bool>();
    v.long_ = j.at("long").get<bool>();
    v.low = j.at("low").get<bool>();
    if (auto it = j.find("target"); it != j.end() && !it->is_null()) v.target = it->get<bool>();
}

void to_json(Json& j, const DatasetMeta& m) {
    j = Json{{"length_norm_l", m.length_norm_l},
             {"low_density_cutoff", m.low_density_cutoff},
             {"long_cutoff", m.long_cutoff},
             {"low_freq_cutoff_y", m.low_freq_cutoff_y},
             {"columns", std::vector<std::string>(kDatasetColumns.begin(), kDatasetColumns.end())},
             {"row_ids", m.row_ids}};
}

void from_json(const Json& j, DatasetMeta& m) {
    m.length_norm_l = j.at("length_norm_l").get<double>();
    m.low_density_cutoff = j.value("low_density_cutoff", m.low_density_cutoff);
    m.long_cutoff = j.value("long_cutoff", m.long_cutoff);
    m.low_freq_cutoff_y = j.value("low_freq_cutoff_y", m.low_freq_cutoff_y);
    m.row_ids = j.value("row_ids", std::vector<std::string>{});
}

void to_json(Json& j, const DetectionRecord& r) {
    j = Json{{"snippet_id", r.snippet_id},
             {"source_path", r.source_path},
             {"snippet_index", r.snippet_index},
             {"offset_seconds", r.offset_seconds},
             {"snake_id", r.snake_id},
             {"snake", r.snake},
             {"features", r.features},
             {"length_norm_l", r.length_norm_l}};
    if (r.prediction) j["prediction"] = Json{{"label", r.prediction->label}, {"vote_fraction", r.prediction->vote_fraction}};
    if (r.label) j["label"] = *r.label;
}

void from_json(const Json& j, DetectionRecord& r) {
    r.snippet_id = j.at("snippet_id").get<std::string>();
    r.source_path = j.value("source_path", std::string{});
    r.snippet_index = j.value("snippet_index", 0);
    r.offset_seconds = j.value("offset_seconds", 0.0);
    r.snake_id = j.at("snake_id").get<std::string>();
    r.snake = j.at("snake").get<Snake>();
    r.features = j.at("features").get<FeatureVector>();
    r.length_norm_l = j.value("length_norm_l", 1.0);
    if (auto it = j.find("prediction"); it != j.end() && !it->is_null()) {
        r.prediction = Prediction{it->at("label").get<int>(), it->at("vote_fraction").get<double>()};
    }
    if (auto it = j.find("label"); it != j.end() && !it->is_null()) r.label = it->get<bool>();
}

void to_json(Json& j, const SnippetInfo& s) {
    j = Json{{"id", s.id},
             {"source_path", s.source_path},
             {"index", s.index},
             {"offset_seconds", s.offset_seconds},
             {"frames", s.frames},
             {"bins", s.bins},
             {"image", s.image},
             {"overlay", s.overlay},
             {"detections", s.detections}};
}

void from_json(const Json& j, SnippetInfo& s) {
    s.id = j.at("id").get<std::string>();
    s.source_path = j.value("source_path", std::string{});
    s.index = j.value("index", 0);
    s.offset_seconds = j.value("offset_seconds", 0.0);
    s.frames = j.value("frames", Eigen::Index{0});
    s.bins = j.value("bins", Eigen::Index{0});
    s.image = j.value("image", std::string{});
    s.overlay = j.value("overlay", std::string{});
    s.detections = j.value("detections", 0);
}

void to_json(Json& j, const RandomForestModel& m) {
    Json trees = Json::array();
    for (const auto& t : m.trees) {
        Json nodes = Json::array();
        for (const auto& n : t.nodes) {
            Json node{{"counts", n.counts}, {"prediction", n.prediction}};
            if (!n.is_leaf()) {
                node["feature"] = m.feature_names.empty() ? Json(n.feature)
                                                          : Json(m.feature_names[static_cast<std::size_t>(n.feature)]);
                node["threshold"] = n.threshold;
                node["left"] = n.left;
                node["right"] = n.right;
            }
            nodes.push_back(std::move(node));
        }
        trees.push_back(Json{{"nodes", std::move(nodes)}});
    }
    j = Json{{"n_estimators", m.n_estimators},
             {"criterion", to_string(m.criterion)},
             {"features_per_split", m.features_per_split},
             {"seed", m.seed},
             {"feature_names", m.feature_names},
             {"excluded_features", m.excluded_features},
             {"trees", std::move(trees)}};
}

void from_json(const Json& j, RandomForestModel& m) {
    m.n_estimators = j.at("n_estimators").get<int>();
    m.criterion = criterion_from_string(j.at("criterion").get<std::string>());
    m.features_per_split = j.value("features_per_split", 0);
    m.seed = j.value("seed", std::uint64_t{0});
    m.feature_names = j.value("feature_names", std::vector<std::string>{});
    m.excluded_features = j.value("excluded_features", std::vector<std::string>{});
    m.trees.clear();
    for (const auto& t : j.at("trees")) {
        DecisionTree tree;
        tree.criterion = m.criterion;
        for (const auto& n : t.at("nodes")) {
            TreeNode node;
            node.counts = n.at("counts").get<std::array<std::int64_t, 2>>();
            node.prediction = n.at("prediction").get<int>();
            if (auto f = n.find("feature"); f != n.end()) {
                if (f->is_string()) {
                    const auto name = f->get<std::string>();
                    const auto it = std::find(m.feature_names.begin(), m.feature_names.end(), name);
                    if (it == m.feature_names.end()) throw InputError("model references unknown feature '" + name + "'");
                    node.feature = static_cast<int>(it - m.feature_names.begin());
                } else {
                    node.feature = f->get<int>();
                }
                node.threshold = n.at("threshold").get<double>();
                node.left = n.at("left").get<int>();
                node.right = n.at("right").get<int>();
            }
            tree.nodes.push_back(node);
        }
        m.trees.push_back(std::move(tree));
    }
    if (static_cast<int>(m.trees.size()) != m.n_estimators) throw InputError("model tree count mismatch");
}

void to_json(Json& j, const ModelFile& m) {
    j = Json{{"format", "whistle-random-forest"},
             {"version", 1},
             {"metadata", {{"feature", m.features}, {"reduced", m.reduced}}},
             {"forest", m.forest}};
}

void from_json(const Json& j, ModelFile& m) {
    if (j.value("format", std::string{}) != "whistle-random-forest") throw InputError("not a whistle model file");
    const auto& meta = j.at("metadata");
    m.features = meta.at("feature").get<FeatureConfig>();
    m.reduced = meta.value("reduced", false);
    m.forest = j.at("forest").get<RandomForestModel>();
}

Json report_to_json(const EvaluationReport& report, const GridSearchResult* grid) {
    auto frac = [](const Ratio& r) { return Json::array({r.num, r.den}); };
    Json j{{"accuracy", report.accuracy().value()},
           {"fpr", report.false_positive_rate().value()},
           {"fnr", report.false_negative_rate().value()},
           {"confusion", report.confusion},
           {"total", report.total()},
           {"exact",
            {{"accuracy", frac(report.accuracy())},
             {"fpr", frac(report.false_positive_rate())},
             {"fnr", frac(report.false_negative_rate())}}}};
    Json table = Json::array();
    if (grid) {
        for (const auto& c : grid->table) {
            table.push_back(Json{{"n_estimators", c.n_estimators},
                                 {"criterion", to_string(c.criterion)},
                                 {"fold_accuracy", c.fold_accuracy},
                                 {"mean_accuracy", c.mean_accuracy}});
        }
        j["best"] = Json{{"n_estimators", grid->best_n_estimators},
                         {"criterion", to_string(grid->best_criterion)},
                         {"cv_accuracy", grid->best_score}};
    }
    j["cv_table"] = table;
    return j;
}

}  // namespace whistle
