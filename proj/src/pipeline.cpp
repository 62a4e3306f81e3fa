#include "whistle/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "whistle/error.hpp"
#include "whistle/image_io.hpp"
#include "whistle/json_io.hpp"
#include "whistle/ridge.hpp"
#include "whistle/rng.hpp"

namespace whistle {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(workers);
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = next++; i < n; i = next++) fn(i);
                } catch (...) {
                    failures[w] = std::current_exception();
                    next = n;
                }
            });
        }
    }
    for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
}

unsigned worker_count(int configured) {
    return configured > 0 ? static_cast<unsigned>(configured) : std::max(1u, std::thread::hardware_concurrency());
}

struct SnippetOutput {
    SnippetInfo info;
    Raster gray;
    std::vector<DetectionRecord> records;
};

struct FileOutput {
    std::vector<SnippetOutput> snippets;
    std::string error;
};

}  // namespace

SnippetAnalysis analyze_snippet(const AudioSnippet& snippet, const PipelineConfig& cfg) {
    SnippetAnalysis out;
    out.spectrogram = compute_spectrogram(snippet, cfg.stft);
    const GridXd vesselness = frangi(out.spectrogram.intensity, cfg.frangi);
    const BitGrid ridges = binarize(vesselness, cfg.frangi.binarize_threshold);

    HoughConfig hough = cfg.hough;
    hough.rng_seed = mix_seed(cfg.seed ^ cfg.hough.rng_seed, fnv1a(out.spectrogram.source));
    out.segments = probabilistic_hough(ridges, hough);

    const GridXd potential = image_potential(out.spectrogram.intensity, cfg.snake.w_line, cfg.snake.w_edge);
    std::vector<Snake> snakes;
    for (const auto& seg : out.segments) {
        snakes.push_back(evolve(init_snake(seg, cfg.snake.n_points), potential, cfg.snake));
    }
    out.snakes = cfg.snake.dedupe ? dedupe_snakes(snakes, cfg.snake.dedupe_distance) : std::move(snakes);
    return out;
}

std::vector<std::string> model_feature_names(bool reduced) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < 9; ++i) {
        const std::string name(kDatasetColumns[i]);
        if (name == "avg_x") continue;
        if (reduced && (name == "avg_density" || name == "length" || name == "avg_y")) continue;
        names.push_back(name);
    }
    return names;
}

Eigen::MatrixXd design_matrix(const std::vector<FeatureVector>& rows, const std::vector<std::string>& names) {
    std::vector<Eigen::Index> cols;
    for (const auto& n : names) {
        const auto it = std::find(kDatasetColumns.begin(), kDatasetColumns.begin() + 9, n);
        if (it == kDatasetColumns.begin() + 9) throw InputError("missing feature '" + n + "'");
        cols.push_back(it - kDatasetColumns.begin());
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto full = as_row(rows[i]);
        for (std::size_t c = 0; c < cols.size(); ++c) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = full(cols[c]);
        }
    }
    return x;
}

std::vector<int> labels_of(const std::vector<FeatureVector>& rows) {
    std::vector<int> y;
    y.reserve(rows.size());
    for (const auto& r : rows) {
        if (!r.target) throw InputError("row without target label");
        y.push_back(*r.target ? 1 : 0);
    }
    return y;
}

DetectSummary detect(const std::vector<std::filesystem::path>& wavs, const PipelineConfig& cfg,
                     const std::filesystem::path& out_dir, const DetectOptions& options) {
    cfg.validate();
    const unsigned workers = worker_count(cfg.workers);
    const unsigned outer = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(wavs.size())));
    const unsigned inner = std::max(1u, workers / outer);

    FeatureConfig raw_features = cfg.feature;
    raw_features.length_norm_l = 1.0;

    std::vector<FileOutput> files(wavs.size());
    parallel_for(wavs.size(), outer, [&](std::size_t f) {
        FileOutput& file = files[f];
        std::vector<AudioSnippet> snippets;
        try {
            snippets = partition(load_audio(wavs[f]), cfg.window_seconds);
        } catch (const InputError& e) {
            file.error = e.what();
            return;
        }
        file.snippets.resize(snippets.size());
        parallel_for(snippets.size(), inner, [&](std::size_t s) {
            const AudioSnippet& snip = snippets[s];
            const SnippetAnalysis analysis = analyze_snippet(snip, cfg);
            SnippetOutput& out = file.snippets[s];
            out.info.id = analysis.spectrogram.source;
            out.info.source_path = snip.source_path;
            out.info.index = snip.snippet_index;
            out.info.offset_seconds = snip.offset_seconds;
            out.info.frames = analysis.spectrogram.frames();
            out.info.bins = analysis.spectrogram.bins();
            out.info.image = "spectrograms/" + out.info.id + ".png";
            out.info.overlay = "overlays/" + out.info.id + ".png";
            out.info.detections = static_cast<int>(analysis.snakes.size());
            if (options.write_images) out.gray = to_gray_raster(analysis.spectrogram.intensity);
            for (std::size_t k = 0; k < analysis.snakes.size(); ++k) {
                DetectionRecord r;
                r.snippet_id = out.info.id;
                r.source_path = snip.source_path;
                r.snippet_index = snip.snippet_index;
                r.offset_seconds = snip.offset_seconds;
                r.snake_id = out.info.id + ":" + std::to_string(k);
                r.snake = analysis.snakes[k];
                r.features = build_feature_vector(r.snake, analysis.spectrogram, raw_features);
                out.records.push_back(std::move(r));
            }
        });
    });

    DetectSummary summary;
    for (std::size_t f = 0; f < files.size(); ++f) {
        if (!files[f].error.empty()) {
            ++summary.files_failed;
            summary.errors.push_back(files[f].error);
            continue;
        }
        ++summary.files_ok;
        for (auto& s : files[f].snippets) {
            summary.snippets.push_back(s.info);
            for (auto& r : s.records) summary.records.push_back(r);
        }
    }

    // Length normalization needs the whole set (or the model's training-time l).
    FeatureConfig features = options.model ? options.model->features : cfg.feature;
    if (!options.model) {
        std::vector<Snake> all;
        for (const auto& r : summary.records) all.push_back(r.snake);
        features.length_norm_l = all.empty() ? 1.0 : compute_l(all);
    }
    for (auto& r : summary.records) {
        r.length_norm_l = features.length_norm_l;
        r.features.length = endpoint_distance(r.snake) / features.length_norm_l;
        apply_cutoffs(r.features, features);
    }
    if (options.model) apply_model(*options.model, summary.records);

    if (!options.write_images) return summary;

    std::filesystem::create_directories(out_dir / "spectrograms");
    std::filesystem::create_directories(out_dir / "overlays");
    std::map<std::string, std::pair<std::vector<Snake>, std::vector<Rgb>>> by_snippet;
    for (const auto& r : summary.records) {
        auto& [snakes, colors] = by_snippet[r.snippet_id];
        snakes.push_back(r.snake);
        colors.push_back(!r.prediction ? kSnakeColor : (r.prediction->label == 1 ? kAcceptedColor : kRejectedColor));
    }
    std::vector<const SnippetOutput*> outputs;
    for (const auto& f : files) {
        for (const auto& s : f.snippets) outputs.push_back(&s);
    }
    parallel_for(outputs.size(), workers, [&](std::size_t i) {
        const SnippetOutput& s = *outputs[i];
        write_png(out_dir / s.info.image, s.gray);
        const auto it = by_snippet.find(s.info.id);
        const auto overlay = it == by_snippet.end() ? render_overlay(s.gray, {}, {})
                                                    : render_overlay(s.gray, it->second.first, it->second.second);
        write_png(out_dir / s.info.overlay, overlay);
    });

    write_detections(out_dir / "detections.jsonl", summary.records);
    write_file_atomic(out_dir / "snippets.json", Json(summary.snippets).dump(2) + "\n");
    write_file_atomic(out_dir / "config.json", dump_config(cfg));
    return summary;
}

std::vector<DetectionRecord> read_detections(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read detections: " + path.string());
    std::vector<DetectionRecord> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            out.push_back(Json::parse(line).get<DetectionRecord>());
        } catch (const Json::exception& e) {
            throw InputError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

void write_detections(const std::filesystem::path& path, const std::vector<DetectionRecord>& records) {
    std::string text;
    for (const auto& r : records) text += Json(r).dump() + "\n";
    write_file_atomic(path, text);
}

std::vector<LabelEntry> read_label_log(const std::filesystem::path& path) {
    std::vector<LabelEntry> out;
    if (!std::filesystem::exists(path)) return out;
    std::ifstream in(path);
    if (!in) throw InputError("cannot read label log: " + path.string());
    std::map<std::string, std::size_t> index;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            const Json j = Json::parse(line);
            LabelEntry e{j.at("snake_id").get<std::string>(), j.at("target").get<bool>(), 0};
            if (auto it = index.find(e.snake_id); it != index.end()) {
                e.version = out[it->second].version + 1;
                out[it->second] = e;
            } else {
                e.version = 1;
                index[e.snake_id] = out.size();
                out.push_back(e);
            }
        } catch (const Json::exception& ex) {
            throw InputError(path.string() + ":" + std::to_string(n) + ": " + ex.what());
        }
    }
    return out;
}

Dataset build_dataset(const std::vector<DetectionRecord>& records, const FeatureConfig& cutoffs,
                      const std::vector<LabelEntry>& labels, std::optional<double> fixed_l) {
    Dataset ds;
    double l = 1.0;
    if (fixed_l) {
        l = *fixed_l;
    } else if (!records.empty()) {
        std::vector<Snake> all;
        for (const auto& r : records) all.push_back(r.snake);
        l = compute_l(all);
    }
    FeatureConfig cfg = cutoffs;
    cfg.length_norm_l = l;
    cfg.validate();

    std::map<std::string, bool> label_map;
    for (const auto& e : labels) label_map[e.snake_id] = e.target;

    ds.meta.length_norm_l = l;
    ds.meta.low_density_cutoff = cfg.low_density_cutoff;
    ds.meta.long_cutoff = cfg.long_cutoff;
    ds.meta.low_freq_cutoff_y = cfg.low_freq_cutoff_y;
    for (const auto& r : records) {
        FeatureVector v = r.features;
        v.length = endpoint_distance(r.snake) / l;
        quantize(v);
        apply_cutoffs(v, cfg);
        v.target = r.label;
        if (auto it = label_map.find(r.snake_id); it != label_map.end()) v.target = it->second;
        ds.rows.push_back(v);
        ds.meta.row_ids.push_back(r.snake_id);
    }
    return ds;
}

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path) {
    auto p = csv_path;
    p.replace_extension(".meta.json");
    return p;
}

void write_dataset(const std::filesystem::path& csv_path, const Dataset& dataset) {
    std::ostringstream csv;
    write_dataset_csv(csv, dataset.rows);
    write_file_atomic(csv_path, csv.str());
    write_file_atomic(meta_path_for(csv_path), Json(dataset.meta).dump(2) + "\n");
}

Dataset read_dataset(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw InputError("cannot read dataset: " + csv_path.string());
    Dataset ds;
    ds.rows = read_dataset_csv(in);
    const auto meta = meta_path_for(csv_path);
    if (std::filesystem::exists(meta)) {
        try {
            ds.meta = Json::parse(read_file(meta)).get<DatasetMeta>();
        } catch (const Json::exception& e) {
            throw InputError("invalid dataset metadata " + meta.string() + ": " + e.what());
        }
    }
    return ds;
}

TrainOutcome train_model(const Dataset& dataset, const TrainConfig& train, std::uint64_t seed) {
    std::vector<FeatureVector> labeled;
    for (const auto& r : dataset.rows) {
        if (r.target) labeled.push_back(r);
    }
    if (labeled.empty()) throw InputError("dataset has no target labels");

    const auto names = model_feature_names(train.reduced);
    const Eigen::MatrixXd x = design_matrix(labeled, names);
    const std::vector<int> y = labels_of(labeled);
    const auto positives = std::count(y.begin(), y.end(), 1);
    if (positives == 0 || positives == static_cast<std::ptrdiff_t>(y.size())) {
        throw InputError("dataset has a single class; training needs both");
    }

    const auto [train_rows, test_rows] = stratified_split(y, train.split_ratio, seed);
    const Eigen::MatrixXd xtr = x(train_rows, Eigen::all);
    const Eigen::MatrixXd xte = x(test_rows, Eigen::all);
    std::vector<int> ytr, yte;
    for (int i : train_rows) ytr.push_back(y[static_cast<std::size_t>(i)]);
    for (int i : test_rows) yte.push_back(y[static_cast<std::size_t>(i)]);

    TrainOutcome out;
    out.grid = grid_search(xtr, ytr, train.grid, train.k_folds, seed);

    ForestParams params;
    params.n_estimators = out.grid.best_n_estimators;
    params.criterion = out.grid.best_criterion;
    params.seed = seed;
    out.model.forest = fit_forest(xtr, ytr, params);
    out.model.forest.feature_names = names;
    for (std::size_t i = 0; i < 9; ++i) {
        const std::string n(kDatasetColumns[i]);
        if (std::find(names.begin(), names.end(), n) == names.end()) out.model.forest.excluded_features.push_back(n);
    }
    out.model.reduced = train.reduced;
    out.model.features.length_norm_l = dataset.meta.length_norm_l;
    out.model.features.low_density_cutoff = dataset.meta.low_density_cutoff;
    out.model.features.long_cutoff = dataset.meta.long_cutoff;
    out.model.features.low_freq_cutoff_y = dataset.meta.low_freq_cutoff_y;
    out.report = evaluate(out.model.forest, xte, yte);
    out.train_rows = train_rows.size();
    out.test_rows = test_rows.size();
    return out;
}

std::vector<Prediction> predict_rows(const ModelFile& model, const std::vector<FeatureVector>& rows) {
    return model.forest.predict_all(design_matrix(rows, model.forest.feature_names));
}

EvaluationReport evaluate_rows(const ModelFile& model, const std::vector<FeatureVector>& rows) {
    std::vector<FeatureVector> labeled;
    for (const auto& r : rows) {
        if (r.target) labeled.push_back(r);
    }
    if (labeled.empty()) throw InputError("no labeled rows to evaluate");
    return evaluate(model.forest, design_matrix(labeled, model.forest.feature_names), labels_of(labeled));
}

void apply_model(const ModelFile& model, std::vector<DetectionRecord>& records) {
    std::vector<FeatureVector> rows;
    for (auto& r : records) {
        r.length_norm_l = model.features.length_norm_l;
        r.features.length = endpoint_distance(r.snake) / model.features.length_norm_l;
        apply_cutoffs(r.features, model.features);
        rows.push_back(r.features);
    }
    if (rows.empty()) return;
    const auto preds = predict_rows(model, rows);
    for (std::size_t i = 0; i < records.size(); ++i) records[i].prediction = preds[i];
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
    write_file_atomic(path, Json(model).dump() + "\n");
}

ModelFile load_model(const std::filesystem::path& path) {
    try {
        return Json::parse(read_file(path)).get<ModelFile>();
    } catch (const Json::exception& e) {
        throw InputError("invalid model file " + path.string() + ": " + e.what());
    }
}

std::string report_json(const EvaluationReport& report, const GridSearchResult* grid) {
    return report_to_json(report, grid).dump(2) + "\n";
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw InputError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace whistle
