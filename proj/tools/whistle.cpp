#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "whistle/error.hpp"
#include "whistle/image_io.hpp"
#include "whistle/json_io.hpp"
#include "whistle/pipeline.hpp"
#include "whistle/ridge.hpp"
#include "whistle/server.hpp"

namespace fs = std::filesystem;
using namespace whistle;

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
};

PipelineConfig resolve(const Globals& g) {
    PipelineConfig cfg = g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
    if (g.seed) cfg.seed = *g.seed;
    if (!g.out.empty()) cfg.output_dir = g.out;
    cfg.validate();
    return cfg;
}

bool is_jsonl(const std::string& p) { return fs::path(p).extension() == ".jsonl"; }

std::vector<fs::path> as_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

int cmd_spectrogram(const PipelineConfig& cfg, const std::vector<std::string>& wavs, bool ridges) {
    const fs::path out = cfg.output_dir;
    int ok = 0;
    for (const auto& w : wavs) {
        try {
            for (const auto& snip : partition(load_audio(w), cfg.window_seconds)) {
                const auto spec = compute_spectrogram(snip, cfg.stft);
                write_png(out / "spectrograms" / (spec.source + ".png"), to_gray_raster(spec.intensity));
                if (ridges) {
                    const auto v = frangi(spec.intensity, cfg.frangi);
                    const double peak = v.maxCoeff();
                    write_png(out / "ridges" / (spec.source + ".vesselness.png"),
                              to_gray_raster(GridXd(peak > 0 ? GridXd(v / peak) : v)));
                    write_png(out / "ridges" / (spec.source + ".binary.png"),
                              to_gray_raster(binarize(v, cfg.frangi.binarize_threshold)));
                }
                std::printf("%s %ldx%ld\n", spec.source.c_str(), static_cast<long>(spec.frames()),
                            static_cast<long>(spec.bins()));
            }
            ++ok;
        } catch (const InputError& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
        }
    }
    return !wavs.empty() && ok == 0 ? 1 : 0;
}

int cmd_detect(const PipelineConfig& cfg, const std::vector<std::string>& wavs, const std::string& model_path) {
    std::optional<ModelFile> model;
    if (!model_path.empty()) model = load_model(model_path);
    DetectOptions opts;
    opts.model = model ? &*model : nullptr;
    const auto summary = detect(as_paths(wavs), cfg, cfg.output_dir, opts);
    for (const auto& e : summary.errors) std::fprintf(stderr, "error: %s\n", e.c_str());
    std::printf("%d files, %zu snippets, %zu snakes -> %s\n", summary.files_ok, summary.snippets.size(),
                summary.records.size(), cfg.output_dir.c_str());
    return !wavs.empty() && summary.files_ok == 0 ? 1 : 0;
}

int cmd_extract(const PipelineConfig& cfg, const std::vector<std::string>& inputs, const std::string& labels,
                std::string dataset_path) {
    std::vector<DetectionRecord> records;
    std::vector<fs::path> wavs;
    for (const auto& in : inputs) {
        if (is_jsonl(in)) {
            auto r = read_detections(in);
            records.insert(records.end(), r.begin(), r.end());
        } else {
            wavs.push_back(in);
        }
    }
    if (!wavs.empty()) {
        DetectOptions opts;
        opts.write_images = false;
        auto summary = detect(wavs, cfg, cfg.output_dir, opts);
        for (const auto& e : summary.errors) std::fprintf(stderr, "error: %s\n", e.c_str());
        if (summary.files_ok == 0 && records.empty()) return 1;
        records.insert(records.end(), summary.records.begin(), summary.records.end());
    }
    const auto entries = labels.empty() ? std::vector<LabelEntry>{} : read_label_log(labels);
    if (dataset_path.empty()) dataset_path = (fs::path(cfg.output_dir) / "dataset.csv").string();
    const auto ds = build_dataset(records, cfg.feature, entries);
    write_dataset(dataset_path, ds);
    std::printf("%zu rows, l = %.6f -> %s\n", ds.rows.size(), ds.meta.length_norm_l, dataset_path.c_str());
    return 0;
}

int cmd_train(const PipelineConfig& cfg, const std::string& dataset, std::string model_path, std::string report_path) {
    const auto outcome = train_model(read_dataset(dataset), cfg.train, cfg.seed);
    const fs::path out = cfg.output_dir;
    if (model_path.empty()) model_path = (out / "model.json").string();
    if (report_path.empty()) report_path = (out / "report.json").string();
    save_model(model_path, outcome.model);
    const auto report = report_json(outcome.report, &outcome.grid);
    write_file_atomic(report_path, report);
    std::fputs(report.c_str(), stdout);
    return 0;
}

int cmd_evaluate(const PipelineConfig& cfg, const std::string& model_path, const std::string& dataset,
                 const std::string& report_path) {
    (void)cfg;
    const auto report = report_json(evaluate_rows(load_model(model_path), read_dataset(dataset).rows));
    if (!report_path.empty()) write_file_atomic(report_path, report);
    std::fputs(report.c_str(), stdout);
    return 0;
}

int cmd_predict(const PipelineConfig& cfg, const std::string& model_path, const std::string& input) {
    const auto model = load_model(model_path);
    const fs::path out = cfg.output_dir;
    std::string text;
    if (is_jsonl(input)) {
        auto records = read_detections(input);
        apply_model(model, records);
        write_detections(out / "predictions.jsonl", records);
        for (const auto& r : records) {
            text += Json{{"snake_id", r.snake_id}, {"label", r.prediction->label}, {"vote_fraction", r.prediction->vote_fraction}}
                        .dump() + "\n";
        }
    } else {
        const auto ds = read_dataset(input);
        const auto preds = predict_rows(model, ds.rows);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            Json j{{"row", i}, {"label", preds[i].label}, {"vote_fraction", preds[i].vote_fraction}};
            if (i < ds.meta.row_ids.size()) j["snake_id"] = ds.meta.row_ids[i];
            text += j.dump() + "\n";
        }
        write_file_atomic(out / "predictions.jsonl", text);
    }
    std::fputs(text.c_str(), stdout);
    return 0;
}

int cmd_serve(const PipelineConfig& cfg, const std::string& state, int port, const std::string& ui) {
    ServerOptions opts;
    opts.state_dir = state.empty() ? fs::path(cfg.output_dir) : fs::path(state);
    opts.config = cfg;
    if (!ui.empty()) opts.ui_dir = ui;
    ReviewServer server(opts);
    const int bound = server.bind(port);
    std::printf("serving %s on http://%s:%d\n", opts.state_dir.c_str(), opts.host.c_str(), bound);
    std::fflush(stdout);
    server.run();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dolphin whistle detection: spectrograms, ridge filtering, Hough seeding, snakes, random forest"};
    app.require_subcommand(1);

    Globals g;
    app.add_option("--config", g.config_path, "JSON pipeline config");
    app.add_option("--seed", g.seed, "Seed for all randomized stages");
    app.add_option("--out", g.out, "Output directory");

    std::vector<std::string> inputs;
    std::string model_path, labels, dataset, report_path, state, ui;
    bool ridges = false;
    int port = 8080;
    std::optional<double> split;
    std::optional<int> folds;
    std::vector<int> n_estimators;
    std::vector<std::string> criteria;
    bool reduced = false;

    auto* spec = app.add_subcommand("spectrogram", "Write spectrogram PNGs for each snippet");
    spec->add_option("wav", inputs, "WAV files")->required();
    spec->add_flag("--ridges", ridges, "Also write vesselness and binary ridge maps");

    auto* det = app.add_subcommand("detect", "Detect snakes and write records plus overlays");
    det->add_option("wav", inputs, "WAV files");
    det->add_option("--model", model_path, "Model file for predictions");

    auto* ext = app.add_subcommand("extract", "Build the dataset CSV from WAVs or detections.jsonl");
    ext->add_option("input", inputs, "WAV files or detections .jsonl")->required();
    ext->add_option("--labels", labels, "labels.jsonl to fill the target column");
    ext->add_option("--dataset", dataset, "Output CSV (default <out>/dataset.csv)");

    auto* tr = app.add_subcommand("train", "Grid-search and fit a random forest");
    tr->add_option("dataset", dataset, "Dataset CSV")->required();
    tr->add_flag("--reduced", reduced, "Drop avg_density, length and avg_y");
    tr->add_option("--split", split, "Training fraction of the stratified split");
    tr->add_option("--folds", folds, "Cross-validation folds");
    tr->add_option("--n-estimators", n_estimators, "Grid of tree counts");
    tr->add_option("--criterion", criteria, "Grid of criteria (gini, entropy)");
    tr->add_option("--model", model_path, "Model output (default <out>/model.json)");
    tr->add_option("--report", report_path, "Report output (default <out>/report.json)");

    auto* ev = app.add_subcommand("evaluate", "Score a model on a labeled dataset");
    ev->add_option("model", model_path, "Model file")->required();
    ev->add_option("dataset", dataset, "Dataset CSV")->required();
    ev->add_option("--report", report_path, "Also write the report here");

    auto* pr = app.add_subcommand("predict", "Classify dataset rows or detection records");
    pr->add_option("model", model_path, "Model file")->required();
    pr->add_option("input", dataset, "Dataset CSV or detections .jsonl")->required();

    auto* sv = app.add_subcommand("serve", "Serve the review API over a detection directory");
    sv->add_option("--state", state, "State directory (default <out>)");
    sv->add_option("--port", port, "Port (0 picks a free one)");
    sv->add_option("--ui", ui, "Static UI bundle directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        PipelineConfig cfg = resolve(g);
        if (split) cfg.train.split_ratio = *split;
        if (folds) cfg.train.k_folds = *folds;
        if (!n_estimators.empty()) cfg.train.grid.n_estimators = n_estimators;
        if (!criteria.empty()) {
            cfg.train.grid.criteria.clear();
            for (const auto& c : criteria) cfg.train.grid.criteria.push_back(criterion_from_string(c));
        }
        if (reduced) cfg.train.reduced = true;
        cfg.validate();

        if (*spec) return cmd_spectrogram(cfg, inputs, ridges);
        if (*det) return cmd_detect(cfg, inputs, model_path);
        if (*ext) return cmd_extract(cfg, inputs, labels, dataset);
        if (*tr) return cmd_train(cfg, dataset, model_path, report_path);
        if (*ev) return cmd_evaluate(cfg, model_path, dataset, report_path);
        if (*pr) return cmd_predict(cfg, model_path, dataset);
        if (*sv) return cmd_serve(cfg, state, port, ui);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
