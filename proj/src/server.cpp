#include "whistle/server.hpp"

#include <atomic>
#include <map>
#include <mutex>

#include <httplib.h>

#include "whistle/error.hpp"
#include "whistle/json_io.hpp"
#include "whistle/pipeline.hpp"

namespace whistle {

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, Json{{"error", message}});
}

}  // namespace

struct ReviewServer::Impl {
    ServerOptions options;
    httplib::Server http;
    std::mutex label_mutex;
    std::atomic<bool> training{false};

    std::filesystem::path path(const std::string& name) const { return options.state_dir / name; }

    std::vector<SnippetInfo> snippets() const {
        try {
            return Json::parse(read_file(path("snippets.json"))).get<std::vector<SnippetInfo>>();
        } catch (const Json::exception& e) {
            throw InputError("corrupt snippets.json: " + std::string(e.what()));
        }
    }

    std::optional<SnippetInfo> find_snippet(const std::string& id) const {
        for (auto& s : snippets()) {
            if (s.id == id) return s;
        }
        return std::nullopt;
    }

    std::map<std::string, LabelEntry> labels() const {
        std::map<std::string, LabelEntry> out;
        for (auto& e : read_label_log(path("labels.jsonl"))) out[e.snake_id] = e;
        return out;
    }

    void list_snippets(httplib::Response& res) {
        const auto records = read_detections(path("detections.jsonl"));
        const auto current = labels();
        std::map<std::string, int> labeled;
        for (const auto& r : records) {
            if (current.count(r.snake_id) || r.label) ++labeled[r.snippet_id];
        }
        Json out = Json::array();
        for (const auto& s : snippets()) {
            Json j = s;
            j["snakes"] = s.detections;
            j["labeled"] = labeled[s.id];
            j["image_url"] = "/api/snippets/" + s.id + "/image.png";
            j["overlay_url"] = "/api/snippets/" + s.id + "/overlay.png";
            out.push_back(std::move(j));
        }
        send_json(res, 200, out);
    }

    void send_png(const std::string& id, bool overlay, httplib::Response& res) {
        const auto s = find_snippet(id);
        if (!s) return send_error(res, 404, "unknown snippet '" + id + "'");
        const auto file = path(overlay ? s->overlay : s->image);
        if (!std::filesystem::exists(file)) return send_error(res, 404, "missing image for '" + id + "'");
        res.set_content(read_file(file), "image/png");
    }

    void list_snakes(const std::string& id, httplib::Response& res) {
        if (!find_snippet(id)) return send_error(res, 404, "unknown snippet '" + id + "'");
        const auto current = labels();
        Json out = Json::array();
        for (const auto& r : read_detections(path("detections.jsonl"))) {
            if (r.snippet_id != id) continue;
            Json j = r;
            j["version"] = 0;
            if (auto it = current.find(r.snake_id); it != current.end()) {
                j["label"] = it->second.target;
                j["version"] = it->second.version;
            }
            j["target"] = j.contains("label") ? j["label"] : Json(nullptr);
            out.push_back(std::move(j));
        }
        send_json(res, 200, out);
    }

    void post_label(const httplib::Request& req, httplib::Response& res) {
        Json body;
        try {
            body = Json::parse(req.body);
        } catch (const Json::exception&) {
            return send_error(res, 400, "body must be JSON");
        }
        if (!body.is_object() || !body.contains("snake_id") || !body["snake_id"].is_string()) {
            return send_error(res, 400, "snake_id (string) is required");
        }
        if (!body.contains("target") || !body["target"].is_boolean()) {
            return send_error(res, 400, "target (boolean) is required");
        }
        if (body.contains("version") && !body["version"].is_number_integer()) {
            return send_error(res, 400, "version must be an integer");
        }
        const auto snake_id = body["snake_id"].get<std::string>();
        const bool target = body["target"].get<bool>();

        const auto records = read_detections(path("detections.jsonl"));
        const bool known = std::any_of(records.begin(), records.end(), [&](const auto& r) { return r.snake_id == snake_id; });
        if (!known) return send_error(res, 404, "unknown snake '" + snake_id + "'");

        std::lock_guard lock(label_mutex);
        const auto current = labels();
        const auto it = current.find(snake_id);
        const int version = it == current.end() ? 0 : it->second.version;
        if (body.contains("version") && body["version"].get<int>() != version) {
            return send_json(res, 409, Json{{"error", "label version conflict"}, {"snake_id", snake_id}, {"version", version}});
        }
        const auto log = path("labels.jsonl");
        std::string text = std::filesystem::exists(log) ? read_file(log) : std::string{};
        if (!text.empty() && text.back() != '\n') text += '\n';
        text += Json{{"snake_id", snake_id}, {"target", target}}.dump() + "\n";
        write_file_atomic(log, text);
        send_json(res, 200, Json{{"snake_id", snake_id}, {"target", target}, {"version", version + 1}});
    }

    void post_train(httplib::Response& res) {
        bool expected = false;
        if (!training.compare_exchange_strong(expected, true)) return send_error(res, 409, "training already running");
        struct Release {
            std::atomic<bool>& flag;
            ~Release() { flag = false; }
        } release{training};

        std::vector<LabelEntry> entries;
        {
            std::lock_guard lock(label_mutex);
            entries = read_label_log(path("labels.jsonl"));
        }
        const auto dataset_path = path("dataset.csv");
        write_dataset(dataset_path, build_dataset(read_detections(path("detections.jsonl")), options.config.feature, entries));
        const auto outcome = train_model(read_dataset(dataset_path), options.config.train, options.config.seed);
        save_model(path("model.json"), outcome.model);
        const auto report = report_json(outcome.report, &outcome.grid);
        write_file_atomic(path("metrics.json"), report);
        res.set_content(report, "application/json");
    }

    void get_metrics(httplib::Response& res) {
        const auto file = path("metrics.json");
        if (!std::filesystem::exists(file)) return send_error(res, 404, "no training run yet");
        res.set_content(read_file(file), "application/json");
    }

    template <typename Fn>
    auto guarded(Fn fn) {
        return [this, fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const ConfigError& e) {
                send_error(res, 400, e.what());
            } catch (const InputError& e) {
                send_error(res, 422, e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, e.what());
            }
        };
    }

    void routes() {
        http.Get("/api/snippets", guarded([this](const auto&, auto& res) { list_snippets(res); }));
        http.Get(R"(/api/snippets/([^/]+)/image\.png)",
                 guarded([this](const auto& req, auto& res) { send_png(req.matches[1], false, res); }));
        http.Get(R"(/api/snippets/([^/]+)/overlay\.png)",
                 guarded([this](const auto& req, auto& res) { send_png(req.matches[1], true, res); }));
        http.Get(R"(/api/snippets/([^/]+)/snakes)",
                 guarded([this](const auto& req, auto& res) { list_snakes(req.matches[1], res); }));
        http.Post("/api/labels", guarded([this](const auto& req, auto& res) { post_label(req, res); }));
        http.Post("/api/train", guarded([this](const auto&, auto& res) { post_train(res); }));
        http.Get("/api/metrics", guarded([this](const auto&, auto& res) { get_metrics(res); }));
        if (options.ui_dir && !http.set_mount_point("/", options.ui_dir->string())) {
            throw InputError("cannot mount UI directory " + options.ui_dir->string());
        }
    }
};

ReviewServer::ReviewServer(ServerOptions options) : impl_(std::make_unique<Impl>()) {
    impl_->options = std::move(options);
    if (!std::filesystem::exists(impl_->path("detections.jsonl"))) {
        throw InputError("state directory has no detections.jsonl: " + impl_->options.state_dir.string());
    }
    impl_->routes();
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind(int port) {
    if (port == 0) {
        const int bound = impl_->http.bind_to_any_port(impl_->options.host);
        if (bound < 0) throw InputError("cannot bind to " + impl_->options.host);
        return bound;
    }
    if (!impl_->http.bind_to_port(impl_->options.host, port)) {
        throw InputError("cannot bind to " + impl_->options.host + ":" + std::to_string(port));
    }
    return port;
}

void ReviewServer::run() { impl_->http.listen_after_bind(); }

void ReviewServer::stop() {
    if (impl_) impl_->http.stop();
}

}  // namespace whistle
