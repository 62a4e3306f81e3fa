#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "whistle/config.hpp"

namespace whistle {

struct ServerOptions {
    std::filesystem::path state_dir;  // output directory of `detect`
    PipelineConfig config;
    std::optional<std::filesystem::path> ui_dir;  // static bundle mounted at /
    std::string host = "127.0.0.1";
};

/// REST service over a detection state directory.
///
///   GET  /api/snippets                  list with snake counts and labeling progress
///   GET  /api/snippets/{id}/image.png   grayscale spectrogram
///   GET  /api/snippets/{id}/overlay.png spectrogram with snakes drawn
///   GET  /api/snippets/{id}/snakes      records with current labels and versions
///   POST /api/labels                    {snake_id, target, version?}
///   POST /api/train                     trains on labeled rows, returns the report
///   GET  /api/metrics                   last training report
///
/// Labels append to labels.jsonl; the log is replaced atomically on each write.
class ReviewServer {
public:
    explicit ReviewServer(ServerOptions options);
    ~ReviewServer();
    ReviewServer(const ReviewServer&) = delete;
    ReviewServer& operator=(const ReviewServer&) = delete;

    /// Binds to `port` (0 picks a free one) and returns the bound port.
    /// Throws InputError when the port is unavailable.
    int bind(int port);
    /// Serves until stop(). Requires bind().
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace whistle
