#include "whistle/spectrogram.hpp"

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "whistle/error.hpp"

namespace whistle {

void StftConfig::validate() const {
    if (window_length < 2) throw ConfigError("stft.window_length must be at least 2");
    if (hop <= 0 || hop > window_length) throw ConfigError("stft.hop must satisfy 0 < hop <= window_length");
}

Eigen::ArrayXd make_window(WindowFunction fn, int length) {
    // Periodic (DFT-even) windows.
    const Eigen::ArrayXd n = Eigen::ArrayXd::LinSpaced(length, 0.0, length - 1.0);
    const double two_pi = 2.0 * std::numbers::pi;
    switch (fn) {
        case WindowFunction::hann:
            return 0.5 - 0.5 * (two_pi * n / length).cos();
        case WindowFunction::hamming:
            return 0.54 - 0.46 * (two_pi * n / length).cos();
        case WindowFunction::rectangular:
            break;
    }
    return Eigen::ArrayXd::Ones(length);
}

Spectrogram compute_spectrogram(const AudioSnippet& snippet, const StftConfig& cfg) {
    cfg.validate();
    const auto length = static_cast<Eigen::Index>(snippet.samples.size());
    if (length < cfg.window_length) {
        throw InputError("snippet shorter than one STFT window (" + std::to_string(length) + " < " +
                         std::to_string(cfg.window_length) + ")");
    }

    const Eigen::Index frames = frame_count(length, cfg);
    const Eigen::Index bins = cfg.window_length / 2 + 1;
    const Eigen::ArrayXd window = make_window(cfg.window_function, cfg.window_length);
    const Eigen::Map<const Eigen::ArrayXd> signal(snippet.samples.data(), length);

    constexpr double kEps = 1e-10;
    GridXd db(frames, bins);
    Eigen::FFT<double> fft;
    std::vector<double> frame(static_cast<std::size_t>(cfg.window_length));
    std::vector<std::complex<double>> spectrum;
    for (Eigen::Index x = 0; x < frames; ++x) {
        Eigen::Map<Eigen::ArrayXd>(frame.data(), cfg.window_length) =
            signal.segment(x * cfg.hop, cfg.window_length) * window;
        fft.fwd(spectrum, frame);
        for (Eigen::Index y = 0; y < bins; ++y) {
            db(x, y) = 20.0 * std::log10(std::abs(spectrum[static_cast<std::size_t>(y)]) + kEps);
        }
    }

    Spectrogram out;
    const double lo = db.minCoeff();
    const double hi = db.maxCoeff();
    if (hi - lo > 0.0) {
        out.intensity = 1.0 - (db - lo) / (hi - lo);
    } else {
        out.intensity = GridXd::Ones(frames, bins);
    }
    out.frame_duration = static_cast<double>(cfg.hop) / snippet.sample_rate;
    out.bin_width = static_cast<double>(snippet.sample_rate) / cfg.window_length;
    out.source = snippet_id(snippet);
    return out;
}

std::string snippet_id(const AudioSnippet& snippet) {
    char index[16];
    std::snprintf(index, sizeof index, "%03d", snippet.snippet_index);
    return std::filesystem::path(snippet.source_path).stem().string() + "-" + index;
}

}  // namespace whistle
