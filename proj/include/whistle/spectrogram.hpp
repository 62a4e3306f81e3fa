#pragma once

#include <string>

#include "whistle/audio.hpp"
#include "whistle/image.hpp"

namespace whistle {

enum class WindowFunction { hann, hamming, rectangular };

struct StftConfig {
    int window_length = 256;
    int hop = 128;
    WindowFunction window_function = WindowFunction::hann;

    void validate() const;
};

/// Grayscale time-frequency image. intensity(x, y) in [0, 1], 0 = black = most
/// energy. x is the frame index, y the frequency bin with y = 0 at DC.
struct Spectrogram {
    GridXd intensity;
    double frame_duration = 0.0;  // hop / sample_rate
    double bin_width = 0.0;       // sample_rate / window_length
    std::string source;

    Eigen::Index frames() const { return intensity.rows(); }
    Eigen::Index bins() const { return intensity.cols(); }
};

Eigen::ArrayXd make_window(WindowFunction fn, int length);

/// Number of frames emitted for a signal of the given length.
inline Eigen::Index frame_count(Eigen::Index length, const StftConfig& cfg) {
    return length < cfg.window_length ? 0 : (length - cfg.window_length) / cfg.hop + 1;
}

/// Magnitude STFT in dB, min-max normalized per image and inverted so that
/// high energy is dark. A constant-dB image maps to all ones.
Spectrogram compute_spectrogram(const AudioSnippet& snippet, const StftConfig& cfg);

/// Identifier used for file names and the HTTP API: "<stem>-<index>".
std::string snippet_id(const AudioSnippet& snippet);

}  // namespace whistle
