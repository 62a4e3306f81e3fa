#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace whistle {

/// Mono PCM audio normalized to [-1, 1].
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = 0;
    std::string source_path;

    double duration_seconds() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

struct AudioSnippet {
    std::vector<double> samples;
    int sample_rate = 0;
    std::string source_path;
    double offset_seconds = 0.0;
    int snippet_index = 0;
};

/// Reads a RIFF/WAVE file: 8/16/24/32-bit integer PCM or 32/64-bit float,
/// any channel count. Channels are averaged down to mono.
AudioClip load_audio(const std::filesystem::path& path);

/// Splits a clip into consecutive non-overlapping windows. A trailing
/// remainder shorter than one window is dropped.
std::vector<AudioSnippet> partition(const AudioClip& clip, double window_seconds = 3.0);

enum class WavEncoding { pcm16, float32 };

/// Writes interleaved samples (clipped to [-1, 1]) as a WAV file.
void write_wav(const std::filesystem::path& path, const std::vector<double>& interleaved,
               int sample_rate, int channels = 1, WavEncoding encoding = WavEncoding::pcm16);

}  // namespace whistle
