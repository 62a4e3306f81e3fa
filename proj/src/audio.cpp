#include "whistle/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "whistle/error.hpp"

namespace whistle {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>(v >> 8));
}

struct Format {
    std::uint16_t tag = 0;
    int channels = 0;
    int sample_rate = 0;
    int bits = 0;
    bool seen = false;
};

double decode_sample(const unsigned char* p, const Format& fmt) {
    if (fmt.tag == kFormatFloat) {
        if (fmt.bits == 32) {
            float f;
            std::memcpy(&f, p, 4);
            return static_cast<double>(f);
        }
        double d;
        std::memcpy(&d, p, 8);
        return d;
    }
    switch (fmt.bits) {
        case 8:
            return (static_cast<int>(p[0]) - 128) / 128.0;
        case 16:
            return static_cast<std::int16_t>(read_u16(p)) / 32768.0;
        case 24: {
            std::int32_t v = std::int32_t(p[0]) | (std::int32_t(p[1]) << 8) | (std::int32_t(p[2]) << 16);
            if (v & 0x800000) v -= 0x1000000;
            return v / 8388608.0;
        }
        case 32:
            return static_cast<std::int32_t>(read_u32(p)) / 2147483648.0;
        default:
            return 0.0;
    }
}

}  // namespace

AudioClip load_audio(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open audio file: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw InputError("not a RIFF/WAVE file: " + path.string());
    }

    Format fmt;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t size = read_u32(chunk + 4);
        const std::size_t body = pos + 8;
        const std::size_t available = bytes.size() - body;
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16 || available < 16) throw InputError("truncated fmt chunk: " + path.string());
            const unsigned char* f = bytes.data() + body;
            fmt.tag = read_u16(f);
            fmt.channels = read_u16(f + 2);
            fmt.sample_rate = static_cast<int>(read_u32(f + 4));
            fmt.bits = read_u16(f + 14);
            if (fmt.tag == kFormatExtensible) {
                if (size < 40 || available < 40) throw InputError("truncated extensible fmt chunk: " + path.string());
                // First two bytes of the subformat GUID carry the actual format tag.
                fmt.tag = read_u16(f + 24);
            }
            fmt.seen = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = bytes.data() + body;
            data_size = std::min<std::size_t>(size, available);
        }
        pos = body + size + (size & 1u);
    }

    if (!fmt.seen) throw InputError("missing fmt chunk: " + path.string());
    if (!data) throw InputError("missing data chunk: " + path.string());

    const bool int_ok = fmt.tag == kFormatPcm &&
                        (fmt.bits == 8 || fmt.bits == 16 || fmt.bits == 24 || fmt.bits == 32);
    const bool float_ok = fmt.tag == kFormatFloat && (fmt.bits == 32 || fmt.bits == 64);
    if (!int_ok && !float_ok) {
        throw InputError("unsupported WAV encoding (tag " + std::to_string(fmt.tag) + ", " +
                         std::to_string(fmt.bits) + " bits): " + path.string());
    }
    if (fmt.channels <= 0 || fmt.sample_rate <= 0) throw InputError("invalid WAV header: " + path.string());

    const std::size_t bytes_per_sample = static_cast<std::size_t>(fmt.bits / 8);
    const std::size_t frame_bytes = bytes_per_sample * static_cast<std::size_t>(fmt.channels);
    const std::size_t frames = data_size / frame_bytes;
    if (frames == 0) throw InputError("zero-length audio: " + path.string());

    AudioClip clip;
    clip.sample_rate = fmt.sample_rate;
    clip.source_path = path.string();
    clip.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        const unsigned char* frame = data + i * frame_bytes;
        double sum = 0.0;
        for (int c = 0; c < fmt.channels; ++c) sum += decode_sample(frame + c * bytes_per_sample, fmt);
        const double v = sum / fmt.channels;
        if (!std::isfinite(v)) throw InputError("non-finite sample in " + path.string());
        clip.samples[i] = std::clamp(v, -1.0, 1.0);
    }
    return clip;
}

std::vector<AudioSnippet> partition(const AudioClip& clip, double window_seconds) {
    if (!(window_seconds > 0.0)) throw ConfigError("window_seconds must be positive");
    const auto window = static_cast<std::size_t>(std::llround(window_seconds * clip.sample_rate));
    std::vector<AudioSnippet> out;
    if (window == 0) return out;
    const std::size_t count = clip.samples.size() / window;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        AudioSnippet s;
        const auto first = clip.samples.begin() + static_cast<std::ptrdiff_t>(k * window);
        s.samples.assign(first, first + static_cast<std::ptrdiff_t>(window));
        s.sample_rate = clip.sample_rate;
        s.source_path = clip.source_path;
        s.offset_seconds = static_cast<double>(k * window) / clip.sample_rate;
        s.snippet_index = static_cast<int>(k);
        out.push_back(std::move(s));
    }
    return out;
}

void write_wav(const std::filesystem::path& path, const std::vector<double>& interleaved, int sample_rate,
               int channels, WavEncoding encoding) {
    const std::uint16_t bits = encoding == WavEncoding::pcm16 ? 16 : 32;
    const std::uint16_t tag = encoding == WavEncoding::pcm16 ? kFormatPcm : kFormatFloat;
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(interleaved.size() * (bits / 8));

    std::string out;
    out.reserve(44 + data_bytes);
    out += "RIFF";
    put_u32(out, 36 + data_bytes);
    out += "WAVEfmt ";
    put_u32(out, 16);
    put_u16(out, tag);
    put_u16(out, static_cast<std::uint16_t>(channels));
    put_u32(out, static_cast<std::uint32_t>(sample_rate));
    put_u32(out, static_cast<std::uint32_t>(sample_rate * channels * (bits / 8)));
    put_u16(out, static_cast<std::uint16_t>(channels * (bits / 8)));
    put_u16(out, bits);
    out += "data";
    put_u32(out, data_bytes);
    for (double v : interleaved) {
        const double c = std::clamp(v, -1.0, 1.0);
        if (encoding == WavEncoding::pcm16) {
            const auto q = static_cast<std::int16_t>(std::lround(std::clamp(c * 32768.0, -32768.0, 32767.0)));
            put_u16(out, static_cast<std::uint16_t>(q));
        } else {
            const float f = static_cast<float>(c);
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            put_u32(out, u);
        }
    }

    std::ofstream file(path, std::ios::binary);
    if (!file) throw InputError("cannot write WAV file: " + path.string());
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace whistle
