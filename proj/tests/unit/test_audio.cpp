#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <fstream>

#include "synth.hpp"
#include "whistle/audio.hpp"
#include "whistle/error.hpp"

using namespace whistle;

namespace {

void put_u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
}
void put_u16(std::string& s, std::uint16_t v) {
    s += static_cast<char>(v & 0xff);
    s += static_cast<char>(v >> 8);
}

// Hand-built RIFF file, independent of write_wav.
std::string riff(std::uint16_t format, std::uint16_t channels, std::uint32_t sr, std::uint16_t bits, const std::string& data,
                 bool extra_chunk = false) {
    std::string fmt;
    put_u16(fmt, format);
    put_u16(fmt, channels);
    put_u32(fmt, sr);
    put_u32(fmt, sr * channels * bits / 8);
    put_u16(fmt, static_cast<std::uint16_t>(channels * bits / 8));
    put_u16(fmt, bits);
    std::string body = "WAVE";
    body += "fmt ";
    put_u32(body, static_cast<std::uint32_t>(fmt.size()));
    body += fmt;
    if (extra_chunk) {
        body += "LIST";
        put_u32(body, 3);
        body += "abc";
        body += '\0';
    }
    body += "data";
    put_u32(body, static_cast<std::uint32_t>(data.size()));
    body += data;
    std::string out = "RIFF";
    put_u32(out, static_cast<std::uint32_t>(body.size()));
    return out + body;
}

std::filesystem::path dump(const std::filesystem::path& dir, const std::string& name, const std::string& bytes) {
    const auto p = dir / name;
    std::ofstream(p, std::ios::binary) << bytes;
    return p;
}

}  // namespace

TEST_CASE("16-bit mono round trip through write_wav") {
    const auto dir = synth::temp_dir("audio16");
    std::vector<double> x{0.0, 0.5, -0.5, 1.0, -1.0, 0.25};
    write_wav(dir / "a.wav", x, 48000);
    const auto clip = load_audio(dir / "a.wav");
    CHECK(clip.sample_rate == 48000);
    REQUIRE(clip.samples.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(clip.samples[i] == doctest::Approx(x[i]).epsilon(1.0 / 32768));
}

TEST_CASE("float32 round trip is exact for representable values") {
    const auto dir = synth::temp_dir("audiof32");
    std::vector<double> x{0.0, 0.125, -0.75, 0.5};
    write_wav(dir / "f.wav", x, 22050, 1, WavEncoding::float32);
    const auto clip = load_audio(dir / "f.wav");
    CHECK(clip.samples == x);
}

TEST_CASE("8, 24 and 32-bit integer PCM decode to [-1, 1]") {
    const auto dir = synth::temp_dir("audioint");
    {
        std::string d{static_cast<char>(128), static_cast<char>(255), static_cast<char>(0)};
        const auto c = load_audio(dump(dir, "u8.wav", riff(1, 1, 8000, 8, d)));
        REQUIRE(c.samples.size() == 3);
        CHECK(c.samples[0] == 0.0);
        CHECK(c.samples[1] == doctest::Approx(127.0 / 128.0));
        CHECK(c.samples[2] == -1.0);
    }
    {
        std::string d;
        for (std::int32_t v : {0x400000, -0x800000}) {
            for (int i = 0; i < 3; ++i) d += static_cast<char>((v >> (8 * i)) & 0xff);
        }
        const auto c = load_audio(dump(dir, "s24.wav", riff(1, 1, 8000, 24, d, true)));
        REQUIRE(c.samples.size() == 2);
        CHECK(c.samples[0] == 0.5);
        CHECK(c.samples[1] == -1.0);
    }
    {
        std::string d;
        put_u32(d, 0x40000000u);
        const auto c = load_audio(dump(dir, "s32.wav", riff(1, 1, 8000, 32, d)));
        CHECK(c.samples.at(0) == 0.5);
    }
    {
        std::string d(8, '\0');
        const double v = -0.25;
        std::memcpy(d.data(), &v, 8);
        const auto c = load_audio(dump(dir, "f64.wav", riff(3, 1, 8000, 64, d)));
        CHECK(c.samples.at(0) == -0.25);
    }
}

TEST_CASE("stereo +0.5 / -0.5 downmixes to zeros") {
    const auto dir = synth::temp_dir("audiost");
    std::vector<double> inter;
    for (int i = 0; i < 100; ++i) {
        inter.push_back(0.5);
        inter.push_back(-0.5);
    }
    write_wav(dir / "s.wav", inter, 48000, 2);
    const auto clip = load_audio(dir / "s.wav");
    REQUIRE(clip.samples.size() == 100);
    for (double v : clip.samples) CHECK(v == 0.0);
}

TEST_CASE("all-zero WAV is a valid clip of zeros") {
    const auto dir = synth::temp_dir("audiozero");
    write_wav(dir / "z.wav", std::vector<double>(480, 0.0), 48000);
    const auto clip = load_audio(dir / "z.wav");
    CHECK(clip.samples.size() == 480);
    CHECK(std::all_of(clip.samples.begin(), clip.samples.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("load errors") {
    const auto dir = synth::temp_dir("audioerr");
    CHECK_THROWS_AS(load_audio(dir / "missing.wav"), InputError);
    CHECK_THROWS_AS(load_audio(dump(dir, "junk.wav", "not a wav file at all")), InputError);
    CHECK_THROWS_AS(load_audio(dump(dir, "empty.wav", riff(1, 1, 8000, 16, ""))), InputError);
    CHECK_THROWS_AS(load_audio(dump(dir, "alaw.wav", riff(6, 1, 8000, 8, "ab"))), InputError);
    CHECK_THROWS_AS(load_audio(dump(dir, "b12.wav", riff(1, 1, 8000, 12, "ab"))), InputError);
}

TEST_CASE("180 s at 48 kHz gives 8,640,000 samples and sixty 3 s snippets") {
    AudioClip clip;
    clip.sample_rate = 48000;
    clip.samples.resize(180 * 48000);
    for (std::size_t i = 0; i < clip.samples.size(); ++i) clip.samples[i] = static_cast<double>(i % 1000) / 1000.0;
    CHECK(clip.samples.size() == 8'640'000);
    const auto snippets = partition(clip);
    REQUIRE(snippets.size() == 60);
    for (std::size_t k = 0; k < snippets.size(); ++k) {
        CHECK(snippets[k].samples.size() == 144'000);
        CHECK(snippets[k].snippet_index == static_cast<int>(k));
        CHECK(snippets[k].offset_seconds == doctest::Approx(3.0 * static_cast<double>(k)));
    }
    std::vector<double> joined;
    for (const auto& s : snippets) joined.insert(joined.end(), s.samples.begin(), s.samples.end());
    CHECK(std::equal(joined.begin(), joined.end(), clip.samples.begin()));
}

TEST_CASE("partition edge cases") {
    AudioClip clip;
    clip.sample_rate = 1000;
    clip.samples.assign(3000, 0.1);
    CHECK(partition(clip).size() == 1);
    CHECK(partition(clip)[0].offset_seconds == 0.0);
    clip.samples.assign(4500, 0.1);
    const auto p = partition(clip);
    REQUIRE(p.size() == 1);
    CHECK(p[0].samples.size() == 3000);
    clip.samples.assign(2999, 0.1);
    CHECK(partition(clip).empty());
    for (int n : {0, 1, 2999, 3000, 8999, 9000, 12345}) {
        clip.samples.assign(static_cast<std::size_t>(n), 0.0);
        CHECK(partition(clip).size() == static_cast<std::size_t>(n / 3000));
    }
}
