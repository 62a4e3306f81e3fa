#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "synth.hpp"
#include "whistle/error.hpp"
#include "whistle/image_io.hpp"
#include "whistle/spectrogram.hpp"

using namespace whistle;

namespace {

AudioSnippet snippet_of(std::vector<double> x, int sr = 48000) {
    AudioSnippet s;
    s.samples = std::move(x);
    s.sample_rate = sr;
    s.source_path = "/data/rec.wav";
    s.snippet_index = 7;
    return s;
}

std::vector<double> sine(double f, int sr, std::size_t n, double amp = 0.5) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / sr);
    return x;
}

// Direct O(N^2) DFT of each frame, then the same dB normalization written out longhand.
GridXd naive_spectrogram(const std::vector<double>& x, int w, int hop) {
    std::vector<double> win(static_cast<std::size_t>(w));
    for (int n = 0; n < w; ++n) win[static_cast<std::size_t>(n)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / w);
    int frames = 0;
    for (std::size_t start = 0; start + static_cast<std::size_t>(w) <= x.size(); start += static_cast<std::size_t>(hop)) ++frames;
    const int bins = w / 2 + 1;
    GridXd db(frames, bins);
    for (int t = 0; t < frames; ++t) {
        for (int k = 0; k < bins; ++k) {
            std::complex<double> acc = 0.0;
            for (int n = 0; n < w; ++n) {
                const double v = x[static_cast<std::size_t>(t * hop + n)] * win[static_cast<std::size_t>(n)];
                acc += v * std::polar(1.0, -2.0 * std::numbers::pi * k * n / w);
            }
            db(t, k) = 20.0 * std::log10(std::abs(acc) + 1e-10);
        }
    }
    const double lo = db.minCoeff(), hi = db.maxCoeff();
    GridXd out(frames, bins);
    for (int t = 0; t < frames; ++t) {
        for (int k = 0; k < bins; ++k) out(t, k) = hi > lo ? 1.0 - (db(t, k) - lo) / (hi - lo) : 1.0;
    }
    return out;
}

}  // namespace

TEST_CASE("144000 samples at 256/128 gives 1124 frames and 129 bins") {
    StftConfig cfg;
    int loop_frames = 0;
    for (long start = 0; start + cfg.window_length <= 144000; start += cfg.hop) ++loop_frames;
    CHECK(loop_frames == 1124);
    CHECK(frame_count(144000, cfg) == loop_frames);
    const auto s = compute_spectrogram(snippet_of(synth::noise(144000, 0.1, 1)), cfg);
    CHECK(s.frames() == 1124);
    CHECK(s.bins() == 129);
    CHECK(s.frame_duration == doctest::Approx(128.0 / 48000.0));
    CHECK(s.bin_width == doctest::Approx(187.5));
    CHECK(s.source == "rec-007");
}

TEST_CASE("frame count matches a loop oracle for many lengths and configs") {
    for (int w : {16, 64, 256}) {
        for (int hop : {1, w / 4, w / 2, w}) {
            StftConfig cfg;
            cfg.window_length = w;
            cfg.hop = hop;
            for (long len : {0L, 1L, static_cast<long>(w) - 1, static_cast<long>(w), 1000L, 1001L}) {
                long n = 0;
                for (long start = 0; start + w <= len; start += hop) ++n;
                CHECK(frame_count(len, cfg) == n);
            }
        }
    }
}

TEST_CASE("10 kHz sine at 48 kHz is darkest at bin 53") {
    const int expected = static_cast<int>(std::lround(10000.0 / (48000.0 / 256.0)));
    CHECK(expected == 53);
    const auto s = compute_spectrogram(snippet_of(sine(10000.0, 48000, 48000)), StftConfig{});
    const Eigen::ArrayXd col_mean = s.intensity.colwise().mean().transpose();
    Eigen::Index darkest = 0;
    col_mean.minCoeff(&darkest);
    CHECK(darkest == expected);
    for (Eigen::Index x = 0; x < s.frames(); ++x) {
        Eigen::Index y = 0;
        s.intensity.row(x).minCoeff(&y);
        CHECK(y == expected);
    }
}

TEST_CASE("silence normalizes to an all-white image") {
    const auto s = compute_spectrogram(snippet_of(std::vector<double>(4800, 0.0)), StftConfig{});
    CHECK((s.intensity == 1.0).all());
}

TEST_CASE("matches a direct DFT oracle") {
    StftConfig cfg;
    cfg.window_length = 64;
    cfg.hop = 16;
    auto x = synth::noise(2000, 0.05, 3);
    const auto tone = sine(3000.0, 16000, 2000, 0.3);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += tone[i];
    const auto s = compute_spectrogram(snippet_of(x, 16000), cfg);
    const GridXd oracle = naive_spectrogram(x, 64, 16);
    REQUIRE(s.frames() == oracle.rows());
    REQUIRE(s.bins() == oracle.cols());
    CHECK((s.intensity - oracle).abs().maxCoeff() < 1e-9);
}

TEST_CASE("intensity in [0, 1] and scale invariance") {
    const auto x = synth::noise(20000, 0.2, 9);
    auto y = x;
    for (auto& v : y) v *= 0.125;
    const auto a = compute_spectrogram(snippet_of(x), StftConfig{});
    const auto b = compute_spectrogram(snippet_of(y), StftConfig{});
    CHECK((a.intensity >= 0.0).all());
    CHECK((a.intensity <= 1.0).all());
    CHECK(a.intensity.minCoeff() == 0.0);
    CHECK(a.intensity.maxCoeff() == 1.0);
    // the 1e-10 magnitude floor shifts the quietest bins slightly
    CHECK((a.intensity - b.intensity).abs().maxCoeff() < 1e-6);
}

TEST_CASE("dimensions depend only on length and config") {
    StftConfig cfg;
    cfg.window_length = 128;
    cfg.hop = 32;
    const auto a = compute_spectrogram(snippet_of(synth::noise(10000, 0.1, 1)), cfg);
    const auto b = compute_spectrogram(snippet_of(sine(440.0, 48000, 10000)), cfg);
    CHECK(a.frames() == b.frames());
    CHECK(a.bins() == 65);
}

TEST_CASE("windows") {
    const auto hann = make_window(WindowFunction::hann, 8);
    CHECK(hann(0) == doctest::Approx(0.0));
    CHECK(hann(4) == doctest::Approx(1.0));
    CHECK(hann(2) == doctest::Approx(0.5));
    const auto ham = make_window(WindowFunction::hamming, 8);
    CHECK(ham(0) == doctest::Approx(0.08));
    CHECK((make_window(WindowFunction::rectangular, 5) == 1.0).all());
}

TEST_CASE("config validation") {
    StftConfig cfg;
    cfg.hop = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.hop = 300;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.hop = 256;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("PNG export flips frequency so DC is the bottom row") {
    GridXd g(3, 2);
    g << 0.0, 1.0, 0.5, 0.25, 1.0, 0.0;
    const Raster r = to_gray_raster(g);
    CHECK(r.width == 3);
    CHECK(r.height == 2);
    // bottom row (y = 0)
    CHECK(r.pixels[3 + 0] == 0);
    CHECK(r.pixels[3 + 1] == 128);
    CHECK(r.pixels[3 + 2] == 255);
    // top row (y = 1)
    CHECK(r.pixels[0] == 255);
    CHECK(r.pixels[1] == 64);
    CHECK(r.pixels[2] == 0);
    const Raster back = decode_png(encode_png(r));
    CHECK(back.width == 3);
    CHECK(back.height == 2);
    CHECK(back.pixels == r.pixels);
}
