#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "whistle/image.hpp"
#include "whistle/snake.hpp"

namespace whistle {

/// 8-bit raster in PNG orientation: row 0 is the top (highest frequency bin).
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 1;  // 1 = gray, 3 = RGB
    std::vector<std::uint8_t> pixels;
};

/// Gray raster of a grid: width = rows (time), height = cols (frequency),
/// pixel = round(255 * v) with v clamped to [0, 1].
Raster to_gray_raster(const GridXd& grid);
Raster to_gray_raster(const BitGrid& bits);

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kSnakeColor{255, 200, 0};
inline constexpr Rgb kAcceptedColor{0, 230, 0};
inline constexpr Rgb kRejectedColor{255, 0, 0};

/// RGB copy of a gray raster with polylines drawn on top.
Raster render_overlay(const Raster& gray, const std::vector<Snake>& snakes, const std::vector<Rgb>& colors);

void write_png(const std::filesystem::path& path, const Raster& raster);
std::string encode_png(const Raster& raster);
Raster read_png(const std::filesystem::path& path);
Raster decode_png(const std::string& bytes);

}  // namespace whistle
