#include "whistle/image_io.hpp"

#include <cmath>
#include <fstream>

#include <png.h>

#include "whistle/error.hpp"

namespace whistle {

Raster to_gray_raster(const GridXd& grid) {
    Raster r;
    r.width = static_cast<int>(grid.rows());
    r.height = static_cast<int>(grid.cols());
    r.pixels.resize(static_cast<std::size_t>(r.width) * static_cast<std::size_t>(r.height));
    for (int row = 0; row < r.height; ++row) {
        const Eigen::Index y = r.height - 1 - row;
        for (int x = 0; x < r.width; ++x) {
            const double v = std::clamp(grid(x, y), 0.0, 1.0);
            r.pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(r.width) + static_cast<std::size_t>(x)] =
                static_cast<std::uint8_t>(std::lround(255.0 * v));
        }
    }
    return r;
}

Raster to_gray_raster(const BitGrid& bits) { return to_gray_raster(GridXd(bits.cast<double>())); }

namespace {

void put_pixel(Raster& r, int x, int row, const Rgb& c) {
    if (x < 0 || row < 0 || x >= r.width || row >= r.height) return;
    const std::size_t i = (static_cast<std::size_t>(row) * static_cast<std::size_t>(r.width) + static_cast<std::size_t>(x)) * 3;
    r.pixels[i] = c[0];
    r.pixels[i + 1] = c[1];
    r.pixels[i + 2] = c[2];
}

void draw_line(Raster& r, double x0, double y0, double x1, double y1, const Rgb& c) {
    const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))));
    for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        const double x = x0 + t * (x1 - x0);
        const double y = y0 + t * (y1 - y0);
        put_pixel(r, static_cast<int>(std::lround(x)), r.height - 1 - static_cast<int>(std::lround(y)), c);
    }
}

}  // namespace

Raster render_overlay(const Raster& gray, const std::vector<Snake>& snakes, const std::vector<Rgb>& colors) {
    if (gray.channels != 1) throw InputError("overlay base must be a gray raster");
    Raster out;
    out.width = gray.width;
    out.height = gray.height;
    out.channels = 3;
    out.pixels.resize(gray.pixels.size() * 3);
    for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
        out.pixels[3 * i] = out.pixels[3 * i + 1] = out.pixels[3 * i + 2] = gray.pixels[i];
    }
    for (std::size_t k = 0; k < snakes.size(); ++k) {
        const Rgb color = k < colors.size() ? colors[k] : kSnakeColor;
        const auto& p = snakes[k].points;
        for (Eigen::Index i = 0; i + 1 < p.rows(); ++i) draw_line(out, p(i, 0), p(i, 1), p(i + 1, 0), p(i + 1, 1), color);
    }
    return out;
}

std::string encode_png(const Raster& raster) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(raster.width);
    image.height = static_cast<png_uint_32>(raster.height);
    image.format = raster.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, raster.pixels.data(), 0, nullptr)) {
        throw InputError(std::string("PNG encode failed: ") + image.message);
    }
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, raster.pixels.data(), 0, nullptr)) {
        throw InputError(std::string("PNG encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

void write_png(const std::filesystem::path& path, const Raster& raster) {
    const std::string bytes = encode_png(raster);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write PNG: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Raster decode_png(const std::string& bytes) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw InputError(std::string("PNG decode failed: ") + image.message);
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    Raster r;
    r.width = static_cast<int>(image.width);
    r.height = static_cast<int>(image.height);
    r.channels = color ? 3 : 1;
    r.pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, r.pixels.data(), 0, nullptr)) {
        png_image_free(&image);
        throw InputError(std::string("PNG decode failed: ") + image.message);
    }
    return r;
}

Raster read_png(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read PNG: " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

}  // namespace whistle
