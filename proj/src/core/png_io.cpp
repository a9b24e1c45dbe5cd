#include "png_io.hpp"

#include "errors.hpp"

#include <png.h>

#include <cstring>

namespace mtra::png {

namespace {

struct ImageGuard {
    png_image image{};
    ImageGuard() {
        std::memset(&image, 0, sizeof image);
        image.version = PNG_IMAGE_VERSION;
    }
    ~ImageGuard() { png_image_free(&image); }
    ImageGuard(const ImageGuard&) = delete;
    ImageGuard& operator=(const ImageGuard&) = delete;
};

}  // namespace

GrayImage read_gray(const std::filesystem::path& path) {
    ImageGuard g;
    if (!png_image_begin_read_from_file(&g.image, path.c_str())) {
        throw RuntimeError("cannot read PNG '" + path.string() + "': " + g.image.message);
    }
    GrayImage out;
    out.height = static_cast<int>(g.image.height);
    out.width = static_cast<int>(g.image.width);
    const std::size_t n = static_cast<std::size_t>(out.height) * out.width;
    out.values.resize(n);

    if (g.image.format & PNG_FORMAT_FLAG_LINEAR) {
        out.bit_depth = 16;
        g.image.format = PNG_FORMAT_LINEAR_Y;
        std::vector<png_uint_16> buf(n);
        if (!png_image_finish_read(&g.image, nullptr, buf.data(), 0, nullptr)) {
            throw RuntimeError("cannot decode PNG '" + path.string() + "': " + g.image.message);
        }
        std::copy(buf.begin(), buf.end(), out.values.begin());
    } else {
        out.bit_depth = 8;
        g.image.format = PNG_FORMAT_GRAY;
        std::vector<png_byte> buf(n);
        if (!png_image_finish_read(&g.image, nullptr, buf.data(), 0, nullptr)) {
            throw RuntimeError("cannot decode PNG '" + path.string() + "': " + g.image.message);
        }
        std::copy(buf.begin(), buf.end(), out.values.begin());
    }
    return out;
}

void write_gray8(const std::filesystem::path& path, int height, int width, std::span<const std::uint8_t> data) {
    if (data.size() != static_cast<std::size_t>(height) * width) {
        throw ValidationError("PNG buffer size does not match " + std::to_string(height) + "x" + std::to_string(width));
    }
    ImageGuard g;
    g.image.width = static_cast<png_uint_32>(width);
    g.image.height = static_cast<png_uint_32>(height);
    g.image.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&g.image, path.c_str(), 0, data.data(), 0, nullptr)) {
        throw RuntimeError("cannot write PNG '" + path.string() + "': " + g.image.message);
    }
}

void write_gray16(const std::filesystem::path& path, int height, int width, std::span<const std::uint16_t> data) {
    if (data.size() != static_cast<std::size_t>(height) * width) {
        throw ValidationError("PNG buffer size does not match " + std::to_string(height) + "x" + std::to_string(width));
    }
    ImageGuard g;
    g.image.width = static_cast<png_uint_32>(width);
    g.image.height = static_cast<png_uint_32>(height);
    g.image.format = PNG_FORMAT_LINEAR_Y;
    if (!png_image_write_to_file(&g.image, path.c_str(), 0, data.data(), 0, nullptr)) {
        throw RuntimeError("cannot write PNG '" + path.string() + "': " + g.image.message);
    }
}

void write_indexed(const std::filesystem::path& path, int height, int width, std::span<const std::uint8_t> indices,
                   std::span<const std::array<std::uint8_t, 3>> palette) {
    if (indices.size() != static_cast<std::size_t>(height) * width) {
        throw ValidationError("PNG buffer size does not match " + std::to_string(height) + "x" + std::to_string(width));
    }
    if (palette.empty() || palette.size() > 256) throw ValidationError("palette must hold 1..256 entries");
    for (std::uint8_t v : indices) {
        if (v >= palette.size()) throw ValidationError("index " + std::to_string(v) + " outside the palette");
    }
    std::vector<png_byte> cmap;
    cmap.reserve(palette.size() * 3);
    for (const auto& rgb : palette) cmap.insert(cmap.end(), rgb.begin(), rgb.end());

    ImageGuard g;
    g.image.width = static_cast<png_uint_32>(width);
    g.image.height = static_cast<png_uint_32>(height);
    g.image.format = PNG_FORMAT_RGB_COLORMAP;
    g.image.colormap_entries = static_cast<png_uint_32>(palette.size());
    if (!png_image_write_to_file(&g.image, path.c_str(), 0, indices.data(), 0, cmap.data())) {
        throw RuntimeError("cannot write PNG '" + path.string() + "': " + g.image.message);
    }
}

}  // namespace mtra::png
