#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mtra::png {

/// Raw single-channel PNG contents. 8-bit files hold values in [0,255],
/// 16-bit files in [0,65535].
struct GrayImage {
    int height = 0;
    int width = 0;
    int bit_depth = 8;
    std::vector<std::uint16_t> values;
};

GrayImage read_gray(const std::filesystem::path& path);

void write_gray8(const std::filesystem::path& path, int height, int width, std::span<const std::uint8_t> data);
void write_gray16(const std::filesystem::path& path, int height, int width, std::span<const std::uint16_t> data);

/// Palette PNG; each value in `indices` selects an entry of `palette` (RGB).
void write_indexed(const std::filesystem::path& path, int height, int width, std::span<const std::uint8_t> indices,
                   std::span<const std::array<std::uint8_t, 3>> palette);

}  // namespace mtra::png
