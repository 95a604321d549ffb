#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace rnr {

/// RGB image in normalized [0,1] intensity space. Row-major, interleaved
/// channels, always exactly three of them.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> data; // height * width * 3

    Image() = default;
    Image(int h, int w, float fill = 0.0f);

    float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    float at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
    bool same_shape(const Image& other) const { return height == other.height && width == other.width; }
};

/// Single-channel float plane (luma, transmission maps, streak layers).
struct Plane {
    int height = 0;
    int width = 0;
    std::vector<float> v;

    Plane() = default;
    Plane(int h, int w, float fill = 0.0f);

    float& at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
    float at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

void clamp01(Image& img);

/// Rec.601 luma, Y = 0.299 R + 0.587 G + 0.114 B.
Plane luma(const Image& img);

/// 8-bit sRGB PNG I/O. Decode maps [0,255] -> [0,1] by division; encode by
/// round(v*255) with clamping. Throws std::runtime_error on I/O or decode
/// failure.
Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& img);

} // namespace rnr
