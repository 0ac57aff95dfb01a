#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace uci {

/// 8-bit RGB image, row-major, channel-interleaved. This is the Frame type
/// the whole pipeline moves around; augmentation and the synthetic
/// generator both work directly on it.
struct Image {
    int h = 0;
    int w = 0;
    std::vector<uint8_t> px; // h * w * 3, RGB

    Image() = default;
    Image(int height, int width) : h(height), w(width), px(static_cast<size_t>(height) * width * 3, 0) {}

    uint8_t& at(int y, int x, int c) { return px[(static_cast<size_t>(y) * w + x) * 3 + c]; }
    uint8_t at(int y, int x, int c) const { return px[(static_cast<size_t>(y) * w + x) * 3 + c]; }

    bool same_size(const Image& o) const { return h == o.h && w == o.w; }
};

/// Rec.601 luma in [0, 255].
inline double luma(double r, double g, double b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

inline uint8_t clamp_u8(double v) {
    if (v <= 0.0) return 0;
    if (v >= 255.0) return 255;
    return static_cast<uint8_t>(v + 0.5);
}

// Binary PPM (P6, maxval 255). Lossless and byte-stable, which the
// determinism contract of the corpus generator relies on.
void write_ppm(const std::filesystem::path& path, const Image& img);
Image read_ppm(const std::filesystem::path& path);

/// Bilinear resize with pixel-center mapping; out_h == h && out_w == w is an
/// exact copy.
Image resize_bilinear(const Image& img, int out_h, int out_w);

Image crop(const Image& img, int x, int y, int cw, int ch);
Image flip_horizontal(const Image& img);
Image flip_vertical(const Image& img);

/// Separable Gaussian blur, radius = ceil(3*sigma), clamp-to-edge.
Image gaussian_blur(const Image& img, double sigma);

/// Per-channel mean over a set of images (cutout fill source).
std::array<double, 3> channel_means(const std::vector<Image>& frames);

} // namespace uci
