#include "uci/image.hpp"

#include "uci/common.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace uci {

void write_ppm(const std::filesystem::path& path, const Image& img) {
    if (img.h <= 0 || img.w <= 0 || img.px.size() != static_cast<size_t>(img.h) * img.w * 3)
        throw IoError("write_ppm: degenerate image for " + path.string());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("write_ppm: cannot open " + path.string());
    out << "P6\n" << img.w << " " << img.h << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
    if (!out)
        throw IoError("write_ppm: short write to " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("read_ppm: cannot open " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P6")
        throw IoError("read_ppm: " + path.string() + " is not a binary PPM");
    // PPM allows '#' comments between header tokens.
    auto next_int = [&](const char* what) {
        for (;;) {
            int c = in.peek();
            if (c == EOF) throw IoError(std::string("read_ppm: truncated header (") + what + ") in " + path.string());
            if (std::isspace(c)) { in.get(); continue; }
            if (c == '#') { std::string line; std::getline(in, line); continue; }
            break;
        }
        long v = 0;
        in >> v;
        if (!in) throw IoError(std::string("read_ppm: bad header value (") + what + ") in " + path.string());
        return v;
    };
    long w = next_int("width");
    long h = next_int("height");
    long maxval = next_int("maxval");
    if (w <= 0 || h <= 0 || maxval != 255)
        throw IoError("read_ppm: unsupported header in " + path.string());
    in.get(); // single whitespace after maxval
    Image img(static_cast<int>(h), static_cast<int>(w));
    in.read(reinterpret_cast<char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.px.size()))
        throw IoError("read_ppm: truncated pixel data in " + path.string());
    return img;
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
    if (out_h == img.h && out_w == img.w)
        return img;
    Image out(out_h, out_w);
    const double sy = static_cast<double>(img.h) / out_h;
    const double sx = static_cast<double>(img.w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        if (fy < 0.0) fy = 0.0;
        if (fy > img.h - 1) fy = img.h - 1;
        int y0 = static_cast<int>(fy);
        int y1 = y0 + 1 < img.h ? y0 + 1 : y0;
        double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            if (fx < 0.0) fx = 0.0;
            if (fx > img.w - 1) fx = img.w - 1;
            int x0 = static_cast<int>(fx);
            int x1 = x0 + 1 < img.w ? x0 + 1 : x0;
            double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                double top = (1.0 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
                double bot = (1.0 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
                out.at(y, x, c) = clamp_u8((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

Image crop(const Image& img, int x, int y, int cw, int ch) {
    if (x < 0 || y < 0 || cw <= 0 || ch <= 0 || x + cw > img.w || y + ch > img.h)
        throw ConfigError("crop: rectangle outside image");
    Image out(ch, cw);
    for (int yy = 0; yy < ch; ++yy)
        for (int xx = 0; xx < cw; ++xx)
            for (int c = 0; c < 3; ++c)
                out.at(yy, xx, c) = img.at(y + yy, x + xx, c);
    return out;
}

Image flip_horizontal(const Image& img) {
    Image out(img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(y, x, c) = img.at(y, img.w - 1 - x, c);
    return out;
}

Image flip_vertical(const Image& img) {
    Image out(img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(y, x, c) = img.at(img.h - 1 - y, x, c);
    return out;
}

Image gaussian_blur(const Image& img, double sigma) {
    if (sigma <= 0.0)
        return img;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) k /= sum;

    auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };

    // horizontal pass into a float buffer, vertical pass back to u8
    std::vector<double> tmp(static_cast<size_t>(img.h) * img.w * 3);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[i + radius] * img.at(y, clampi(x + i, 0, img.w - 1), c);
                tmp[(static_cast<size_t>(y) * img.w + x) * 3 + c] = acc;
            }
        }
    }
    Image out(img.h, img.w);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[i + radius] * tmp[(static_cast<size_t>(clampi(y + i, 0, img.h - 1)) * img.w + x) * 3 + c];
                out.at(y, x, c) = clamp_u8(acc);
            }
        }
    }
    return out;
}

std::array<double, 3> channel_means(const std::vector<Image>& frames) {
    std::array<double, 3> acc{0.0, 0.0, 0.0};
    size_t n = 0;
    for (const Image& f : frames) {
        for (int y = 0; y < f.h; ++y)
            for (int x = 0; x < f.w; ++x)
                for (int c = 0; c < 3; ++c)
                    acc[static_cast<size_t>(c)] += f.at(y, x, c);
        n += static_cast<size_t>(f.h) * f.w;
    }
    if (n == 0)
        return {0.0, 0.0, 0.0};
    for (double& a : acc) a /= static_cast<double>(n);
    return acc;
}

} // namespace uci
