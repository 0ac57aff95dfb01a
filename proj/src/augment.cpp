#include "uci/augment.hpp"

#include <cmath>

namespace uci {

AugmentMode augment_mode_from_string(const std::string& s) {
    if (s == "temporal_preserved") return AugmentMode::temporal_preserved;
    if (s == "per_frame") return AugmentMode::per_frame;
    if (s == "none") return AugmentMode::none;
    throw ConfigError("unknown augment mode '" + s + "'");
}

const char* augment_mode_name(AugmentMode m) {
    switch (m) {
        case AugmentMode::temporal_preserved: return "temporal_preserved";
        case AugmentMode::per_frame: return "per_frame";
        case AugmentMode::none: return "none";
    }
    return "?";
}

void AugmentConfig::validate() const {
    auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob_ok(p_crop) || !prob_ok(p_blur) || !prob_ok(p_flip) || !prob_ok(p_vflip) ||
        !prob_ok(p_colorjitter) || !prob_ok(p_greyscale) || !prob_ok(p_cutout))
        throw ConfigError("augment config: probabilities must lie in [0, 1]");
    if (!(size_ratio_min > 0.0 && size_ratio_min <= size_ratio_max && size_ratio_max <= 1.0))
        throw ConfigError("augment config: bad size_ratio range");
    if (!(aspect_min > 0.0 && aspect_min <= aspect_max))
        throw ConfigError("augment config: bad aspect range");
    if (!(cutout_side_min > 0 && cutout_side_min <= cutout_side_max))
        throw ConfigError("augment config: bad cutout side range");
    if (output_size <= cutout_side_max)
        throw ConfigError("augment config: output_size must exceed the largest cutout side");
    if (!(blur_sigma_min > 0.0 && blur_sigma_min <= blur_sigma_max))
        throw ConfigError("augment config: bad blur sigma range");
    if (!(jitter_factor_min > 0.0 && jitter_factor_min <= jitter_factor_max))
        throw ConfigError("augment config: bad jitter factor range");
    if (hue_shift_max < 0.0 || hue_shift_max > 0.5)
        throw ConfigError("augment config: hue_shift_max must lie in [0, 0.5]");
}

ClipLevelParams draw_clip_params(Rng& rng, const AugmentConfig& config, int src_h, int src_w) {
    ClipLevelParams p;
    p.crop_on = rng.bernoulli(config.p_crop);
    if (p.crop_on) {
        // Sample (S, A) until the integer rectangle fits and still satisfies
        // both ranges after rounding; a centered square is the fallback.
        const double area = static_cast<double>(src_h) * src_w;
        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
            const double s = rng.uniform(config.size_ratio_min, config.size_ratio_max);
            const double a = rng.uniform(config.aspect_min, config.aspect_max);
            const int cw = static_cast<int>(std::lround(std::sqrt(area * s * a)));
            const int ch = static_cast<int>(std::lround(std::sqrt(area * s / a)));
            if (cw < 1 || ch < 1 || cw > src_w || ch > src_h)
                continue;
            const double ratio = static_cast<double>(cw) / ch;
            const double area_ratio = static_cast<double>(cw) * ch / area;
            if (ratio < config.aspect_min || ratio > config.aspect_max)
                continue;
            if (area_ratio < config.size_ratio_min || area_ratio > config.size_ratio_max)
                continue;
            p.crop_w = cw;
            p.crop_h = ch;
            p.crop_x = rng.uniform_int(0, src_w - cw);
            p.crop_y = rng.uniform_int(0, src_h - ch);
            placed = true;
        }
        if (!placed) {
            const double mid = 0.5 * (config.size_ratio_min + config.size_ratio_max);
            int side = static_cast<int>(std::floor(std::sqrt(area * mid)));
            side = std::min({side, src_w, src_h});
            if (side < 1)
                throw ConfigError("augment: frame too small to crop");
            p.crop_w = p.crop_h = side;
            p.crop_x = (src_w - side) / 2;
            p.crop_y = (src_h - side) / 2;
        }
    }
    p.blur_on = rng.bernoulli(config.p_blur);
    if (p.blur_on)
        p.blur_sigma = rng.uniform(config.blur_sigma_min, config.blur_sigma_max);
    p.flip_on = rng.bernoulli(config.p_flip);
    p.vflip_on = rng.bernoulli(config.p_vflip);
    return p;
}

FrameLevelParams draw_frame_params(Rng& rng, const AugmentConfig& config) {
    FrameLevelParams p;
    p.jitter_on = rng.bernoulli(config.p_colorjitter);
    if (p.jitter_on) {
        p.brightness = rng.uniform(config.jitter_factor_min, config.jitter_factor_max);
        p.contrast = rng.uniform(config.jitter_factor_min, config.jitter_factor_max);
        p.saturation = rng.uniform(config.jitter_factor_min, config.jitter_factor_max);
        p.hue = rng.uniform(-config.hue_shift_max, config.hue_shift_max);
    }
    p.greyscale_on = rng.bernoulli(config.p_greyscale);
    p.cutout_on = rng.bernoulli(config.p_cutout);
    if (p.cutout_on) {
        p.cutout_side = rng.uniform_int(config.cutout_side_min, config.cutout_side_max);
        p.cutout_x = rng.uniform_int(0, config.output_size - p.cutout_side);
        p.cutout_y = rng.uniform_int(0, config.output_size - p.cutout_side);
    }
    return p;
}

Frame apply_clip_level(const Frame& frame, const ClipLevelParams& p) {
    Frame out = frame;
    if (p.crop_on)
        out = crop(out, p.crop_x, p.crop_y, p.crop_w, p.crop_h);
    if (p.blur_on)
        out = gaussian_blur(out, p.blur_sigma);
    if (p.flip_on)
        out = flip_horizontal(out);
    if (p.vflip_on)
        out = flip_vertical(out);
    return out;
}

namespace {

// Color jitter runs in double precision and rounds once at the end.
// Brightness and contrast are affine in luma; saturation lerps toward the
// Rec.601 grey and hue rotates the chroma plane of YIQ, so the luma channel
// is left intact. The motion-cue checks depend on that.
void color_jitter_px(double& r, double& g, double& b, const FrameLevelParams& p, double frame_mean_luma) {
    r *= p.brightness;
    g *= p.brightness;
    b *= p.brightness;
    const double m = frame_mean_luma * p.brightness;
    r = m + p.contrast * (r - m);
    g = m + p.contrast * (g - m);
    b = m + p.contrast * (b - m);
    const double grey = luma(r, g, b);
    r = grey + p.saturation * (r - grey);
    g = grey + p.saturation * (g - grey);
    b = grey + p.saturation * (b - grey);
    if (p.hue != 0.0) {
        const double y = 0.299 * r + 0.587 * g + 0.114 * b;
        const double iq_i = 0.595716 * r - 0.274453 * g - 0.321263 * b;
        const double iq_q = 0.211456 * r - 0.522591 * g + 0.311135 * b;
        const double angle = p.hue * 2.0 * 3.141592653589793238462643;
        const double ci = iq_i * std::cos(angle) - iq_q * std::sin(angle);
        const double cq = iq_i * std::sin(angle) + iq_q * std::cos(angle);
        r = y + 0.9563 * ci + 0.6210 * cq;
        g = y - 0.2721 * ci - 0.6474 * cq;
        b = y - 1.1070 * ci + 1.7046 * cq;
    }
}

} // namespace

Frame apply_frame_level(const Frame& frame, const FrameLevelParams& p,
                        const std::array<double, 3>& cutout_fill) {
    Frame out = frame;
    if (p.jitter_on) {
        double mean_luma = 0.0;
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x)
                mean_luma += luma(out.at(y, x, 0), out.at(y, x, 1), out.at(y, x, 2));
        mean_luma /= static_cast<double>(out.h) * out.w;
        for (int y = 0; y < out.h; ++y) {
            for (int x = 0; x < out.w; ++x) {
                double r = out.at(y, x, 0), g = out.at(y, x, 1), b = out.at(y, x, 2);
                color_jitter_px(r, g, b, p, mean_luma);
                out.at(y, x, 0) = clamp_u8(r);
                out.at(y, x, 1) = clamp_u8(g);
                out.at(y, x, 2) = clamp_u8(b);
            }
        }
    }
    if (p.greyscale_on) {
        for (int y = 0; y < out.h; ++y) {
            for (int x = 0; x < out.w; ++x) {
                const uint8_t grey = clamp_u8(luma(out.at(y, x, 0), out.at(y, x, 1), out.at(y, x, 2)));
                out.at(y, x, 0) = grey;
                out.at(y, x, 1) = grey;
                out.at(y, x, 2) = grey;
            }
        }
    }
    if (p.cutout_on) {
        for (int y = p.cutout_y; y < p.cutout_y + p.cutout_side; ++y)
            for (int x = p.cutout_x; x < p.cutout_x + p.cutout_side; ++x)
                for (int c = 0; c < 3; ++c)
                    out.at(y, x, c) = clamp_u8(cutout_fill[static_cast<size_t>(c)]);
    }
    return out;
}

VideoClip apply(const VideoClip& clip, Rng& rng, const AugmentConfig& config, AugmentTrace* trace) {
    config.validate();
    if (clip.frames.size() < 2)
        throw ConfigError("augment: clip needs at least 2 frames");
    const int src_h = clip.frames.front().h;
    const int src_w = clip.frames.front().w;
    for (const Frame& f : clip.frames)
        if (f.h != src_h || f.w != src_w)
            throw ConfigError("augment: frames of one clip must share a size");

    const std::array<double, 3> fill = channel_means(clip.frames);

    VideoClip out;
    out.source_id = clip.source_id;
    out.frames.reserve(clip.frames.size());
    if (trace) {
        *trace = AugmentTrace{};
        trace->cutout_fill = fill;
    }

    if (config.mode == AugmentMode::none) {
        for (const Frame& f : clip.frames)
            out.frames.push_back(resize_bilinear(f, config.output_size, config.output_size));
        if (trace)
            trace->frames.assign(clip.frames.size(), FrameLevelParams{});
        return out;
    }

    if (config.mode == AugmentMode::per_frame) {
        // ablation arm: the clip-level group is redrawn per frame as well
        for (const Frame& f : clip.frames) {
            const ClipLevelParams cp = draw_clip_params(rng, config, src_h, src_w);
            Frame g = apply_clip_level(f, cp);
            g = resize_bilinear(g, config.output_size, config.output_size);
            const FrameLevelParams fp = draw_frame_params(rng, config);
            out.frames.push_back(apply_frame_level(g, fp, fill));
            if (trace) {
                trace->frames.push_back(fp);
                if (trace->frames.size() == 1)
                    trace->clip = cp;
            }
        }
        return out;
    }

    const ClipLevelParams cp = draw_clip_params(rng, config, src_h, src_w);
    if (trace)
        trace->clip = cp;
    FrameLevelParams once;
    if (config.frame_flags_once)
        once = draw_frame_params(rng, config);
    for (const Frame& f : clip.frames) {
        Frame g = apply_clip_level(f, cp);
        g = resize_bilinear(g, config.output_size, config.output_size);
        const FrameLevelParams fp = config.frame_flags_once ? once : draw_frame_params(rng, config);
        out.frames.push_back(apply_frame_level(g, fp, fill));
        if (trace)
            trace->frames.push_back(fp);
    }
    return out;
}

} // namespace uci
