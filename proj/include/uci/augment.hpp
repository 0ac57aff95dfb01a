#pragma once

#include "uci/clips.hpp"
#include "uci/common.hpp"

#include <array>
#include <vector>

namespace uci {

/// temporal_preserved — clip-level transforms drawn once and applied to all
/// frames, frame-level transforms drawn per frame (the method under study).
/// per_frame — every transform redrawn independently per frame, breaking
/// inter-frame consistency (the "w/o temporal-persistence" ablation arm).
/// none — per-frame resize only.
enum class AugmentMode { temporal_preserved, per_frame, none };

AugmentMode augment_mode_from_string(const std::string& s);
const char* augment_mode_name(AugmentMode m);

struct AugmentConfig {
    double p_crop = 0.20;
    double p_blur = 0.10;
    double p_flip = 0.50;
    double p_vflip = 0.50;
    double p_colorjitter = 0.70;
    double p_greyscale = 0.70;
    double p_cutout = 0.70;

    double size_ratio_min = 0.8, size_ratio_max = 1.0; // crop area ratio S
    double aspect_min = 0.75, aspect_max = 1.3;        // crop aspect ratio A
    int cutout_side_min = 32, cutout_side_max = 64;    // on the output canvas
    int output_size = 224;

    double blur_sigma_min = 0.1, blur_sigma_max = 2.0;
    double jitter_factor_min = 0.6, jitter_factor_max = 1.4; // brightness/contrast/saturation
    double hue_shift_max = 0.1; // fraction of the hue circle

    AugmentMode mode = AugmentMode::temporal_preserved;
    // Algorithm 1's header draws the frame-level flags once; the prose gives
    // each frame an independent probability. Default follows the prose.
    bool frame_flags_once = false;

    void validate() const; // throws ConfigError
};

struct ClipLevelParams {
    bool crop_on = false;
    int crop_x = 0, crop_y = 0, crop_w = 0, crop_h = 0; // source pixels
    bool blur_on = false;
    double blur_sigma = 0.0;
    bool flip_on = false;
    bool vflip_on = false;
};

struct FrameLevelParams {
    bool jitter_on = false;
    double brightness = 1.0, contrast = 1.0, saturation = 1.0;
    double hue = 0.0;
    bool greyscale_on = false;
    bool cutout_on = false;
    int cutout_x = 0, cutout_y = 0, cutout_side = 0; // output canvas pixels
};

ClipLevelParams draw_clip_params(Rng& rng, const AugmentConfig& config, int src_h, int src_w);
FrameLevelParams draw_frame_params(Rng& rng, const AugmentConfig& config);

/// Applies crop/blur/flip/vflip at source resolution.
Frame apply_clip_level(const Frame& frame, const ClipLevelParams& p);

/// Applies color jitter, greyscale and cutout on the output canvas.
Frame apply_frame_level(const Frame& frame, const FrameLevelParams& p,
                        const std::array<double, 3>& cutout_fill);

/// The transforms actually applied, recorded for preview and for the
/// coherence checks.
struct AugmentTrace {
    ClipLevelParams clip;
    std::vector<FrameLevelParams> frames;
    std::array<double, 3> cutout_fill{};
};

/// Full Algorithm-1 pipeline: clip-level group at source resolution, then
/// per frame resize to output_size and the frame-level group. Output frames
/// are output_size x output_size; count and order unchanged.
VideoClip apply(const VideoClip& clip, Rng& rng, const AugmentConfig& config,
                AugmentTrace* trace = nullptr);

} // namespace uci
