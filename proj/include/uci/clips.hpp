#pragma once

#include "uci/image.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace uci {

using Frame = Image;

/// Ordered stack of equally sized RGB frames; the unit the encoder consumes.
struct VideoClip {
    std::vector<Frame> frames;
    std::string source_id;

    int length() const { return static_cast<int>(frames.size()); }
};

enum class Split { train, val, test };

const char* split_name(Split s);
Split split_from_string(const std::string& s); // throws ConfigError

/// One manifest row: a video bound to its label, domain tag and split.
/// Label convention: fake is the positive class (1), real is 0.
struct ClipRecord {
    std::string video_id;
    std::filesystem::path frame_dir;
    int label = 0; // 0 = real, 1 = fake
    std::string domain;
    Split split = Split::train;
    int frame_count = 0;
};

struct SyntheticConfig {
    int num_domains = 3;
    int videos_per_domain_per_label = 10;
    int frames_per_video = 40;
    int frame_size = 64;
    double motion_smoothness = 0.8; // AR(1) velocity coefficient, in (0, 1]
    int fake_jitter_px = 3;
    uint64_t seed = 1;
    // split fractions by video index, train then val, remainder test
    double train_frac = 0.6;
    double val_frac = 0.1;

    void validate() const; // throws ConfigError
};

// ---- manifest -------------------------------------------------------------
// One record per line, tab separated, field order:
//   video_id  frame_dir  label  domain  split  frame_count
// Lines starting with '#' are ignored.

std::vector<ClipRecord> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::vector<ClipRecord>& records, const std::filesystem::path& path);

/// Frame file name inside a record's frame_dir ("frame_00000.ppm" style).
std::string frame_file_name(int index);

/// Read frames [start, start + clip_len * stride) with the given stride.
/// Throws ConfigError when the window falls outside the video and IoError on
/// missing or missized frame files.
VideoClip load_clip(const ClipRecord& record, int clip_len, int start, int stride = 1);

/// Start offsets of consecutive non-overlapping clip_len windows; the final
/// partial window is dropped. Throws when frame_count < clip_len.
std::vector<int> clip_window_starts(int frame_count, int clip_len);

/// Loads every window from clip_window_starts.
std::vector<VideoClip> sample_clip_windows(const ClipRecord& record, int clip_len);

// ---- synthetic corpus -----------------------------------------------------

/// Per-frame ground truth the generator records next to the frames
/// (truth.json). Used by the statistical oracles; the trained model never
/// sees it.
struct ClipTruth {
    int patch_size = 0;
    std::vector<std::array<double, 2>> smooth_xy;  // trajectory before jitter
    std::vector<std::array<int, 2>> rendered_xy;   // integer paste position
};

ClipTruth load_clip_truth(const std::filesystem::path& video_dir);

/// Writes frames plus a manifest under out_dir and returns the manifest
/// path. Real videos move a textured patch along a smoothed trajectory over
/// a domain-colored background; fake videos share all per-frame statistics
/// but jitter the patch position and re-noise its texture independently per
/// frame. Byte-identical output for identical (config, seed).
std::filesystem::path generate_synthetic_dataset(const SyntheticConfig& config,
                                                 const std::filesystem::path& out_dir);

/// Domain tag for domain index i: "A", "B", ... then "dom26", "dom27", ...
std::string domain_tag(int index);

/// Renders one synthetic video's frames in memory (same construction the
/// generator writes to disk). Exposed so tests can build known-trajectory
/// clips without touching the filesystem.
struct SyntheticVideo {
    std::vector<Frame> frames;
    ClipTruth truth;
};
SyntheticVideo render_synthetic_video(const SyntheticConfig& config, int domain_index,
                                      int label, int video_index);

} // namespace uci
