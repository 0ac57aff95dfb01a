#include "uci/clips.hpp"

#include "uci/common.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace uci {

namespace fs = std::filesystem;
using nlohmann::json;

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw ConfigError("unknown split value '" + s + "'");
}

void SyntheticConfig::validate() const {
    if (num_domains < 2)
        throw ConfigError("synthetic config: num_domains must be >= 2");
    if (videos_per_domain_per_label < 1)
        throw ConfigError("synthetic config: videos_per_domain_per_label must be >= 1");
    if (frames_per_video < 2)
        throw ConfigError("synthetic config: frames_per_video must be >= 2");
    if (frame_size < 64)
        throw ConfigError("synthetic config: frame_size must be >= 64");
    if (!(motion_smoothness > 0.0 && motion_smoothness <= 1.0))
        throw ConfigError("synthetic config: motion_smoothness must be in (0, 1]");
    if (fake_jitter_px < 1)
        throw ConfigError("synthetic config: fake_jitter_px must be >= 1");
    if (train_frac < 0.0 || val_frac < 0.0 || train_frac + val_frac > 1.0)
        throw ConfigError("synthetic config: bad split fractions");
}

std::string frame_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%05d.ppm", index);
    return buf;
}

std::string domain_tag(int index) {
    if (index >= 0 && index < 26)
        return std::string(1, static_cast<char>('A' + index));
    return "dom" + std::to_string(index);
}

// ---- manifest -------------------------------------------------------------

std::vector<ClipRecord> load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("manifest: cannot open " + path.string());
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::vector<ClipRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t'))
            fields.push_back(field);
        auto fail = [&](const std::string& why) {
            throw ConfigError("manifest: line " + std::to_string(line_no) + ": " + why);
        };
        if (fields.size() != 6)
            fail("expected 6 tab-separated fields, got " + std::to_string(fields.size()));
        ClipRecord r;
        r.video_id = fields[0];
        fs::path dir = fields[1];
        r.frame_dir = dir.is_absolute() ? dir : base / dir;
        if (fields[2] == "0") r.label = 0;
        else if (fields[2] == "1") r.label = 1;
        else fail("label must be 0 or 1, got '" + fields[2] + "'");
        r.domain = fields[3];
        try {
            r.split = split_from_string(fields[4]);
        } catch (const ConfigError&) {
            fail("unknown split '" + fields[4] + "'");
        }
        try {
            r.frame_count = std::stoi(fields[5]);
        } catch (const std::exception&) {
            fail("frame_count is not an integer: '" + fields[5] + "'");
        }
        if (r.frame_count < 1)
            fail("frame_count must be positive");
        records.push_back(std::move(r));
    }
    return records;
}

void save_manifest(const std::vector<ClipRecord>& records, const fs::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("manifest: cannot write " + path.string());
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    for (const ClipRecord& r : records) {
        fs::path dir = r.frame_dir;
        // keep corpora relocatable: store frame_dir relative to the manifest
        std::error_code ec;
        fs::path rel = fs::relative(dir, base, ec);
        if (!ec && !rel.empty())
            dir = rel;
        out << r.video_id << '\t' << dir.generic_string() << '\t' << r.label << '\t'
            << r.domain << '\t' << split_name(r.split) << '\t' << r.frame_count << '\n';
    }
    if (!out)
        throw IoError("manifest: short write to " + path.string());
}

// ---- clip windows ---------------------------------------------------------

VideoClip load_clip(const ClipRecord& record, int clip_len, int start, int stride) {
    if (clip_len < 2)
        throw ConfigError("load_clip: clip_len must be >= 2");
    if (stride < 1)
        throw ConfigError("load_clip: stride must be >= 1");
    const int last = start + (clip_len - 1) * stride;
    if (start < 0 || last >= record.frame_count)
        throw ConfigError("load_clip: window [" + std::to_string(start) + ", " + std::to_string(last) +
                          "] out of range for " + record.video_id + " with " +
                          std::to_string(record.frame_count) + " frames");
    VideoClip clip;
    clip.source_id = record.video_id;
    clip.frames.reserve(static_cast<size_t>(clip_len));
    for (int i = 0; i < clip_len; ++i) {
        Frame f = read_ppm(record.frame_dir / frame_file_name(start + i * stride));
        if (!clip.frames.empty() && !f.same_size(clip.frames.front()))
            throw IoError("load_clip: frame size mismatch in " + record.video_id);
        clip.frames.push_back(std::move(f));
    }
    return clip;
}

std::vector<int> clip_window_starts(int frame_count, int clip_len) {
    if (clip_len < 2)
        throw ConfigError("clip windows: clip_len must be >= 2");
    if (frame_count < clip_len)
        throw ConfigError("clip windows: video has " + std::to_string(frame_count) +
                          " frames, need at least " + std::to_string(clip_len));
    std::vector<int> starts;
    for (int s = 0; s + clip_len <= frame_count; s += clip_len)
        starts.push_back(s);
    return starts;
}

std::vector<VideoClip> sample_clip_windows(const ClipRecord& record, int clip_len) {
    std::vector<VideoClip> clips;
    for (int s : clip_window_starts(record.frame_count, clip_len))
        clips.push_back(load_clip(record, clip_len, s));
    return clips;
}

// ---- synthetic corpus -----------------------------------------------------

namespace {

struct DomainStyle {
    std::array<double, 3> bg_color;    // 0..255
    std::array<double, 3> patch_color; // 0..255
    double grating_freq = 0.0;         // cycles per pixel
    double grating_theta = 0.0;
};

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
    h = h - std::floor(h);
    double r = 0, g = 0, b = 0;
    const double i = std::floor(h * 6.0);
    const double f = h * 6.0 - i;
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - f * s);
    const double t = v * (1.0 - (1.0 - f) * s);
    switch (static_cast<int>(i) % 6) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        case 5: r = v; g = p; b = q; break;
    }
    return {255.0 * r, 255.0 * g, 255.0 * b};
}

double fract(double v) { return v - std::floor(v); }

// Domains differ in spatial style only. The palettes sit far apart on the
// hue circle (red / chartreuse / azure for the first three), so each
// domain's patch occupies different color channels while the temporal
// construction stays identical everywhere.
DomainStyle domain_style(int index) {
    DomainStyle st;
    static const double hue_table[] = {0.0, 0.25, 0.63};
    const double hue =
        index < 3 ? hue_table[index] : fract(0.083 + 0.618033988749895 * index);
    // bright saturated patch over a dark desaturated background: the luma
    // contrast survives greyscaling while the chroma axis stays domain-bound;
    // patch brightness also varies by domain so absolute-intensity shortcuts
    // do not carry over
    static const double value_table[] = {1.0, 0.95, 0.78};
    const double patch_v = value_table[index % 3];
    st.patch_color = hsv_to_rgb(hue, 0.70, patch_v);
    st.bg_color = hsv_to_rgb(fract(hue + 0.5), 0.25, 0.25);
    st.grating_freq = 0.12 + 0.10 * fract(0.371 * (index + 1));
    st.grating_theta = 0.85 * index;
    return st;
}

constexpr double kPi = 3.141592653589793238462643;
constexpr double kBgNoiseSigma = 6.0;
// relative amplitude of the patch re-noise; multiplicative, so the cue lives
// in the channels the domain's palette actually uses
constexpr double kPatchNoiseRel = 0.18;
// global per-frame illumination flicker shared by both labels; raw temporal
// energy alone then no longer separates real from fake
constexpr double kFlickerRel = 0.05;

std::vector<double> draw_noise_field(Rng& rng, int n, double sigma) {
    std::vector<double> field(static_cast<size_t>(n));
    for (double& v : field)
        v = sigma * rng.normal();
    return field;
}

} // namespace

SyntheticVideo render_synthetic_video(const SyntheticConfig& config, int domain_index,
                                      int label, int video_index) {
    config.validate();
    const DomainStyle style = domain_style(domain_index);
    const int size = config.frame_size;
    const int patch = size / 3;
    const int jitter = config.fake_jitter_px;
    const int margin = jitter + 1;
    const double lo = margin;
    const double hi = size - patch - margin;
    if (hi <= lo)
        throw ConfigError("synthetic config: frame too small for patch plus jitter margin");

    Rng rng(seed_chain({config.seed, stable_hash(domain_tag(domain_index)),
                        static_cast<uint64_t>(label), static_cast<uint64_t>(video_index)}));

    const double phase = rng.uniform(0.0, 2.0 * kPi);
    const std::vector<double> bg_noise = draw_noise_field(rng, size * size * 3, kBgNoiseSigma);
    // Real videos draw the patch noise once and repeat it every frame; fake
    // videos redraw it per frame. Per-frame marginals match; only the
    // frame-to-frame consistency differs.
    std::vector<double> patch_noise;
    if (label == 0)
        patch_noise = draw_noise_field(rng, patch * patch * 3, 1.0);

    Image background(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int c = 0; c < 3; ++c)
                background.at(y, x, c) =
                    clamp_u8(style.bg_color[static_cast<size_t>(c)] +
                             bg_noise[(static_cast<size_t>(y) * size + x) * 3 + c]);

    auto pattern = [&](int xx, int yy) {
        const double u = xx * std::cos(style.grating_theta) + yy * std::sin(style.grating_theta);
        return 0.70 + 0.30 * std::sin(2.0 * kPi * style.grating_freq * u + phase);
    };

    const double speed = size / 40.0;
    double theta = rng.uniform(0.0, 2.0 * kPi);
    double px = rng.uniform(lo, hi);
    double py = rng.uniform(lo, hi);
    const double wobble = (1.0 - config.motion_smoothness) * 1.2;

    SyntheticVideo video;
    video.truth.patch_size = patch;
    for (int f = 0; f < config.frames_per_video; ++f) {
        if (f > 0) {
            theta += wobble * rng.normal();
            double nx = px + speed * std::cos(theta);
            double ny = py + speed * std::sin(theta);
            if (nx < lo || nx > hi) {
                theta = kPi - theta;
                nx = std::clamp(nx < lo ? 2.0 * lo - nx : 2.0 * hi - nx, lo, hi);
            }
            if (ny < lo || ny > hi) {
                theta = -theta;
                ny = std::clamp(ny < lo ? 2.0 * lo - ny : 2.0 * hi - ny, lo, hi);
            }
            px = nx;
            py = ny;
        }

        double flick = rng.normal();
        flick = std::clamp(flick, -2.5, 2.5);
        const double gain = 1.0 + kFlickerRel * flick;

        double rx = px, ry = py;
        if (label == 1) {
            rx += rng.uniform(-static_cast<double>(jitter), static_cast<double>(jitter));
            ry += rng.uniform(-static_cast<double>(jitter), static_cast<double>(jitter));
            patch_noise = draw_noise_field(rng, patch * patch * 3, 1.0);
        }
        const int ix = static_cast<int>(std::lround(rx));
        const int iy = static_cast<int>(std::lround(ry));

        Image frame(size, size);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                for (int c = 0; c < 3; ++c)
                    frame.at(y, x, c) = clamp_u8(gain * background.at(y, x, c));
        for (int yy = 0; yy < patch; ++yy) {
            for (int xx = 0; xx < patch; ++xx) {
                const double pv = pattern(xx, yy);
                for (int c = 0; c < 3; ++c) {
                    const double base = style.patch_color[static_cast<size_t>(c)] * pv;
                    const double noise =
                        kPatchNoiseRel * base *
                        patch_noise[(static_cast<size_t>(yy) * patch + xx) * 3 + c];
                    frame.at(iy + yy, ix + xx, c) = clamp_u8(gain * (base + noise));
                }
            }
        }
        video.frames.push_back(std::move(frame));
        video.truth.smooth_xy.push_back({px, py});
        video.truth.rendered_xy.push_back({ix, iy});
    }
    return video;
}

ClipTruth load_clip_truth(const fs::path& video_dir) {
    std::ifstream in(video_dir / "truth.json");
    if (!in)
        throw IoError("truth: cannot open " + (video_dir / "truth.json").string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded())
        throw IoError("truth: malformed json in " + video_dir.string());
    ClipTruth t;
    t.patch_size = j.at("patch_size").get<int>();
    for (const auto& p : j.at("smooth"))
        t.smooth_xy.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    for (const auto& p : j.at("rendered"))
        t.rendered_xy.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
    return t;
}

std::filesystem::path generate_synthetic_dataset(const SyntheticConfig& config,
                                                 const fs::path& out_dir) {
    config.validate();
    std::error_code ec;
    fs::create_directories(out_dir / "videos", ec);
    if (ec)
        throw IoError("synthetic: cannot create " + (out_dir / "videos").string() + ": " + ec.message());

    const int v_total = config.videos_per_domain_per_label;
    const int n_train = static_cast<int>(std::floor(config.train_frac * v_total + 1e-9));
    const int n_val = static_cast<int>(std::floor(config.val_frac * v_total + 1e-9));

    std::vector<ClipRecord> records;
    for (int d = 0; d < config.num_domains; ++d) {
        const std::string tag = domain_tag(d);
        for (int label = 0; label <= 1; ++label) {
            for (int v = 0; v < v_total; ++v) {
                char idbuf[64];
                std::snprintf(idbuf, sizeof(idbuf), "%s_%s_%03d", tag.c_str(),
                              label == 0 ? "real" : "fake", v);
                const std::string video_id = idbuf;
                const fs::path video_dir = out_dir / "videos" / video_id;
                fs::create_directories(video_dir, ec);
                if (ec)
                    throw IoError("synthetic: cannot create " + video_dir.string());

                SyntheticVideo video = render_synthetic_video(config, d, label, v);
                for (int f = 0; f < static_cast<int>(video.frames.size()); ++f)
                    write_ppm(video_dir / frame_file_name(f), video.frames[static_cast<size_t>(f)]);

                json truth;
                truth["patch_size"] = video.truth.patch_size;
                json smooth = json::array();
                for (const auto& p : video.truth.smooth_xy)
                    smooth.push_back({p[0], p[1]});
                truth["smooth"] = smooth;
                json rendered = json::array();
                for (const auto& p : video.truth.rendered_xy)
                    rendered.push_back({p[0], p[1]});
                truth["rendered"] = rendered;
                std::ofstream tout(video_dir / "truth.json");
                if (!tout)
                    throw IoError("synthetic: cannot write truth.json in " + video_dir.string());
                tout << truth.dump() << '\n';

                ClipRecord r;
                r.video_id = video_id;
                r.frame_dir = video_dir;
                r.label = label;
                r.domain = tag;
                r.split = v < n_train ? Split::train : (v < n_train + n_val ? Split::val : Split::test);
                r.frame_count = config.frames_per_video;
                records.push_back(std::move(r));
            }
        }
    }

    const fs::path manifest_path = out_dir / "manifest.tsv";
    save_manifest(records, manifest_path);
    return manifest_path;
}

} // namespace uci
