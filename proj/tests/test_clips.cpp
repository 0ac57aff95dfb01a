#include "uci/clips.hpp"

#include "testutil.hpp"
#include "uci/common.hpp"

#include "doctest.h"

#include <fstream>
#include <map>

using namespace uci;
using test::TempDir;
namespace fs = std::filesystem;

TEST_CASE("manifest preserves record count and order") {
    TempDir tmp("manifest");
    const auto path = tmp.path() / "manifest.tsv";
    std::ofstream out(path);
    out << "vid_a\tframes/a\t0\tA\ttrain\t40\n";
    out << "vid_b\tframes/b\t1\tB\tval\t96\n";
    out << "vid_c\tframes/c\t1\tA\ttest\t200\n";
    out.close();

    const auto records = load_manifest(path);
    REQUIRE(records.size() == 3);
    CHECK(records[0].video_id == "vid_a");
    CHECK(records[1].video_id == "vid_b");
    CHECK(records[2].video_id == "vid_c");
    CHECK(records[0].label == 0);
    CHECK(records[1].label == 1);
    CHECK(records[1].split == Split::val);
    CHECK(records[2].frame_count == 200);
    CHECK(records[0].frame_dir == tmp.path() / "frames/a");
}

TEST_CASE("manifest validation names the offending line") {
    TempDir tmp("manifest_bad");
    const auto path = tmp.path() / "manifest.tsv";

    SUBCASE("bad label") {
        std::ofstream(path) << "vid_a\ta\t0\tA\ttrain\t40\nvid_b\tb\t2\tA\ttrain\t40\n";
        CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("line 2"), ConfigError);
    }
    SUBCASE("unknown split") {
        std::ofstream(path) << "vid_a\ta\t0\tA\tdev\t40\n";
        CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("line 1"), ConfigError);
    }
    SUBCASE("wrong field count") {
        std::ofstream(path) << "vid_a\ta\t0\tA\ttrain\n";
        CHECK_THROWS_AS(load_manifest(path), ConfigError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_manifest(tmp.path() / "nope.tsv"), IoError);
    }
}

TEST_CASE("empty manifest yields an empty list") {
    TempDir tmp("manifest_empty");
    const auto path = tmp.path() / "manifest.tsv";
    std::ofstream(path) << "";
    CHECK(load_manifest(path).empty());
}

TEST_CASE("manifest round trip") {
    TempDir tmp("manifest_rt");
    std::vector<ClipRecord> records;
    records.push_back(test::write_video(tmp.path() / "videos" / "v0", "v0", 8, 0, "A", Split::train));
    records.push_back(test::write_video(tmp.path() / "videos" / "v1", "v1", 8, 1, "B", Split::test));
    const auto path = tmp.path() / "manifest.tsv";
    save_manifest(records, path);
    const auto loaded = load_manifest(path);
    REQUIRE(loaded.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        CHECK(loaded[i].video_id == records[i].video_id);
        CHECK(loaded[i].label == records[i].label);
        CHECK(loaded[i].domain == records[i].domain);
        CHECK(loaded[i].split == records[i].split);
        CHECK(loaded[i].frame_count == records[i].frame_count);
        CHECK(fs::equivalent(loaded[i].frame_dir, records[i].frame_dir));
    }
}

TEST_CASE("load_clip returns the requested window in order") {
    TempDir tmp("load_clip");
    const ClipRecord rec = test::write_video(tmp.path() / "v", "v", 200);

    SUBCASE("96 frames from the start") {
        const VideoClip clip = load_clip(rec, 96, 0);
        REQUIRE(clip.length() == 96);
        for (int i = 0; i < 96; ++i)
            CHECK(clip.frames[static_cast<size_t>(i)].at(0, 0, 2) == (i & 0xff));
    }
    SUBCASE("whole video window") {
        const VideoClip clip = load_clip(rec, 200, 0);
        CHECK(clip.length() == 200);
        CHECK(clip.frames.back().at(0, 0, 2) == (199 & 0xff));
    }
    SUBCASE("window past the end") {
        CHECK_THROWS_AS(load_clip(rec, 96, 150), ConfigError);
    }
    SUBCASE("strided window") {
        const VideoClip clip = load_clip(rec, 4, 10, 3);
        REQUIRE(clip.length() == 4);
        CHECK(clip.frames[3].at(0, 0, 2) == ((10 + 3 * 3) & 0xff));
    }
}

TEST_CASE("clip windows are consecutive, non-overlapping, partial dropped") {
    CHECK(clip_window_starts(200, 96) == std::vector<int>{0, 96});
    CHECK(clip_window_starts(96, 96) == std::vector<int>{0});
    CHECK_THROWS_AS(clip_window_starts(95, 96), ConfigError);

    TempDir tmp("windows");
    const ClipRecord rec = test::write_video(tmp.path() / "v", "v", 200);
    const auto clips = sample_clip_windows(rec, 96);
    REQUIRE(clips.size() == 2);
    CHECK(clips[0].frames.front().at(0, 0, 2) == 0);
    CHECK(clips[1].frames.front().at(0, 0, 2) == 96);
}

TEST_CASE("synthetic generator writes the expected counts") {
    TempDir tmp("synth_counts");
    SyntheticConfig cfg;
    cfg.num_domains = 3;
    cfg.videos_per_domain_per_label = 10;
    cfg.frames_per_video = 8;
    cfg.seed = 5;
    const auto manifest = generate_synthetic_dataset(cfg, tmp.path());
    const auto records = load_manifest(manifest);
    REQUIRE(records.size() == 60);
    int real = 0, fake = 0;
    std::map<std::string, int> per_domain;
    for (const auto& r : records) {
        (r.label == 0 ? real : fake)++;
        per_domain[r.domain]++;
    }
    CHECK(real == 30);
    CHECK(fake == 30);
    REQUIRE(per_domain.size() == 3);
    for (const auto& [dom, n] : per_domain)
        CHECK(n == 20);
}

TEST_CASE("synthetic generator is byte-deterministic") {
    TempDir a("synth_det_a"), b("synth_det_b");
    SyntheticConfig cfg;
    cfg.num_domains = 2;
    cfg.videos_per_domain_per_label = 2;
    cfg.frames_per_video = 6;
    cfg.seed = 99;
    generate_synthetic_dataset(cfg, a.path());
    generate_synthetic_dataset(cfg, b.path());

    CHECK(test::file_bytes(a.path() / "manifest.tsv") == test::file_bytes(b.path() / "manifest.tsv"));
    for (const char* vid : {"A_real_000", "B_fake_001"}) {
        for (int f = 0; f < 6; ++f)
            CHECK(test::file_bytes(a.path() / "videos" / vid / frame_file_name(f)) ==
                  test::file_bytes(b.path() / "videos" / vid / frame_file_name(f)));
        CHECK(test::file_bytes(a.path() / "videos" / vid / "truth.json") ==
              test::file_bytes(b.path() / "videos" / vid / "truth.json"));
    }
}

TEST_CASE("generated corpus round-trips through the loaders") {
    TempDir tmp("synth_rt");
    SyntheticConfig cfg;
    cfg.num_domains = 2;
    cfg.videos_per_domain_per_label = 2;
    cfg.frames_per_video = 10;
    cfg.seed = 17;
    const auto records = load_manifest(generate_synthetic_dataset(cfg, tmp.path()));
    REQUIRE(records.size() == 8);
    for (const auto& r : records) {
        CHECK(r.frame_count == 10);
        const VideoClip clip = load_clip(r, r.frame_count, 0);
        for (const Frame& f : clip.frames) {
            CHECK(f.h == cfg.frame_size);
            CHECK(f.w == cfg.frame_size);
        }
        const ClipTruth truth = load_clip_truth(r.frame_dir);
        CHECK(truth.rendered_xy.size() == 10);
    }
}

TEST_CASE("generator config validation") {
    SyntheticConfig cfg;
    cfg.num_domains = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.num_domains = 2;
    cfg.fake_jitter_px = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.fake_jitter_px = 3;
    cfg.motion_smoothness = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

// Monte-Carlo oracle for the fake/real construction: single-frame statistics
// must match between labels while the trajectory-displacement statistic
// separates them (jitter uniform in [-J, J] has mean |deviation| J/2).
TEST_CASE("fake and real differ temporally, not marginally") {
    SyntheticConfig cfg;
    cfg.num_domains = 2;
    cfg.videos_per_domain_per_label = 14;
    cfg.frames_per_video = 40; // 14 videos x 40 frames per label, > 1000 frames total
    cfg.fake_jitter_px = 3;
    cfg.seed = 31;

    double real_mean[3] = {0, 0, 0}, fake_mean[3] = {0, 0, 0};
    double real_dev = 0.0, fake_dev = 0.0;
    long real_px = 0, fake_px = 0, real_frames = 0, fake_frames = 0;
    for (int label = 0; label <= 1; ++label) {
        for (int v = 0; v < cfg.videos_per_domain_per_label; ++v) {
            const SyntheticVideo vid = render_synthetic_video(cfg, 0, label, v);
            for (size_t f = 0; f < vid.frames.size(); ++f) {
                const Frame& img = vid.frames[f];
                for (int y = 0; y < img.h; ++y)
                    for (int x = 0; x < img.w; ++x)
                        for (int c = 0; c < 3; ++c)
                            (label ? fake_mean : real_mean)[c] += img.at(y, x, c);
                (label ? fake_px : real_px) += img.h * img.w;
                const double dx = vid.truth.rendered_xy[f][0] - vid.truth.smooth_xy[f][0];
                const double dy = vid.truth.rendered_xy[f][1] - vid.truth.smooth_xy[f][1];
                (label ? fake_dev : real_dev) += 0.5 * (std::abs(dx) + std::abs(dy));
                (label ? fake_frames : real_frames)++;
            }
        }
    }
    REQUIRE(real_frames >= 500);
    REQUIRE(fake_frames >= 500);
    for (int c = 0; c < 3; ++c) {
        const double rm = real_mean[c] / static_cast<double>(real_px);
        const double fm = fake_mean[c] / static_cast<double>(fake_px);
        CHECK(std::abs(rm - fm) < 1.5); // Monte-Carlo parity on the 0..255 scale
    }
    real_dev /= static_cast<double>(real_frames);
    fake_dev /= static_cast<double>(fake_frames);
    CHECK(real_dev < 0.3); // rounding only
    // |uniform(-J, J)| has mean J/2 = 1.5; integer rendering widens the band
    CHECK(fake_dev == doctest::Approx(cfg.fake_jitter_px / 2.0).epsilon(0.15));
    CHECK(fake_dev - real_dev > 0.8);
}

// The sidecar must describe the pixels: re-locate the patch in fake frames
// by template matching and compare against the recorded positions.
TEST_CASE("truth sidecar matches pixel content") {
    SyntheticConfig cfg;
    cfg.num_domains = 2;
    cfg.videos_per_domain_per_label = 1;
    cfg.frames_per_video = 8;
    cfg.fake_jitter_px = 3;
    cfg.seed = 41;
    const SyntheticVideo vid = render_synthetic_video(cfg, 1, 1, 0);
    const int patch = vid.truth.patch_size;
    const std::vector<uint8_t> all_valid(64 * 64, 1);
    for (size_t f = 0; f + 1 < vid.frames.size(); ++f) {
        const int ex = vid.truth.rendered_xy[f + 1][0] - vid.truth.rendered_xy[f][0];
        const int ey = vid.truth.rendered_xy[f + 1][1] - vid.truth.rendered_xy[f][1];
        if (std::abs(ex) > 6 || std::abs(ey) > 6)
            continue;
        const auto [dx, dy] = test::estimate_patch_shift(
            vid.frames[f], vid.frames[f + 1], vid.truth.rendered_xy[f][0],
            vid.truth.rendered_xy[f][1], patch, 8, all_valid, all_valid);
        CHECK(dx == ex);
        CHECK(dy == ey);
    }
}
