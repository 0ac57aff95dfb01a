#include "uci/augment.hpp"
#include "uci/checkpoint.hpp"
#include "uci/config.hpp"
#include "uci/eval.hpp"
#include "uci/selfcheck.hpp"
#include "uci/trainer.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

namespace {

// exit codes: 0 ok, 2 config/usage, 3 io, 4 numeric failure
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

fs::path resolve(const fs::path& root, const fs::path& p) {
    if (p.empty() || p.is_absolute())
        return p;
    return root / p;
}

uci::AppConfig load_profile(const std::string& root, const std::string& config_path) {
    uci::AppConfig cfg;
    if (!config_path.empty())
        cfg = uci::load_app_config(resolve(root, config_path));
    if (const char* env_seed = std::getenv("UCI_SEED")) {
        const uint64_t s = std::strtoull(env_seed, nullptr, 10);
        cfg.train.seed = s;
        cfg.synth.seed = s;
    }
    return cfg;
}

int cmd_synth(const std::string& root, const std::string& config_path, std::string out_dir,
              int64_t seed_flag) {
    uci::AppConfig cfg = load_profile(root, config_path);
    if (seed_flag >= 0)
        cfg.synth.seed = static_cast<uint64_t>(seed_flag);
    cfg.synth.validate();
    const fs::path manifest = uci::generate_synthetic_dataset(cfg.synth, resolve(root, out_dir));
    std::cout << manifest.string() << "\n";
    return 0;
}

int cmd_train(const std::string& root, const std::string& config_path, std::string manifest,
              std::string out_dir, std::string resume_path, int epochs_flag, int64_t seed_flag,
              std::vector<std::string> exclude, int contrastive_flag, std::string augment_mode) {
    uci::AppConfig cfg = load_profile(root, config_path);
    if (!manifest.empty())
        cfg.train.manifest = resolve(root, manifest).string();
    else
        cfg.train.manifest = resolve(root, cfg.train.manifest).string();
    if (!out_dir.empty())
        cfg.train.out_dir = resolve(root, out_dir).string();
    else
        cfg.train.out_dir = resolve(root, cfg.train.out_dir).string();
    if (epochs_flag > 0)
        cfg.train.epochs = epochs_flag;
    if (seed_flag >= 0)
        cfg.train.seed = static_cast<uint64_t>(seed_flag);
    if (!exclude.empty())
        cfg.train.exclude_domains = std::move(exclude);
    if (contrastive_flag >= 0)
        cfg.train.contrastive = contrastive_flag != 0;
    if (!augment_mode.empty())
        cfg.augment.mode = uci::augment_mode_from_string(augment_mode);
    cfg.validate();

    uci::Trainer trainer(cfg);
    if (!resume_path.empty())
        trainer.resume(resolve(root, resume_path));
    else
        trainer.init();
    const uci::TrainResult result = trainer.run(&std::cerr);
    std::cout << result.final_checkpoint.string() << "\n";
    std::cout << result.metrics_path.string() << "\n";
    return 0;
}

int cmd_eval(const std::string& root, std::string ckpt_path, std::string manifest,
             std::string hold_out, std::string out_dir, int clip_len_flag) {
    const uci::LoadedCheckpoint ckpt = uci::load_checkpoint(resolve(root, ckpt_path));
    uci::AppConfig cfg = uci::app_config_from_json(ckpt.config_echo);
    uci::Model model(cfg.model);
    uci::ParamRegistry reg;
    model.register_params(reg);
    uci::apply_checkpoint(ckpt, reg);

    const auto records = uci::load_manifest(resolve(root, manifest));
    const int clip_len = clip_len_flag > 0 ? clip_len_flag : cfg.train.clip_len;
    const uci::DomainReport report = uci::cross_domain_report(model, records, hold_out, clip_len);

    const fs::path out = resolve(root, out_dir.empty() ? std::string("report") : out_dir);
    fs::create_directories(out);
    uci::write_report_tsv(report, out / "report.tsv");
    uci::write_report_json(report, out / "report.json");
    for (const uci::DomainReportRow& r : report.rows)
        std::cout << r.domain << " n=" << r.n_videos << " auc=" << r.auc << " acc=" << r.acc << "\n";
    std::cout << (out / "report.tsv").string() << "\n";
    std::cout << (out / "report.json").string() << "\n";
    return 0;
}

int cmd_augment_preview(const std::string& root, std::string clip_dir, int64_t seed_flag,
                        std::string out_dir, const std::string& config_path, int max_frames) {
    uci::AppConfig cfg = load_profile(root, config_path);
    const fs::path dir = resolve(root, clip_dir);
    std::vector<uci::Frame> frames;
    for (int i = 0;; ++i) {
        const fs::path f = dir / uci::frame_file_name(i);
        if (!fs::exists(f))
            break;
        frames.push_back(uci::read_ppm(f));
        if (max_frames > 0 && static_cast<int>(frames.size()) >= max_frames)
            break;
    }
    if (frames.size() < 2)
        throw uci::IoError("augment-preview: need at least 2 frames in " + dir.string());

    uci::VideoClip clip;
    clip.frames = std::move(frames);
    clip.source_id = dir.filename().string();
    uci::Rng rng(seed_flag >= 0 ? static_cast<uint64_t>(seed_flag) : cfg.train.seed);
    uci::AugmentTrace trace;
    const uci::VideoClip augmented = uci::apply(clip, rng, cfg.augment, &trace);

    // two rows: originals resized to the canvas on top, augmented below
    const int s = cfg.augment.output_size;
    const int n = clip.length();
    uci::Image strip(2 * s, n * s);
    for (int i = 0; i < n; ++i) {
        const uci::Image orig = uci::resize_bilinear(clip.frames[static_cast<size_t>(i)], s, s);
        const uci::Image& aug = augmented.frames[static_cast<size_t>(i)];
        for (int y = 0; y < s; ++y) {
            for (int x = 0; x < s; ++x) {
                for (int c = 0; c < 3; ++c) {
                    strip.at(y, i * s + x, c) = orig.at(y, x, c);
                    strip.at(s + y, i * s + x, c) = aug.at(y, x, c);
                }
            }
        }
    }
    const fs::path out = resolve(root, out_dir);
    fs::create_directories(out);
    const fs::path strip_path = out / "before_after.ppm";
    uci::write_ppm(strip_path, strip);
    std::cout << strip_path.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"UCI deepfake-video-detection workbench"};
    app.require_subcommand(1);
    std::string root = ".";
    app.add_option("--root", root, "workspace root for relative paths");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic multi-domain corpus");
    std::string synth_config, synth_out = "corpus";
    int64_t synth_seed = -1;
    synth->add_option("--config", synth_config, "json profile");
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--seed", synth_seed, "override corpus seed");

    // train
    auto* train = app.add_subcommand("train", "train on a manifest");
    std::string train_config, train_manifest, train_out, train_resume, train_aug_mode;
    std::vector<std::string> train_exclude;
    int train_epochs = 0;
    int64_t train_seed = -1;
    int train_contrastive = -1;
    train->add_option("--config", train_config, "json profile");
    train->add_option("--manifest", train_manifest, "corpus manifest");
    train->add_option("--out", train_out, "run output directory");
    train->add_option("--resume", train_resume, "checkpoint to resume from");
    train->add_option("--epochs", train_epochs, "override epoch count");
    train->add_option("--seed", train_seed, "override training seed");
    train->add_option("--exclude-domain", train_exclude, "domain(s) excluded from training");
    train->add_option("--contrastive", train_contrastive, "1 enables, 0 disables the contrastive term");
    train->add_option("--augment-mode", train_aug_mode,
                      "temporal_preserved | per_frame | none");

    // eval
    auto* evalc = app.add_subcommand("eval", "cross-domain evaluation of a checkpoint");
    std::string eval_ckpt, eval_manifest, eval_holdout, eval_out = "report";
    int eval_clip_len = 0;
    evalc->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
    evalc->add_option("--manifest", eval_manifest, "corpus manifest")->required();
    evalc->add_option("--hold-out", eval_holdout, "held-out domain tag")->required();
    evalc->add_option("--out", eval_out, "report output directory");
    evalc->add_option("--clip-len", eval_clip_len, "override clip length");

    // augment-preview
    auto* prev = app.add_subcommand("augment-preview", "write before/after augmentation strips");
    std::string prev_clip, prev_out = "preview", prev_config;
    int64_t prev_seed = -1;
    int prev_max_frames = 8;
    prev->add_option("--clip", prev_clip, "directory of frame_#####.ppm files")->required();
    prev->add_option("--seed", prev_seed, "augmentation seed");
    prev->add_option("--out", prev_out, "output directory");
    prev->add_option("--config", prev_config, "json profile");
    prev->add_option("--max-frames", prev_max_frames, "frames per strip");

    // selfcheck
    auto* self = app.add_subcommand("selfcheck", "run the built-in numeric checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (synth->parsed())
            return cmd_synth(root, synth_config, synth_out, synth_seed);
        if (train->parsed())
            return cmd_train(root, train_config, train_manifest, train_out, train_resume,
                             train_epochs, train_seed, train_exclude, train_contrastive,
                             train_aug_mode);
        if (evalc->parsed())
            return cmd_eval(root, eval_ckpt, eval_manifest, eval_holdout, eval_out, eval_clip_len);
        if (prev->parsed())
            return cmd_augment_preview(root, prev_clip, prev_seed, prev_out, prev_config,
                                       prev_max_frames);
        if (self->parsed())
            return uci::run_selfcheck(std::cout) ? 0 : kExitNumeric;
    } catch (const uci::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const uci::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const uci::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
