#include "uci/config.hpp"

#include <fstream>

namespace uci {

using nlohmann::json;

void TrainConfig::validate() const {
    if (batch_size < 4 || batch_size % 2 != 0)
        throw ConfigError("train config: batch_size must be even and at least 4");
    if (learning_rate <= 0.0)
        throw ConfigError("train config: learning_rate must be positive");
    if (epochs < 1)
        throw ConfigError("train config: epochs must be >= 1");
    if (clip_len < 2)
        throw ConfigError("train config: clip_len must be >= 2");
    if (frame_stride < 1)
        throw ConfigError("train config: frame_stride must be >= 1");
    if (!(alpha_warmup >= 0.0 && alpha_warmup <= 1.0 && alpha_main >= 0.0 && alpha_main <= 1.0))
        throw ConfigError("train config: alpha values must lie in [0, 1]");
    if (warmup_epochs < 0)
        throw ConfigError("train config: warmup_epochs must be >= 0");
    if (tau <= 0.0)
        throw ConfigError("train config: tau must be positive");
    if (grad_clip < 0.0)
        throw ConfigError("train config: grad_clip must be >= 0");
    if (checkpoint_every < 0 || early_stop_patience < 0)
        throw ConfigError("train config: counters must be >= 0");
}

void AppConfig::validate() const {
    train.validate();
    augment.validate();
    model.validate();
    synth.validate();
    if (augment.output_size != model.input_size)
        throw ConfigError("config: augment output_size must equal model input_size");
}

namespace {

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key))
        out = j.at(key).get<T>();
}

json encoder_to_json(const EncoderConfig& c) {
    json strides = json::array();
    for (const auto& s : c.stage_strides)
        strides.push_back({s[0], s[1]});
    return {{"variant", c.variant},
            {"stage_channels", c.stage_channels},
            {"stage_strides", strides},
            {"out_dim", c.out_dim}};
}

void encoder_from_json(const json& j, EncoderConfig& c) {
    get_if(j, "variant", c.variant);
    get_if(j, "stage_channels", c.stage_channels);
    if (j.contains("stage_strides")) {
        c.stage_strides.clear();
        for (const auto& s : j.at("stage_strides"))
            c.stage_strides.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
    }
    get_if(j, "out_dim", c.out_dim);
}

json mve_to_json(const MveConfig& c) {
    return {{"rep_dim", c.rep_dim},
            {"views", c.views},
            {"compression", c.compression},
            {"kernel", c.kernel},
            {"per_view_fc", c.per_view_fc}};
}

void mve_from_json(const json& j, MveConfig& c) {
    get_if(j, "rep_dim", c.rep_dim);
    get_if(j, "views", c.views);
    get_if(j, "compression", c.compression);
    get_if(j, "kernel", c.kernel);
    get_if(j, "per_view_fc", c.per_view_fc);
}

json attention_to_json(const AttentionConfig& c) {
    return {{"heads", c.heads}, {"head_dim", c.head_dim}, {"in_dim", c.in_dim}};
}

void attention_from_json(const json& j, AttentionConfig& c) {
    get_if(j, "heads", c.heads);
    get_if(j, "head_dim", c.head_dim);
    get_if(j, "in_dim", c.in_dim);
}

json augment_to_json(const AugmentConfig& c) {
    return {{"p_crop", c.p_crop},
            {"p_blur", c.p_blur},
            {"p_flip", c.p_flip},
            {"p_vflip", c.p_vflip},
            {"p_colorjitter", c.p_colorjitter},
            {"p_greyscale", c.p_greyscale},
            {"p_cutout", c.p_cutout},
            {"size_ratio_min", c.size_ratio_min},
            {"size_ratio_max", c.size_ratio_max},
            {"aspect_min", c.aspect_min},
            {"aspect_max", c.aspect_max},
            {"cutout_side_min", c.cutout_side_min},
            {"cutout_side_max", c.cutout_side_max},
            {"output_size", c.output_size},
            {"blur_sigma_min", c.blur_sigma_min},
            {"blur_sigma_max", c.blur_sigma_max},
            {"jitter_factor_min", c.jitter_factor_min},
            {"jitter_factor_max", c.jitter_factor_max},
            {"hue_shift_max", c.hue_shift_max},
            {"mode", augment_mode_name(c.mode)},
            {"frame_flags_once", c.frame_flags_once}};
}

void augment_from_json(const json& j, AugmentConfig& c) {
    get_if(j, "p_crop", c.p_crop);
    get_if(j, "p_blur", c.p_blur);
    get_if(j, "p_flip", c.p_flip);
    get_if(j, "p_vflip", c.p_vflip);
    get_if(j, "p_colorjitter", c.p_colorjitter);
    get_if(j, "p_greyscale", c.p_greyscale);
    get_if(j, "p_cutout", c.p_cutout);
    get_if(j, "size_ratio_min", c.size_ratio_min);
    get_if(j, "size_ratio_max", c.size_ratio_max);
    get_if(j, "aspect_min", c.aspect_min);
    get_if(j, "aspect_max", c.aspect_max);
    get_if(j, "cutout_side_min", c.cutout_side_min);
    get_if(j, "cutout_side_max", c.cutout_side_max);
    get_if(j, "output_size", c.output_size);
    get_if(j, "blur_sigma_min", c.blur_sigma_min);
    get_if(j, "blur_sigma_max", c.blur_sigma_max);
    get_if(j, "jitter_factor_min", c.jitter_factor_min);
    get_if(j, "jitter_factor_max", c.jitter_factor_max);
    get_if(j, "hue_shift_max", c.hue_shift_max);
    if (j.contains("mode"))
        c.mode = augment_mode_from_string(j.at("mode").get<std::string>());
    get_if(j, "frame_flags_once", c.frame_flags_once);
}

json synth_to_json(const SyntheticConfig& c) {
    return {{"num_domains", c.num_domains},
            {"videos_per_domain_per_label", c.videos_per_domain_per_label},
            {"frames_per_video", c.frames_per_video},
            {"frame_size", c.frame_size},
            {"motion_smoothness", c.motion_smoothness},
            {"fake_jitter_px", c.fake_jitter_px},
            {"seed", c.seed},
            {"train_frac", c.train_frac},
            {"val_frac", c.val_frac}};
}

void synth_from_json(const json& j, SyntheticConfig& c) {
    get_if(j, "num_domains", c.num_domains);
    get_if(j, "videos_per_domain_per_label", c.videos_per_domain_per_label);
    get_if(j, "frames_per_video", c.frames_per_video);
    get_if(j, "frame_size", c.frame_size);
    get_if(j, "motion_smoothness", c.motion_smoothness);
    get_if(j, "fake_jitter_px", c.fake_jitter_px);
    get_if(j, "seed", c.seed);
    get_if(j, "train_frac", c.train_frac);
    get_if(j, "val_frac", c.val_frac);
}

json train_to_json(const TrainConfig& c) {
    return {{"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"epochs", c.epochs},
            {"clip_len", c.clip_len},
            {"frame_stride", c.frame_stride},
            {"alpha_warmup", c.alpha_warmup},
            {"alpha_main", c.alpha_main},
            {"warmup_epochs", c.warmup_epochs},
            {"tau", c.tau},
            {"seed", c.seed},
            {"manifest", c.manifest},
            {"out_dir", c.out_dir},
            {"exclude_domains", c.exclude_domains},
            {"contrastive", c.contrastive},
            {"grad_clip", c.grad_clip},
            {"checkpoint_every", c.checkpoint_every},
            {"early_stop_patience", c.early_stop_patience}};
}

void train_from_json(const json& j, TrainConfig& c) {
    get_if(j, "batch_size", c.batch_size);
    get_if(j, "learning_rate", c.learning_rate);
    get_if(j, "epochs", c.epochs);
    get_if(j, "clip_len", c.clip_len);
    get_if(j, "frame_stride", c.frame_stride);
    get_if(j, "alpha_warmup", c.alpha_warmup);
    get_if(j, "alpha_main", c.alpha_main);
    get_if(j, "warmup_epochs", c.warmup_epochs);
    get_if(j, "tau", c.tau);
    get_if(j, "seed", c.seed);
    get_if(j, "manifest", c.manifest);
    get_if(j, "out_dir", c.out_dir);
    get_if(j, "exclude_domains", c.exclude_domains);
    get_if(j, "contrastive", c.contrastive);
    get_if(j, "grad_clip", c.grad_clip);
    get_if(j, "checkpoint_every", c.checkpoint_every);
    get_if(j, "early_stop_patience", c.early_stop_patience);
}

} // namespace

json app_config_to_json(const AppConfig& cfg) {
    json j;
    j["train"] = train_to_json(cfg.train);
    j["augment"] = augment_to_json(cfg.augment);
    j["model"] = {{"encoder", encoder_to_json(cfg.model.encoder)},
                  {"mve", mve_to_json(cfg.model.mve)},
                  {"attention", attention_to_json(cfg.model.attention)},
                  {"input_size", cfg.model.input_size}};
    j["synth"] = synth_to_json(cfg.synth);
    return j;
}

AppConfig app_config_from_json(const json& j, AppConfig base) {
    if (!j.is_object())
        throw ConfigError("config: top level must be a json object");
    if (j.contains("train"))
        train_from_json(j.at("train"), base.train);
    if (j.contains("augment"))
        augment_from_json(j.at("augment"), base.augment);
    if (j.contains("model")) {
        const json& m = j.at("model");
        if (m.contains("encoder"))
            encoder_from_json(m.at("encoder"), base.model.encoder);
        if (m.contains("mve"))
            mve_from_json(m.at("mve"), base.model.mve);
        if (m.contains("attention"))
            attention_from_json(m.at("attention"), base.model.attention);
        get_if(m, "input_size", base.model.input_size);
    }
    if (j.contains("synth"))
        synth_from_json(j.at("synth"), base.synth);
    return base;
}

AppConfig load_app_config(const std::filesystem::path& path, AppConfig base) {
    std::ifstream in(path);
    if (!in)
        throw IoError("config: cannot open " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded())
        throw ConfigError("config: malformed json in " + path.string());
    return app_config_from_json(j, std::move(base));
}

} // namespace uci
