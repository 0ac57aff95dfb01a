#pragma once

#include "uci/augment.hpp"
#include "uci/clips.hpp"
#include "uci/model.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace uci {

struct TrainConfig {
    int batch_size = 16;
    double learning_rate = 1e-4;
    int epochs = 30;
    int clip_len = 96;
    int frame_stride = 1; // consecutive frames by default
    double alpha_warmup = 0.1;
    double alpha_main = 0.5;
    int warmup_epochs = 5;
    double tau = 0.1;
    uint64_t seed = 1;
    std::string manifest;
    std::string out_dir = "run";
    std::vector<std::string> exclude_domains; // leave-one-domain-out training
    bool contrastive = true;                  // false pins alpha to 0
    double grad_clip = 0.0;                   // 0 disables
    int checkpoint_every = 1;                 // epochs; 0 keeps only the final one
    int early_stop_patience = 0;              // 0 disables val-AUC early stopping

    void validate() const;
};

/// Everything one run needs. The JSON profile files mirror this shape with
/// the same key names; absent keys keep their defaults, so profiles only
/// spell out what they change.
struct AppConfig {
    TrainConfig train;
    AugmentConfig augment;
    ModelConfig model;
    SyntheticConfig synth;

    void validate() const;
};

nlohmann::json app_config_to_json(const AppConfig& cfg);
AppConfig app_config_from_json(const nlohmann::json& j, AppConfig base = AppConfig{});
AppConfig load_app_config(const std::filesystem::path& path, AppConfig base = AppConfig{});

} // namespace uci
