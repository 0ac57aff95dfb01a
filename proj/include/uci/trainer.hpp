#pragma once

#include "uci/checkpoint.hpp"
#include "uci/config.hpp"
#include "uci/contrastive.hpp"
#include "uci/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace uci {

/// Paper schedule: alpha_warmup for the first warmup_epochs (1-based,
/// inclusive), alpha_main afterwards. Zero when the contrastive branch is
/// disabled.
double alpha_schedule(int epoch, const TrainConfig& config);

/// Class-balanced batches: batch_size/2 real plus batch_size/2 fake records
/// per batch, each record used at most once per epoch, remainder dropped.
std::vector<std::vector<ClipRecord>> balanced_batches(const std::vector<ClipRecord>& records,
                                                      int batch_size, Rng& rng);

struct TrainResult {
    std::filesystem::path final_checkpoint;
    std::filesystem::path metrics_path;
    std::filesystem::path val_metrics_path;
    int epochs_run = 0;
    double last_val_auc = 0.0;
};

class Trainer {
public:
    explicit Trainer(AppConfig config);

    /// Fresh parameter initialization from the config seed.
    void init();
    /// Restores weights, optimizer moments and the epoch counter.
    void resume(const std::filesystem::path& checkpoint);

    /// One optimizer update on one batch. Exposed for the overfit and
    /// determinism harnesses; `run` drives it across epochs.
    LossBreakdown train_step(const std::vector<ClipRecord>& batch, int epoch);

    /// Full training: per-epoch checkpoints, one metrics line per step and a
    /// per-epoch validation log. `progress` (optional) receives human
    /// chatter; the files are the contract.
    TrainResult run(std::ostream* progress = nullptr);

    Model& model() { return model_; }
    Adam& optimizer() { return adam_; }
    ParamRegistry& params() { return params_; }
    const std::vector<ClipRecord>& train_records() const { return train_records_; }
    const AppConfig& config() const { return cfg_; }
    int completed_epochs() const { return completed_epochs_; }

    /// Validation AUC/ACC over the val split of the included domains.
    std::pair<double, double> evaluate_val();

private:
    VideoClip load_training_clip(const ClipRecord& record, int epoch);

    AppConfig cfg_;
    Model model_;
    ParamRegistry params_;
    Adam adam_;
    std::vector<ClipRecord> train_records_;
    std::vector<ClipRecord> val_records_;
    int completed_epochs_ = 0;
    int64_t global_step_ = 0;
};

} // namespace uci
