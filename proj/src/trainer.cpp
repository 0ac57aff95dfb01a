#include "uci/trainer.hpp"

#include "uci/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace uci {

namespace fs = std::filesystem;

double alpha_schedule(int epoch, const TrainConfig& config) {
    if (epoch < 1)
        throw ConfigError("alpha_schedule: epochs are 1-based");
    if (!config.contrastive)
        return 0.0;
    return epoch <= config.warmup_epochs ? config.alpha_warmup : config.alpha_main;
}

std::vector<std::vector<ClipRecord>> balanced_batches(const std::vector<ClipRecord>& records,
                                                      int batch_size, Rng& rng) {
    if (batch_size < 2 || batch_size % 2 != 0)
        throw ConfigError("balanced_batches: batch_size must be even and >= 2");
    std::vector<ClipRecord> real, fake;
    for (const ClipRecord& r : records)
        (r.label == 0 ? real : fake).push_back(r);
    if (real.empty() || fake.empty())
        throw ConfigError("balanced_batches: both classes must be present");

    auto shuffle = [&rng](std::vector<ClipRecord>& v) {
        for (size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
    };
    shuffle(real);
    shuffle(fake);

    const int half = batch_size / 2;
    const int n_batches = static_cast<int>(std::min(real.size(), fake.size())) / half;
    std::vector<std::vector<ClipRecord>> batches;
    batches.reserve(static_cast<size_t>(n_batches));
    for (int b = 0; b < n_batches; ++b) {
        std::vector<ClipRecord> batch;
        batch.reserve(static_cast<size_t>(batch_size));
        for (int i = 0; i < half; ++i)
            batch.push_back(real[static_cast<size_t>(b * half + i)]);
        for (int i = 0; i < half; ++i)
            batch.push_back(fake[static_cast<size_t>(b * half + i)]);
        batches.push_back(std::move(batch));
    }
    return batches;
}

Trainer::Trainer(AppConfig config) : cfg_(std::move(config)), model_(cfg_.model) {
    cfg_.validate();
    model_.register_params(params_);
    adam_.lr = cfg_.train.learning_rate;
    adam_.grad_clip = cfg_.train.grad_clip;
    adam_.attach(params_);

    const std::vector<ClipRecord> all = load_manifest(cfg_.train.manifest);
    auto excluded = [&](const ClipRecord& r) {
        return std::find(cfg_.train.exclude_domains.begin(), cfg_.train.exclude_domains.end(),
                         r.domain) != cfg_.train.exclude_domains.end();
    };
    for (const ClipRecord& r : all) {
        if (excluded(r))
            continue;
        if (r.split == Split::train)
            train_records_.push_back(r);
        else if (r.split == Split::val)
            val_records_.push_back(r);
    }
    if (train_records_.empty())
        throw ConfigError("trainer: no training records after domain filtering");
}

void Trainer::init() {
    model_.init_params(cfg_.train.seed);
    adam_.attach(params_);
    completed_epochs_ = 0;
    global_step_ = 0;
}

void Trainer::resume(const fs::path& checkpoint) {
    const LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
    apply_checkpoint(ckpt, params_, &adam_);
    if (!ckpt.snapshot)
        throw ConfigError("resume: checkpoint carries no train state: " + checkpoint.string());
    completed_epochs_ = ckpt.snapshot->epoch;
    global_step_ = ckpt.snapshot->step;
}

VideoClip Trainer::load_training_clip(const ClipRecord& record, int epoch) {
    const int span = (cfg_.train.clip_len - 1) * cfg_.train.frame_stride + 1;
    if (record.frame_count < span)
        throw ConfigError("trainer: video " + record.video_id + " shorter than one clip window");
    Rng wrng(seed_chain({cfg_.train.seed, stable_hash("window"), static_cast<uint64_t>(epoch),
                         stable_hash(record.video_id)}));
    const int start = wrng.uniform_int(0, record.frame_count - span);
    VideoClip clip = load_clip(record, cfg_.train.clip_len, start, cfg_.train.frame_stride);

    Rng arng(seed_chain({cfg_.train.seed, stable_hash("augment"), static_cast<uint64_t>(epoch),
                         stable_hash(record.video_id), static_cast<uint64_t>(start)}));
    return apply(clip, arng, cfg_.augment);
}

LossBreakdown Trainer::train_step(const std::vector<ClipRecord>& batch, int epoch) {
    const int B = static_cast<int>(batch.size());
    if (B < 2)
        throw ConfigError("train_step: batch must hold at least 2 records");

    std::vector<VideoClip> clips;
    clips.reserve(batch.size());
    std::vector<int> labels;
    labels.reserve(batch.size());
    for (const ClipRecord& r : batch) {
        clips.push_back(load_training_clip(r, epoch));
        labels.push_back(r.label);
    }

    const int rep = cfg_.model.mve.rep_dim;
    const int views = cfg_.model.mve.views;
    const EncoderInput input = clips_to_input(clips);
    const std::vector<double> reps = model_.encoder->forward(input);

    std::vector<MveCache> caches(static_cast<size_t>(B));
    std::vector<double> zs(static_cast<size_t>(B) * views);
    for (int i = 0; i < B; ++i) {
        caches[static_cast<size_t>(i)] = model_.mve.forward(
            {reps.data() + static_cast<size_t>(i) * rep, static_cast<size_t>(rep)});
        std::copy(caches[static_cast<size_t>(i)].z.begin(), caches[static_cast<size_t>(i)].z.end(),
                  zs.begin() + static_cast<size_t>(i) * views);
    }

    const AttentionCache att_cache = model_.attention.forward(zs, B);
    const BatchPartition partition = BatchPartition::from_labels(labels);
    const double alpha = alpha_schedule(epoch, cfg_.train);

    LossBreakdown loss;
    loss.alpha = alpha;
    loss.tau = cfg_.train.tau;
    const bool contrastive_ok =
        partition.real_indices.size() >= 2 && partition.fake_indices.size() >= 2;
    if (contrastive_ok) {
        loss.l_real = loss_real(att_cache.scores, partition, cfg_.train.tau);
        loss.l_fake = loss_fake(att_cache.scores, partition, cfg_.train.tau);
        loss.l_in = loss_in(loss.l_real, loss.l_fake);
    }
    double ce = 0.0;
    for (int i = 0; i < B; ++i)
        ce += bce_loss(caches[static_cast<size_t>(i)].prob, labels[static_cast<size_t>(i)]);
    loss.l_ce = ce / static_cast<double>(B);
    loss.l_total = total_loss(loss.l_in, loss.l_ce, alpha);

    if (!std::isfinite(loss.l_total) || !std::isfinite(loss.l_ce) || !std::isfinite(loss.l_in)) {
        std::ostringstream ids;
        for (const ClipRecord& r : batch)
            ids << ' ' << r.video_id;
        throw NumericError("train_step: non-finite loss on batch of:" + ids.str());
    }

    // backward
    params_.zero_grads();
    AttentionMatrix d_scores;
    d_scores.n = B;
    d_scores.scores.assign(static_cast<size_t>(B) * B, 0.0);
    std::vector<double> d_zs(static_cast<size_t>(B) * views, 0.0);
    if (alpha > 0.0 && contrastive_ok) {
        contrastive_backward(att_cache.scores, partition, cfg_.train.tau, false, alpha * 0.5, d_scores);
        contrastive_backward(att_cache.scores, partition, cfg_.train.tau, true, alpha * 0.5, d_scores);
        model_.attention.backward(att_cache, zs, d_scores, d_zs);
    }

    std::vector<double> d_reps(static_cast<size_t>(B) * rep, 0.0);
    const double ce_scale = (1.0 - alpha) / static_cast<double>(B);
    for (int i = 0; i < B; ++i) {
        const double d_logit =
            ce_scale * (caches[static_cast<size_t>(i)].prob - static_cast<double>(labels[static_cast<size_t>(i)]));
        model_.mve.backward(caches[static_cast<size_t>(i)],
                            {d_zs.data() + static_cast<size_t>(i) * views, static_cast<size_t>(views)},
                            d_logit,
                            {d_reps.data() + static_cast<size_t>(i) * rep, static_cast<size_t>(rep)});
    }
    model_.encoder->backward(d_reps);
    adam_.step(params_);
    ++global_step_;
    return loss;
}

std::pair<double, double> Trainer::evaluate_val() {
    std::vector<VideoScore> scores;
    for (const ClipRecord& r : val_records_) {
        VideoScore vs;
        vs.video_id = r.video_id;
        vs.label = r.label;
        vs.domain = r.domain;
        vs.score = model_.score_record(r, cfg_.train.clip_len);
        scores.push_back(std::move(vs));
    }
    if (scores.empty())
        return {0.0, 0.0};
    bool both = false;
    for (const VideoScore& s : scores)
        if (s.label != scores.front().label)
            both = true;
    const double a = both ? auc(scores) : 0.5;
    return {a, acc(scores)};
}

TrainResult Trainer::run(std::ostream* progress) {
    fs::create_directories(cfg_.train.out_dir);
    const fs::path out_dir = cfg_.train.out_dir;
    const fs::path metrics_path = out_dir / "metrics.csv";
    const fs::path val_path = out_dir / "val_metrics.csv";

    const bool resuming = completed_epochs_ > 0;
    std::ofstream metrics(metrics_path, resuming ? std::ios::app : std::ios::trunc);
    std::ofstream val_log(val_path, resuming ? std::ios::app : std::ios::trunc);
    if (!metrics || !val_log)
        throw IoError("trainer: cannot write logs under " + out_dir.string());

    TrainResult result;
    result.metrics_path = metrics_path;
    result.val_metrics_path = val_path;

    char line[512];
    double best_val = -1.0;
    int since_best = 0;
    const int first_epoch = completed_epochs_ + 1;
    for (int epoch = first_epoch; epoch <= cfg_.train.epochs; ++epoch) {
        Rng shuffle_rng(seed_chain({cfg_.train.seed, stable_hash("batches"),
                                    static_cast<uint64_t>(epoch)}));
        const auto batches = balanced_batches(train_records_, cfg_.train.batch_size, shuffle_rng);
        if (batches.empty())
            throw ConfigError("trainer: not enough records for a single balanced batch");
        for (const auto& batch : batches) {
            const LossBreakdown l = train_step(batch, epoch);
            std::snprintf(line, sizeof(line),
                          "%lld,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          static_cast<long long>(global_step_), epoch, l.alpha, l.l_real, l.l_fake,
                          l.l_in, l.l_ce, l.l_total);
            metrics << line;
        }
        metrics.flush();
        completed_epochs_ = epoch;

        const auto [vauc, vacc] = evaluate_val();
        std::snprintf(line, sizeof(line), "%d,%.17g,%.17g\n", epoch, vauc, vacc);
        val_log << line;
        val_log.flush();
        result.last_val_auc = vauc;
        if (progress)
            (*progress) << "epoch " << epoch << " val_auc " << vauc << " val_acc " << vacc << "\n";

        const TrainSnapshot snap{epoch, global_step_, adam_.t()};
        if (cfg_.train.checkpoint_every > 0 &&
            (epoch % cfg_.train.checkpoint_every == 0 || epoch == cfg_.train.epochs)) {
            std::snprintf(line, sizeof(line), "ckpt-epoch-%04d.uci", epoch);
            save_checkpoint(out_dir / line, params_, app_config_to_json(cfg_), &adam_, &snap);
        }
        save_checkpoint(out_dir / "ckpt-final.uci", params_, app_config_to_json(cfg_), &adam_, &snap);

        if (cfg_.train.early_stop_patience > 0) {
            if (vauc > best_val) {
                best_val = vauc;
                since_best = 0;
            } else if (++since_best >= cfg_.train.early_stop_patience) {
                if (progress)
                    (*progress) << "early stop at epoch " << epoch << "\n";
                break;
            }
        }
    }

    result.final_checkpoint = out_dir / "ckpt-final.uci";
    result.epochs_run = completed_epochs_;
    return result;
}

} // namespace uci
