#include "uci/model.hpp"

#include "uci/eval.hpp"

namespace uci {

void ModelConfig::validate() const {
    encoder.validate();
    mve.validate();
    attention.validate();
    if (encoder.out_dim != mve.rep_dim)
        throw ConfigError("model config: encoder out_dim must equal mve rep_dim");
    if (attention.in_dim != mve.views)
        throw ConfigError("model config: attention in_dim must equal mve views");
    if (input_size < 8)
        throw ConfigError("model config: input_size too small");
}

namespace {
ModelConfig validated(ModelConfig c) {
    c.validate();
    return c;
}
} // namespace

Model::Model(ModelConfig config)
    : cfg(validated(std::move(config))), encoder(make_encoder(cfg.encoder)), mve(cfg.mve),
      attention(cfg.attention) {}

void Model::register_params(ParamRegistry& reg) {
    encoder->register_params(reg);
    mve.register_params(reg);
    attention.register_params(reg);
}

void Model::init_params(uint64_t seed) {
    Rng rng(seed_chain({seed, stable_hash("model-init")}));
    encoder->init_params(rng);
    mve.init_params(rng);
    attention.init_params(rng);
}

std::vector<double> Model::clip_probs(std::span<const VideoClip> clips) {
    std::vector<VideoClip> resized;
    const VideoClip* batch = clips.data();
    size_t batch_n = clips.size();
    bool needs_resize = false;
    for (const VideoClip& c : clips)
        for (const Frame& f : c.frames)
            if (f.h != cfg.input_size || f.w != cfg.input_size)
                needs_resize = true;
    if (needs_resize) {
        resized.reserve(clips.size());
        for (const VideoClip& c : clips) {
            VideoClip r;
            r.source_id = c.source_id;
            for (const Frame& f : c.frames)
                r.frames.push_back(resize_bilinear(f, cfg.input_size, cfg.input_size));
            resized.push_back(std::move(r));
        }
        batch = resized.data();
        batch_n = resized.size();
    }

    const EncoderInput input = clips_to_input({batch, batch_n});
    const std::vector<double> reps = encoder->forward(input);
    std::vector<double> probs(batch_n, 0.0);
    for (size_t i = 0; i < batch_n; ++i) {
        const MveCache c = mve.forward(
            {reps.data() + i * static_cast<size_t>(cfg.mve.rep_dim), static_cast<size_t>(cfg.mve.rep_dim)});
        probs[i] = c.prob;
    }
    return probs;
}

double Model::score_record(const ClipRecord& record, int clip_len) {
    const std::vector<VideoClip> windows = sample_clip_windows(record, clip_len);
    return video_score(clip_probs(windows));
}

} // namespace uci
