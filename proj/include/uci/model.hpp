#pragma once

#include "uci/attention.hpp"
#include "uci/encoder.hpp"
#include "uci/mve.hpp"

#include <memory>

namespace uci {

struct ModelConfig {
    EncoderConfig encoder;
    MveConfig mve;
    AttentionConfig attention;
    int input_size = 224; // frame canvas the model was trained on

    void validate() const;
};

/// The trainable stack of Figure-1 wiring: encoder -> multi-view expansion
/// -> (classifier, pairwise attention). Owns every parameter.
struct Model {
    ModelConfig cfg;
    std::unique_ptr<Encoder> encoder;
    Mve mve;
    AttentionHeads attention;

    explicit Model(ModelConfig config);

    void register_params(ParamRegistry& reg);
    void init_params(uint64_t seed);

    /// Inference-only fake probability per clip. Frames are resized to the
    /// model canvas and normalized; no augmentation is applied.
    std::vector<double> clip_probs(std::span<const VideoClip> clips);

    /// Mean clip probability over the video's non-overlapping windows.
    double score_record(const ClipRecord& record, int clip_len);
};

} // namespace uci
