#pragma once

#include "uci/clips.hpp"
#include "uci/nn.hpp"

#include <array>
#include <memory>
#include <span>
#include <vector>

namespace uci {

/// Batch of normalized clips, layout [b][c][t][h][w], values in [0, 1].
struct EncoderInput {
    int b = 0, c = 0, t = 0, h = 0, w = 0;
    std::vector<double> data;

    size_t sample_size() const { return static_cast<size_t>(c) * t * h * w; }
};

/// Packs clips into an EncoderInput (divides by 255). All clips must share
/// frame count and frame size.
EncoderInput clips_to_input(std::span<const VideoClip> clips);

struct EncoderConfig {
    std::string variant = "toy3d"; // toy3d | external
    std::vector<int> stage_channels = {4, 8, 16, 32};
    // {temporal stride, spatial stride} per stage; kernel is 3x3x3, pad 1
    std::vector<std::array<int, 2>> stage_strides = {{1, 2}, {2, 2}, {2, 2}, {2, 2}};
    int out_dim = 2048;

    void validate() const;
};

/// Pluggable clip-to-representation interface. The shipped implementation is
/// a small 3D temporal ConvNet; `external` names the seam where a pretrained
/// backbone can be attached and is not constructible in this build.
class Encoder {
public:
    virtual ~Encoder() = default;
    virtual const EncoderConfig& config() const = 0;
    virtual void register_params(ParamRegistry& reg) = 0;
    virtual void init_params(Rng& rng) = 0;

    /// Returns b x out_dim, row-major. Caches activations for backward.
    virtual std::vector<double> forward(const EncoderInput& input) = 0;

    /// Accumulates parameter gradients given dLoss/dOutput (b x out_dim).
    /// Must follow a forward on the same input.
    virtual void backward(const std::vector<double>& d_out) = 0;

    /// Fingerprint of the last forward's ReLU on/off pattern; the gradient
    /// checker uses it to reject finite-difference steps that cross a kink.
    virtual uint64_t activation_signature() const { return 0; }
};

std::unique_ptr<Encoder> make_encoder(const EncoderConfig& config);

/// Finite-difference validation harness: builds a toy3d encoder from
/// `config`, takes loss = sum of outputs and returns the maximum relative
/// error between analytic and central-difference parameter gradients.
double encoder_grad_check(const EncoderConfig& config, const EncoderInput& input,
                          uint64_t seed, double step = 1e-3);

} // namespace uci
