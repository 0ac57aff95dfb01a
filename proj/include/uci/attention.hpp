#pragma once

#include "uci/nn.hpp"

#include <span>
#include <vector>

namespace uci {

struct AttentionConfig {
    int heads = 8;
    int head_dim = 64;
    int in_dim = 512;

    void validate() const;
};

/// Pairwise scalar interaction scores over a batch, row-major B x B.
struct AttentionMatrix {
    int n = 0;
    std::vector<double> scores;

    double at(int i, int j) const { return scores[static_cast<size_t>(i) * n + j]; }
    double& at(int i, int j) { return scores[static_cast<size_t>(i) * n + j]; }
};

/// Cached per-sample head projections for the batched path.
struct AttentionCache {
    int batch = 0;
    std::vector<double> proj; // [sample][head][head_dim]
    AttentionMatrix scores;
};

/// Multi-head similarity between fused representations: each head projects
/// R^in_dim -> R^head_dim and contributes a scaled dot product; the scalar
/// interaction is the mean over heads. Symmetric in its two arguments.
class AttentionHeads {
public:
    explicit AttentionHeads(AttentionConfig cfg);

    const AttentionConfig& config() const { return cfg_; }
    void register_params(ParamRegistry& reg);
    void init_params(Rng& rng);

    double head_score(std::span<const double> z_a, std::span<const double> z_b, int head) const;
    double att(std::span<const double> z_a, std::span<const double> z_b) const;

    /// scores[i][j] = att(z_i, z_j) for every ordered pair, diagonal
    /// included (the losses never read it). zs is B x in_dim, B >= 2.
    AttentionMatrix pairwise_att(std::span<const double> zs, int batch) const;

    // training path
    AttentionCache forward(std::span<const double> zs, int batch) const;
    /// Given dLoss/dscores, accumulates projection gradients and adds
    /// dLoss/dZ into d_zs (B x in_dim).
    void backward(const AttentionCache& cache, std::span<const double> zs,
                  const AttentionMatrix& d_scores, std::span<double> d_zs);

    Param& weights() { return w_; }

private:
    void project_one(std::span<const double> z, double* out) const;

    AttentionConfig cfg_;
    Param w_; // heads x head_dim x in_dim
};

} // namespace uci
