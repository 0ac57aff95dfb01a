#pragma once

#include "uci/nn.hpp"

#include <span>
#include <vector>

namespace uci {

struct MveConfig {
    int rep_dim = 2048; // length of the encoder representation I
    int views = 512;
    int compression = 4; // SE compression ratio r
    int kernel = 3;      // expansion conv kernel over the rep_dim axis
    bool per_view_fc = false; // Eq. 2's fc: shared across views by default

    int se_hidden() const { return views / compression; }
    void validate() const;
};

/// 2048 x 512 multi-view map. Stored view-major (i.e. as the transpose the
/// downstream equations consume); at(pos, view) follows the paper shape.
struct MultiViewMap {
    int rep_dim = 0;
    int views = 0;
    std::vector<double> data; // [view][pos]

    double at(int pos, int view) const { return data[static_cast<size_t>(view) * rep_dim + pos]; }
    std::span<const double> view_row(int view) const {
        return {data.data() + static_cast<size_t>(view) * rep_dim, static_cast<size_t>(rep_dim)};
    }
};

/// Per-sample quantities the training path caches between forward and
/// backward. The multi-view map itself is never materialized there: both the
/// expansion and Eq. 2's fc are linear along the representation axis, so the
/// whole block reduces to a handful of kernel-sized dot products.
struct MveCache {
    std::vector<double> input;   // I (rep_dim)
    std::vector<double> A;       // kernel(xviews if per-view fc): fc-weighted shifted sums of I
    std::vector<double> B;       // kernel: plain shifted sums of I
    std::vector<double> gap;     // views
    std::vector<double> hidden;  // se_hidden, post-ReLU
    std::vector<double> wse;     // views, in (0,1)
    std::vector<double> fcdot;   // views: fc applied to each raw view
    std::vector<double> z;       // views
    double logit = 0.0;
    double prob = 0.5;
};

class Mve {
public:
    explicit Mve(MveConfig cfg);

    const MveConfig& config() const { return cfg_; }
    void register_params(ParamRegistry& reg);
    void init_params(Rng& rng);

    // ---- spec operations (reference path, materialized map) ----
    MultiViewMap expand(std::span<const double> input) const;
    std::vector<double> se_weights(const MultiViewMap& map) const;
    std::vector<double> fuse(const MultiViewMap& map, std::span<const double> wse) const;
    double classify(std::span<const double> z) const;

    // ---- training path ----
    MveCache forward(std::span<const double> input) const;
    /// Accumulates parameter gradients; adds dLoss/dI into d_input.
    /// d_z is dLoss/dZ from the attention branch; d_logit is dLoss/dlogit
    /// from the classification branch.
    void backward(const MveCache& cache, std::span<const double> d_z, double d_logit,
                  std::span<double> d_input);

    Param& expansion_w() { return exp_w_; }
    Param& expansion_b() { return exp_b_; }
    Param& fc_weight() { return fc_w_; }
    Param& fc_bias() { return fc_b_; }
    Param& classifier_w() { return final_w_; }
    Param& classifier_b() { return final_b_; }

private:
    std::vector<double> se_from_gap(std::span<const double> gap, std::vector<double>* hidden) const;

    MveConfig cfg_;
    Param exp_w_;   // views x kernel
    Param exp_b_;   // views
    Param fcc_w_;   // se_hidden x views
    Param fcc_b_;   // se_hidden
    Param fcr_w_;   // views x se_hidden
    Param fcr_b_;   // views
    Param fc_w_;    // rep_dim (shared) or views x rep_dim (per-view)
    Param fc_b_;    // 1
    Param final_w_; // views
    Param final_b_; // 1
};

/// GAP over the representation axis: one descriptor per view.
std::vector<double> view_gap(const MultiViewMap& map);

/// Standard negated binary cross-entropy with the probability clamped to
/// [eps, 1 - eps], eps = 1e-7. label must be 0 or 1.
double bce_loss(double prob, int label);

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

} // namespace uci
