#pragma once

#include "uci/attention.hpp"

#include <span>
#include <vector>

namespace uci {

/// Disjoint real/fake index sets over a batch. The InfoNCE terms need at
/// least two members per class for their i != j positive pairs.
struct BatchPartition {
    std::vector<int> real_indices;
    std::vector<int> fake_indices;

    static BatchPartition from_labels(std::span<const int> labels);
    void validate(int batch) const; // throws ConfigError
};

struct LossBreakdown {
    double l_real = 0.0;
    double l_fake = 0.0;
    double l_in = 0.0;
    double l_ce = 0.0;
    double l_total = 0.0;
    double alpha = 0.0;
    double tau = 0.0;
};

/// Eq. 6: -log of the real-pair exponential mass over real-pair plus
/// real-fake mass, temperature tau, computed with max subtraction.
/// Throws when fewer than two real samples are present.
double loss_real(const AttentionMatrix& scores, const BatchPartition& partition, double tau);

/// Eq. 7, roles swapped.
double loss_fake(const AttentionMatrix& scores, const BatchPartition& partition, double tau);

/// Eq. 8: equal-weight mean.
double loss_in(double l_real, double l_fake);

/// Eq. 9: alpha * L_in + (1 - alpha) * L_ce; alpha must lie in [0, 1].
double total_loss(double l_in, double l_ce, double alpha);

/// Adds weight * d(L_r)/d(scores) and weight * d(L_f)/d(scores) into
/// d_scores (one call per loss; pick with `fake_side`).
void contrastive_backward(const AttentionMatrix& scores, const BatchPartition& partition,
                          double tau, bool fake_side, double weight, AttentionMatrix& d_scores);

} // namespace uci
