#include "uci/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace uci {

BatchPartition BatchPartition::from_labels(std::span<const int> labels) {
    BatchPartition p;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
        if (labels[static_cast<size_t>(i)] == 1)
            p.fake_indices.push_back(i);
        else if (labels[static_cast<size_t>(i)] == 0)
            p.real_indices.push_back(i);
        else
            throw ConfigError("partition: labels must be 0 or 1");
    }
    return p;
}

void BatchPartition::validate(int batch) const {
    if (real_indices.size() < 2 || fake_indices.size() < 2)
        throw ConfigError("partition: need at least 2 samples per class");
    std::vector<char> seen(static_cast<size_t>(batch), 0);
    for (int i : real_indices) {
        if (i < 0 || i >= batch || seen[static_cast<size_t>(i)])
            throw ConfigError("partition: bad or duplicate real index");
        seen[static_cast<size_t>(i)] = 1;
    }
    for (int i : fake_indices) {
        if (i < 0 || i >= batch || seen[static_cast<size_t>(i)])
            throw ConfigError("partition: bad or duplicate fake index");
        seen[static_cast<size_t>(i)] = 1;
    }
}

namespace {

// Shared shape of Eqs. 6 and 7: positives are ordered same-class pairs
// (i != j), negatives every ordered cross-class pair. With M the max score
// over all participating pairs,
//   L = -log( sum_pos e^{(s-M)/tau} / (sum_pos e^{(s-M)/tau} + sum_neg e^{(s-M)/tau}) )
// which is exact and overflow-safe for any finite scores.
struct NceTerms {
    double max_score = 0.0;
    double pos_mass = 0.0;
    double neg_mass = 0.0;
};

NceTerms nce_terms(const AttentionMatrix& scores, const std::vector<int>& same,
                   const std::vector<int>& other, double tau) {
    double m = -std::numeric_limits<double>::infinity();
    for (int i : same)
        for (int j : same)
            if (i != j)
                m = std::max(m, scores.at(i, j));
    for (int i : same)
        for (int j : other)
            m = std::max(m, scores.at(i, j));

    NceTerms t;
    t.max_score = m;
    for (int i : same)
        for (int j : same)
            if (i != j)
                t.pos_mass += std::exp((scores.at(i, j) - m) / tau);
    for (int i : same)
        for (int j : other)
            t.neg_mass += std::exp((scores.at(i, j) - m) / tau);
    return t;
}

double nce_loss(const AttentionMatrix& scores, const BatchPartition& partition, double tau,
                bool fake_side) {
    partition.validate(scores.n);
    if (tau <= 0.0)
        throw ConfigError("contrastive: temperature must be positive");
    for (double s : scores.scores)
        if (!std::isfinite(s))
            throw NumericError("contrastive: non-finite attention score");
    const std::vector<int>& same = fake_side ? partition.fake_indices : partition.real_indices;
    const std::vector<int>& other = fake_side ? partition.real_indices : partition.fake_indices;
    const NceTerms t = nce_terms(scores, same, other, tau);
    return -std::log(t.pos_mass / (t.pos_mass + t.neg_mass));
}

} // namespace

double loss_real(const AttentionMatrix& scores, const BatchPartition& partition, double tau) {
    return nce_loss(scores, partition, tau, false);
}

double loss_fake(const AttentionMatrix& scores, const BatchPartition& partition, double tau) {
    return nce_loss(scores, partition, tau, true);
}

double loss_in(double l_real, double l_fake) {
    return 0.5 * l_real + 0.5 * l_fake;
}

double total_loss(double l_in, double l_ce, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ConfigError("total_loss: alpha must lie in [0, 1]");
    return alpha * l_in + (1.0 - alpha) * l_ce;
}

void contrastive_backward(const AttentionMatrix& scores, const BatchPartition& partition,
                          double tau, bool fake_side, double weight, AttentionMatrix& d_scores) {
    partition.validate(scores.n);
    if (d_scores.n != scores.n)
        throw NumericError("contrastive backward: gradient shape mismatch");
    const std::vector<int>& same = fake_side ? partition.fake_indices : partition.real_indices;
    const std::vector<int>& other = fake_side ? partition.real_indices : partition.fake_indices;
    const NceTerms t = nce_terms(scores, same, other, tau);
    const double denom = t.pos_mass + t.neg_mass;

    // dL/ds = e^{(s-M)/tau}/tau * (1/denom - 1/pos_mass)  for positive pairs
    //         e^{(s-M)/tau}/tau * (1/denom)               for negative pairs
    for (int i : same)
        for (int j : same)
            if (i != j) {
                const double e = std::exp((scores.at(i, j) - t.max_score) / tau);
                d_scores.at(i, j) += weight * e / tau * (1.0 / denom - 1.0 / t.pos_mass);
            }
    for (int i : same)
        for (int j : other) {
            const double e = std::exp((scores.at(i, j) - t.max_score) / tau);
            d_scores.at(i, j) += weight * e / (tau * denom);
        }
}

} // namespace uci
