#include "uci/attention.hpp"

#include <cmath>

namespace uci {

void AttentionConfig::validate() const {
    if (heads < 1)
        throw ConfigError("attention config: need at least one head");
    if (head_dim < 1 || in_dim < 1)
        throw ConfigError("attention config: dimensions must be positive");
}

AttentionHeads::AttentionHeads(AttentionConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    w_ = Param("attention.w", {cfg_.heads, cfg_.head_dim, cfg_.in_dim});
}

void AttentionHeads::register_params(ParamRegistry& reg) {
    reg.add(&w_);
}

void AttentionHeads::init_params(Rng& rng) {
    w_.init_uniform_fan_in(rng, cfg_.in_dim);
}

void AttentionHeads::project_one(std::span<const double> z, double* out) const {
    for (int h = 0; h < cfg_.heads; ++h) {
        const double* wh = w_.value.data() + static_cast<size_t>(h) * cfg_.head_dim * cfg_.in_dim;
        for (int d = 0; d < cfg_.head_dim; ++d) {
            const double* wr = wh + static_cast<size_t>(d) * cfg_.in_dim;
            double acc = 0.0;
            for (int k = 0; k < cfg_.in_dim; ++k)
                acc += wr[k] * z[static_cast<size_t>(k)];
            out[static_cast<size_t>(h) * cfg_.head_dim + d] = acc;
        }
    }
}

double AttentionHeads::head_score(std::span<const double> z_a, std::span<const double> z_b,
                                  int head) const {
    if (head < 0 || head >= cfg_.heads)
        throw ConfigError("attention: head index out of range");
    if (static_cast<int>(z_a.size()) != cfg_.in_dim || static_cast<int>(z_b.size()) != cfg_.in_dim)
        throw ConfigError("attention: representation length must equal in_dim");
    const double* wh = w_.value.data() + static_cast<size_t>(head) * cfg_.head_dim * cfg_.in_dim;
    double score = 0.0;
    for (int d = 0; d < cfg_.head_dim; ++d) {
        const double* wr = wh + static_cast<size_t>(d) * cfg_.in_dim;
        double ua = 0.0, ub = 0.0;
        for (int k = 0; k < cfg_.in_dim; ++k) {
            ua += wr[k] * z_a[static_cast<size_t>(k)];
            ub += wr[k] * z_b[static_cast<size_t>(k)];
        }
        score += ua * ub;
    }
    return score / std::sqrt(static_cast<double>(cfg_.head_dim));
}

double AttentionHeads::att(std::span<const double> z_a, std::span<const double> z_b) const {
    double acc = 0.0;
    for (int h = 0; h < cfg_.heads; ++h)
        acc += head_score(z_a, z_b, h);
    return acc / static_cast<double>(cfg_.heads);
}

AttentionCache AttentionHeads::forward(std::span<const double> zs, int batch) const {
    if (batch < 2)
        throw ConfigError("attention: pairwise scores need a batch of at least 2");
    if (static_cast<int>(zs.size()) != batch * cfg_.in_dim)
        throw ConfigError("attention: batch shape mismatch");
    AttentionCache cache;
    cache.batch = batch;
    const size_t per_sample = static_cast<size_t>(cfg_.heads) * cfg_.head_dim;
    cache.proj.assign(static_cast<size_t>(batch) * per_sample, 0.0);
    for (int i = 0; i < batch; ++i)
        project_one(zs.subspan(static_cast<size_t>(i) * cfg_.in_dim, static_cast<size_t>(cfg_.in_dim)),
                    cache.proj.data() + static_cast<size_t>(i) * per_sample);

    // Accumulation order mirrors att()'s head loop so the batched matrix is
    // bitwise equal to looped att() calls.
    const double sqrt_d = std::sqrt(static_cast<double>(cfg_.head_dim));
    cache.scores.n = batch;
    cache.scores.scores.assign(static_cast<size_t>(batch) * batch, 0.0);
    for (int i = 0; i < batch; ++i) {
        for (int j = i; j < batch; ++j) {
            const double* pi = cache.proj.data() + static_cast<size_t>(i) * per_sample;
            const double* pj = cache.proj.data() + static_cast<size_t>(j) * per_sample;
            double total = 0.0;
            for (int h = 0; h < cfg_.heads; ++h) {
                const double* a = pi + static_cast<size_t>(h) * cfg_.head_dim;
                const double* b = pj + static_cast<size_t>(h) * cfg_.head_dim;
                double acc = 0.0;
                for (int d = 0; d < cfg_.head_dim; ++d)
                    acc += a[d] * b[d];
                total += acc / sqrt_d;
            }
            const double v = total / static_cast<double>(cfg_.heads);
            cache.scores.at(i, j) = v;
            cache.scores.at(j, i) = v;
        }
    }
    return cache;
}

AttentionMatrix AttentionHeads::pairwise_att(std::span<const double> zs, int batch) const {
    return forward(zs, batch).scores;
}

void AttentionHeads::backward(const AttentionCache& cache, std::span<const double> zs,
                              const AttentionMatrix& d_scores, std::span<double> d_zs) {
    const int batch = cache.batch;
    if (d_scores.n != batch)
        throw NumericError("attention backward: score gradient shape mismatch");
    if (static_cast<int>(d_zs.size()) != batch * cfg_.in_dim)
        throw NumericError("attention backward: d_zs shape mismatch");
    const size_t per_sample = static_cast<size_t>(cfg_.heads) * cfg_.head_dim;
    const double scale = 1.0 / (std::sqrt(static_cast<double>(cfg_.head_dim)) * cfg_.heads);

    // dL/dU_i = scale * sum_j (dS_ij + dS_ji) U_j   (diagonal contributes
    // 2 * dS_ii * U_i; the losses leave it at zero)
    std::vector<double> dproj(static_cast<size_t>(batch) * per_sample, 0.0);
    for (int i = 0; i < batch; ++i) {
        double* dpi = dproj.data() + static_cast<size_t>(i) * per_sample;
        for (int j = 0; j < batch; ++j) {
            const double g = (d_scores.at(i, j) + d_scores.at(j, i)) * scale;
            if (g == 0.0)
                continue;
            const double* pj = cache.proj.data() + static_cast<size_t>(j) * per_sample;
            for (size_t k = 0; k < per_sample; ++k)
                dpi[k] += g * pj[k];
        }
    }

    for (int i = 0; i < batch; ++i) {
        const double* dpi = dproj.data() + static_cast<size_t>(i) * per_sample;
        const double* zi = zs.data() + static_cast<size_t>(i) * cfg_.in_dim;
        double* dzi = d_zs.data() + static_cast<size_t>(i) * cfg_.in_dim;
        for (int h = 0; h < cfg_.heads; ++h) {
            for (int d = 0; d < cfg_.head_dim; ++d) {
                const double g = dpi[static_cast<size_t>(h) * cfg_.head_dim + d];
                if (g == 0.0)
                    continue;
                const size_t base = (static_cast<size_t>(h) * cfg_.head_dim + d) * cfg_.in_dim;
                double* dwr = w_.grad.data() + base;
                const double* wr = w_.value.data() + base;
                for (int k = 0; k < cfg_.in_dim; ++k) {
                    dwr[k] += g * zi[k];
                    dzi[k] += g * wr[k];
                }
            }
        }
    }
}

} // namespace uci
