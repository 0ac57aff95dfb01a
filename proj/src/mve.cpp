#include "uci/mve.hpp"

#include <algorithm>
#include <cmath>

namespace uci {

void MveConfig::validate() const {
    if (rep_dim < 1 || views < 1)
        throw ConfigError("mve config: rep_dim and views must be positive");
    if (compression < 1 || views % compression != 0)
        throw ConfigError("mve config: compression must divide views");
    if (kernel < 1 || kernel % 2 == 0 || kernel > rep_dim)
        throw ConfigError("mve config: kernel must be odd and fit in rep_dim");
}

Mve::Mve(MveConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    exp_w_ = Param("mve.expansion.w", {cfg_.views, cfg_.kernel});
    exp_b_ = Param("mve.expansion.b", {cfg_.views});
    fcc_w_ = Param("mve.fc_c.w", {cfg_.se_hidden(), cfg_.views});
    fcc_b_ = Param("mve.fc_c.b", {cfg_.se_hidden()});
    fcr_w_ = Param("mve.fc_r.w", {cfg_.views, cfg_.se_hidden()});
    fcr_b_ = Param("mve.fc_r.b", {cfg_.views});
    if (cfg_.per_view_fc)
        fc_w_ = Param("mve.fc.w", {cfg_.views, cfg_.rep_dim});
    else
        fc_w_ = Param("mve.fc.w", {cfg_.rep_dim});
    fc_b_ = Param("mve.fc.b", {1});
    final_w_ = Param("mve.final.w", {cfg_.views});
    final_b_ = Param("mve.final.b", {1});
}

void Mve::register_params(ParamRegistry& reg) {
    reg.add(&exp_w_);
    reg.add(&exp_b_);
    reg.add(&fcc_w_);
    reg.add(&fcc_b_);
    reg.add(&fcr_w_);
    reg.add(&fcr_b_);
    reg.add(&fc_w_);
    reg.add(&fc_b_);
    reg.add(&final_w_);
    reg.add(&final_b_);
}

void Mve::init_params(Rng& rng) {
    exp_w_.init_uniform_fan_in(rng, cfg_.kernel);
    exp_b_.init_uniform_fan_in(rng, cfg_.kernel);
    fcc_w_.init_uniform_fan_in(rng, cfg_.views);
    fcc_b_.init_uniform_fan_in(rng, cfg_.views);
    fcr_w_.init_uniform_fan_in(rng, cfg_.se_hidden());
    fcr_b_.init_uniform_fan_in(rng, cfg_.se_hidden());
    fc_w_.init_uniform_fan_in(rng, cfg_.rep_dim);
    fc_b_.init_uniform_fan_in(rng, cfg_.rep_dim);
    final_w_.init_uniform_fan_in(rng, cfg_.views);
    final_b_.init_uniform_fan_in(rng, cfg_.views);
}

MultiViewMap Mve::expand(std::span<const double> input) const {
    if (static_cast<int>(input.size()) != cfg_.rep_dim)
        throw ConfigError("mve expand: input length must equal rep_dim");
    for (double v : input)
        if (!std::isfinite(v))
            throw NumericError("mve expand: non-finite input");
    MultiViewMap map;
    map.rep_dim = cfg_.rep_dim;
    map.views = cfg_.views;
    map.data.assign(static_cast<size_t>(cfg_.views) * cfg_.rep_dim, 0.0);
    const int kc = cfg_.kernel / 2;
    for (int v = 0; v < cfg_.views; ++v) {
        const double* w = exp_w_.value.data() + static_cast<size_t>(v) * cfg_.kernel;
        const double b = exp_b_.value[static_cast<size_t>(v)];
        double* row = map.data.data() + static_cast<size_t>(v) * cfg_.rep_dim;
        for (int pos = 0; pos < cfg_.rep_dim; ++pos) {
            double acc = b;
            for (int k = 0; k < cfg_.kernel; ++k) {
                const int src = pos + k - kc;
                if (src >= 0 && src < cfg_.rep_dim)
                    acc += w[k] * input[static_cast<size_t>(src)];
            }
            row[pos] = acc;
        }
    }
    return map;
}

std::vector<double> view_gap(const MultiViewMap& map) {
    std::vector<double> gap(static_cast<size_t>(map.views), 0.0);
    for (int v = 0; v < map.views; ++v) {
        double acc = 0.0;
        for (double x : map.view_row(v))
            acc += x;
        gap[static_cast<size_t>(v)] = acc / static_cast<double>(map.rep_dim);
    }
    return gap;
}

std::vector<double> Mve::se_from_gap(std::span<const double> gap, std::vector<double>* hidden) const {
    const int hid = cfg_.se_hidden();
    std::vector<double> h(static_cast<size_t>(hid), 0.0);
    for (int j = 0; j < hid; ++j) {
        const double* w = fcc_w_.value.data() + static_cast<size_t>(j) * cfg_.views;
        double acc = fcc_b_.value[static_cast<size_t>(j)];
        for (int v = 0; v < cfg_.views; ++v)
            acc += w[v] * gap[static_cast<size_t>(v)];
        h[static_cast<size_t>(j)] = acc > 0.0 ? acc : 0.0;
    }
    std::vector<double> wse(static_cast<size_t>(cfg_.views), 0.0);
    for (int v = 0; v < cfg_.views; ++v) {
        const double* w = fcr_w_.value.data() + static_cast<size_t>(v) * hid;
        double acc = fcr_b_.value[static_cast<size_t>(v)];
        for (int j = 0; j < hid; ++j)
            acc += w[j] * h[static_cast<size_t>(j)];
        wse[static_cast<size_t>(v)] = sigmoid(acc);
    }
    if (hidden)
        *hidden = std::move(h);
    return wse;
}

std::vector<double> Mve::se_weights(const MultiViewMap& map) const {
    return se_from_gap(view_gap(map), nullptr);
}

std::vector<double> Mve::fuse(const MultiViewMap& map, std::span<const double> wse) const {
    if (static_cast<int>(wse.size()) != cfg_.views || map.views != cfg_.views)
        throw ConfigError("mve fuse: shape mismatch");
    std::vector<double> z(static_cast<size_t>(cfg_.views), 0.0);
    for (int v = 0; v < cfg_.views; ++v) {
        const double* fw = cfg_.per_view_fc
                               ? fc_w_.value.data() + static_cast<size_t>(v) * cfg_.rep_dim
                               : fc_w_.value.data();
        auto row = map.view_row(v);
        double dot = 0.0;
        for (int pos = 0; pos < cfg_.rep_dim; ++pos)
            dot += fw[pos] * row[static_cast<size_t>(pos)];
        z[static_cast<size_t>(v)] = (1.0 + wse[static_cast<size_t>(v)]) * dot + fc_b_.value[0];
    }
    return z;
}

double Mve::classify(std::span<const double> z) const {
    if (static_cast<int>(z.size()) != cfg_.views)
        throw ConfigError("mve classify: shape mismatch");
    double logit = final_b_.value[0];
    for (int v = 0; v < cfg_.views; ++v)
        logit += final_w_.value[static_cast<size_t>(v)] * z[static_cast<size_t>(v)];
    return sigmoid(logit);
}

MveCache Mve::forward(std::span<const double> input) const {
    if (static_cast<int>(input.size()) != cfg_.rep_dim)
        throw ConfigError("mve forward: input length must equal rep_dim");
    const int K = cfg_.kernel;
    const int kc = K / 2;
    const int rep = cfg_.rep_dim;

    MveCache c;
    c.input.assign(input.begin(), input.end());
    for (double v : c.input)
        if (!std::isfinite(v))
            throw NumericError("mve forward: non-finite input");

    // Both the expansion conv and Eq. 2's fc are linear along the
    // representation axis, so each view's fc output and GAP reduce to dot
    // products with K shifted sums of I. Equivalent to materializing the
    // 2048x512 map; the reference expand/fuse path is kept for tests.
    c.B.assign(static_cast<size_t>(K), 0.0);
    for (int k = 0; k < K; ++k) {
        double acc = 0.0;
        for (int pos = 0; pos < rep; ++pos) {
            const int src = pos + k - kc;
            if (src >= 0 && src < rep)
                acc += input[static_cast<size_t>(src)];
        }
        c.B[static_cast<size_t>(k)] = acc;
    }

    double sfcw_shared = 0.0;
    if (!cfg_.per_view_fc) {
        c.A.assign(static_cast<size_t>(K), 0.0);
        for (int pos = 0; pos < rep; ++pos)
            sfcw_shared += fc_w_.value[static_cast<size_t>(pos)];
        for (int k = 0; k < K; ++k) {
            double acc = 0.0;
            for (int pos = 0; pos < rep; ++pos) {
                const int src = pos + k - kc;
                if (src >= 0 && src < rep)
                    acc += fc_w_.value[static_cast<size_t>(pos)] * input[static_cast<size_t>(src)];
            }
            c.A[static_cast<size_t>(k)] = acc;
        }
    } else {
        c.A.assign(static_cast<size_t>(cfg_.views) * K, 0.0);
        for (int v = 0; v < cfg_.views; ++v) {
            const double* fw = fc_w_.value.data() + static_cast<size_t>(v) * rep;
            for (int k = 0; k < K; ++k) {
                double acc = 0.0;
                for (int pos = 0; pos < rep; ++pos) {
                    const int src = pos + k - kc;
                    if (src >= 0 && src < rep)
                        acc += fw[pos] * input[static_cast<size_t>(src)];
                }
                c.A[static_cast<size_t>(v) * K + k] = acc;
            }
        }
    }

    c.gap.assign(static_cast<size_t>(cfg_.views), 0.0);
    c.fcdot.assign(static_cast<size_t>(cfg_.views), 0.0);
    for (int v = 0; v < cfg_.views; ++v) {
        const double* w = exp_w_.value.data() + static_cast<size_t>(v) * K;
        const double b = exp_b_.value[static_cast<size_t>(v)];
        double gap_acc = 0.0;
        double fc_acc = 0.0;
        if (!cfg_.per_view_fc) {
            for (int k = 0; k < K; ++k) {
                gap_acc += w[k] * c.B[static_cast<size_t>(k)];
                fc_acc += w[k] * c.A[static_cast<size_t>(k)];
            }
            fc_acc += b * sfcw_shared;
        } else {
            const double* fw = fc_w_.value.data() + static_cast<size_t>(v) * rep;
            double sfcw = 0.0;
            for (int pos = 0; pos < rep; ++pos)
                sfcw += fw[pos];
            for (int k = 0; k < K; ++k) {
                gap_acc += w[k] * c.B[static_cast<size_t>(k)];
                fc_acc += w[k] * c.A[static_cast<size_t>(v) * K + k];
            }
            fc_acc += b * sfcw;
        }
        c.gap[static_cast<size_t>(v)] = b + gap_acc / static_cast<double>(rep);
        c.fcdot[static_cast<size_t>(v)] = fc_acc;
    }

    c.wse = se_from_gap(c.gap, &c.hidden);
    c.z.assign(static_cast<size_t>(cfg_.views), 0.0);
    for (int v = 0; v < cfg_.views; ++v)
        c.z[static_cast<size_t>(v)] =
            (1.0 + c.wse[static_cast<size_t>(v)]) * c.fcdot[static_cast<size_t>(v)] + fc_b_.value[0];

    c.logit = final_b_.value[0];
    for (int v = 0; v < cfg_.views; ++v)
        c.logit += final_w_.value[static_cast<size_t>(v)] * c.z[static_cast<size_t>(v)];
    c.prob = sigmoid(c.logit);
    return c;
}

void Mve::backward(const MveCache& c, std::span<const double> d_z_in, double d_logit,
                   std::span<double> d_input) {
    const int K = cfg_.kernel;
    const int kc = K / 2;
    const int rep = cfg_.rep_dim;
    const int views = cfg_.views;
    const int hid = cfg_.se_hidden();

    // classifier
    std::vector<double> dz(static_cast<size_t>(views), 0.0);
    final_b_.grad[0] += d_logit;
    for (int v = 0; v < views; ++v) {
        final_w_.grad[static_cast<size_t>(v)] += d_logit * c.z[static_cast<size_t>(v)];
        dz[static_cast<size_t>(v)] = d_logit * final_w_.value[static_cast<size_t>(v)];
        if (!d_z_in.empty())
            dz[static_cast<size_t>(v)] += d_z_in[static_cast<size_t>(v)];
    }

    // z[v] = (1 + wse[v]) * fcdot[v] + fc_b
    std::vector<double> dfcdot(static_cast<size_t>(views), 0.0);
    std::vector<double> dwse(static_cast<size_t>(views), 0.0);
    for (int v = 0; v < views; ++v) {
        fc_b_.grad[0] += dz[static_cast<size_t>(v)];
        dfcdot[static_cast<size_t>(v)] = dz[static_cast<size_t>(v)] * (1.0 + c.wse[static_cast<size_t>(v)]);
        dwse[static_cast<size_t>(v)] = dz[static_cast<size_t>(v)] * c.fcdot[static_cast<size_t>(v)];
    }

    // SE branch
    std::vector<double> ds(static_cast<size_t>(views), 0.0);
    for (int v = 0; v < views; ++v) {
        const double w = c.wse[static_cast<size_t>(v)];
        ds[static_cast<size_t>(v)] = dwse[static_cast<size_t>(v)] * w * (1.0 - w);
    }
    std::vector<double> dh(static_cast<size_t>(hid), 0.0);
    for (int v = 0; v < views; ++v) {
        const double g = ds[static_cast<size_t>(v)];
        fcr_b_.grad[static_cast<size_t>(v)] += g;
        double* dw = fcr_w_.grad.data() + static_cast<size_t>(v) * hid;
        const double* w = fcr_w_.value.data() + static_cast<size_t>(v) * hid;
        for (int j = 0; j < hid; ++j) {
            dw[j] += g * c.hidden[static_cast<size_t>(j)];
            dh[static_cast<size_t>(j)] += g * w[j];
        }
    }
    std::vector<double> dgap(static_cast<size_t>(views), 0.0);
    for (int j = 0; j < hid; ++j) {
        if (c.hidden[static_cast<size_t>(j)] <= 0.0)
            continue;
        const double g = dh[static_cast<size_t>(j)];
        fcc_b_.grad[static_cast<size_t>(j)] += g;
        double* dw = fcc_w_.grad.data() + static_cast<size_t>(j) * views;
        const double* w = fcc_w_.value.data() + static_cast<size_t>(j) * views;
        for (int v = 0; v < views; ++v) {
            dw[v] += g * c.gap[static_cast<size_t>(v)];
            dgap[static_cast<size_t>(v)] += g * w[v];
        }
    }

    // expansion + fc
    std::vector<double> dA(c.A.size(), 0.0);
    std::vector<double> dB(static_cast<size_t>(K), 0.0);
    double sfcw_shared = 0.0;
    if (!cfg_.per_view_fc)
        for (int pos = 0; pos < rep; ++pos)
            sfcw_shared += fc_w_.value[static_cast<size_t>(pos)];

    for (int v = 0; v < views; ++v) {
        const double dfc = dfcdot[static_cast<size_t>(v)];
        const double dg = dgap[static_cast<size_t>(v)];
        const double* w = exp_w_.value.data() + static_cast<size_t>(v) * K;
        double* dw = exp_w_.grad.data() + static_cast<size_t>(v) * K;
        const double b = exp_b_.value[static_cast<size_t>(v)];

        double sfcw = sfcw_shared;
        const double* Av = c.A.data();
        double* dAv = dA.data();
        if (cfg_.per_view_fc) {
            const double* fw = fc_w_.value.data() + static_cast<size_t>(v) * rep;
            sfcw = 0.0;
            for (int pos = 0; pos < rep; ++pos)
                sfcw += fw[pos];
            Av = c.A.data() + static_cast<size_t>(v) * K;
            dAv = dA.data() + static_cast<size_t>(v) * K;
        }

        exp_b_.grad[static_cast<size_t>(v)] += dfc * sfcw + dg;
        for (int k = 0; k < K; ++k) {
            dw[k] += dfc * Av[k] + dg * c.B[static_cast<size_t>(k)] / static_cast<double>(rep);
            dAv[k] += dfc * w[k];
            dB[static_cast<size_t>(k)] += dg * w[k] / static_cast<double>(rep);
        }

        if (cfg_.per_view_fc) {
            // dSfcw_v term plus the dA_v convolution into this view's fc row
            double* dfw = fc_w_.grad.data() + static_cast<size_t>(v) * rep;
            const double dsf = dfc * b;
            for (int pos = 0; pos < rep; ++pos) {
                double acc = dsf;
                for (int k = 0; k < K; ++k) {
                    const int src = pos + k - kc;
                    if (src >= 0 && src < rep)
                        acc += dAv[k] * c.input[static_cast<size_t>(src)];
                }
                dfw[pos] += acc;
            }
        }
    }

    if (!cfg_.per_view_fc) {
        double dsf = 0.0;
        for (int v = 0; v < views; ++v)
            dsf += dfcdot[static_cast<size_t>(v)] * exp_b_.value[static_cast<size_t>(v)];
        for (int pos = 0; pos < rep; ++pos) {
            double acc = dsf;
            for (int k = 0; k < K; ++k) {
                const int src = pos + k - kc;
                if (src >= 0 && src < rep)
                    acc += dA[static_cast<size_t>(k)] * c.input[static_cast<size_t>(src)];
            }
            fc_w_.grad[static_cast<size_t>(pos)] += acc;
        }
    }

    // input gradient: dI[src] = sum_k dA[k] * fc_w[src - k + kc] + dB[k] (valid pos)
    if (!d_input.empty()) {
        if (static_cast<int>(d_input.size()) != rep)
            throw NumericError("mve backward: d_input size mismatch");
        if (!cfg_.per_view_fc) {
            for (int src = 0; src < rep; ++src) {
                double acc = 0.0;
                for (int k = 0; k < K; ++k) {
                    const int pos = src - k + kc;
                    if (pos >= 0 && pos < rep)
                        acc += dA[static_cast<size_t>(k)] * fc_w_.value[static_cast<size_t>(pos)] +
                               dB[static_cast<size_t>(k)];
                }
                d_input[static_cast<size_t>(src)] += acc;
            }
        } else {
            for (int src = 0; src < rep; ++src) {
                double acc = 0.0;
                for (int k = 0; k < K; ++k) {
                    const int pos = src - k + kc;
                    if (pos < 0 || pos >= rep)
                        continue;
                    acc += dB[static_cast<size_t>(k)];
                    for (int v = 0; v < views; ++v)
                        acc += dA[static_cast<size_t>(v) * K + k] *
                               fc_w_.value[static_cast<size_t>(v) * rep + pos];
                }
                d_input[static_cast<size_t>(src)] += acc;
            }
        }
    }
}

double bce_loss(double prob, int label) {
    if (label != 0 && label != 1)
        throw ConfigError("bce_loss: label must be 0 or 1");
    constexpr double eps = 1e-7;
    const double p = std::clamp(prob, eps, 1.0 - eps);
    return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

} // namespace uci
