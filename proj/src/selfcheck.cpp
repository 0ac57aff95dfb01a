#include "uci/selfcheck.hpp"

#include "uci/attention.hpp"
#include "uci/contrastive.hpp"
#include "uci/encoder.hpp"
#include "uci/eval.hpp"
#include "uci/mve.hpp"

#include <cmath>
#include <ostream>
#include <vector>

namespace uci {

namespace {

bool report(std::ostream& out, const char* name, bool ok, double detail) {
    out << (ok ? "[ ok ] " : "[FAIL] ") << name << " (" << detail << ")\n";
    return ok;
}

bool check_contrastive_closed_form(std::ostream& out) {
    double worst = 0.0;
    for (int n = 2; n <= 4; ++n) {
        AttentionMatrix scores;
        scores.n = 2 * n;
        scores.scores.assign(static_cast<size_t>(scores.n) * scores.n, 0.7);
        BatchPartition part;
        for (int i = 0; i < n; ++i)
            part.real_indices.push_back(i);
        for (int i = n; i < 2 * n; ++i)
            part.fake_indices.push_back(i);
        const double expected = -std::log(static_cast<double>(n - 1) / (2.0 * n - 1.0));
        worst = std::max(worst, std::abs(loss_real(scores, part, 0.1) - expected));
        worst = std::max(worst, std::abs(loss_fake(scores, part, 0.1) - expected));
    }
    return report(out, "contrastive closed form", worst < 1e-9, worst);
}

bool check_mve_chain_gradients(std::ostream& out) {
    MveConfig cfg;
    cfg.rep_dim = 24;
    cfg.views = 8;
    cfg.compression = 4;
    cfg.kernel = 3;
    Mve mve(cfg);
    ParamRegistry reg;
    mve.register_params(reg);
    Rng rng(11);
    mve.init_params(rng);

    std::vector<double> input(static_cast<size_t>(cfg.rep_dim));
    for (double& v : input)
        v = rng.uniform(-1.0, 1.0);

    auto loss_and_grad = [&]() {
        reg.zero_grads();
        MveCache c = mve.forward(input);
        const double loss = bce_loss(c.prob, 1);
        const double d_logit = c.prob - 1.0;
        std::vector<double> d_in(input.size(), 0.0);
        mve.backward(c, {}, d_logit, d_in);
        return loss;
    };
    const double err = max_relative_grad_error(reg.items(), loss_and_grad, 1e-3);
    return report(out, "mve chain gradients", err < 1e-3, err);
}

bool check_head_score_gradients(std::ostream& out) {
    AttentionConfig cfg;
    cfg.heads = 2;
    cfg.head_dim = 3;
    cfg.in_dim = 5;
    AttentionHeads att(cfg);
    ParamRegistry reg;
    att.register_params(reg);
    Rng rng(7);
    att.init_params(rng);

    std::vector<double> zs(2 * static_cast<size_t>(cfg.in_dim));
    for (double& v : zs)
        v = rng.uniform(-1.0, 1.0);

    auto loss_and_grad = [&]() {
        reg.zero_grads();
        AttentionCache cache = att.forward(zs, 2);
        const double loss = cache.scores.at(0, 1);
        AttentionMatrix d;
        d.n = 2;
        d.scores.assign(4, 0.0);
        d.at(0, 1) = 1.0;
        std::vector<double> d_zs(zs.size(), 0.0);
        att.backward(cache, zs, d, d_zs);
        return loss;
    };
    const double err = max_relative_grad_error(reg.items(), loss_and_grad, 1e-3);
    return report(out, "attention head gradients", err < 1e-3, err);
}

bool check_encoder_gradients(std::ostream& out) {
    EncoderConfig cfg;
    cfg.stage_channels = {2, 3};
    cfg.stage_strides = {{1, 2}, {2, 2}};
    cfg.out_dim = 6;
    EncoderInput input;
    input.b = 1;
    input.c = 3;
    input.t = 4;
    input.h = 8;
    input.w = 8;
    Rng rng(3);
    input.data.resize(input.sample_size());
    for (double& v : input.data)
        v = rng.uniform01();
    const double err = encoder_grad_check(cfg, input, 5, 1e-3);
    return report(out, "encoder gradients", err < 1e-3, err);
}

bool check_auc_oracle(std::ostream& out) {
    Rng rng(29);
    int mismatches = 0;
    for (int round = 0; round < 50; ++round) {
        const int n = rng.uniform_int(4, 120);
        std::vector<VideoScore> scores(static_cast<size_t>(n));
        bool has0 = false, has1 = false;
        for (int i = 0; i < n; ++i) {
            scores[static_cast<size_t>(i)].label = rng.bernoulli(0.5) ? 1 : 0;
            // coarse grid forces ties
            scores[static_cast<size_t>(i)].score = rng.uniform_int(0, 12) / 12.0;
            (scores[static_cast<size_t>(i)].label ? has1 : has0) = true;
        }
        if (!has0 || !has1)
            continue;
        if (auc(scores) != auc_pairwise(scores))
            ++mismatches;
    }
    return report(out, "auc rank path vs pairwise oracle", mismatches == 0,
                  static_cast<double>(mismatches));
}

bool check_bce_values(std::ostream& out, const std::function<double(double, int)>& bce) {
    double worst = 0.0;
    worst = std::max(worst, std::abs(bce(0.5, 1) - 0.6931471805599453));
    worst = std::max(worst, std::abs(bce(0.9, 0) - 2.302585092994045));
    worst = std::max(worst, std::abs(bce(1.0 - 1e-7, 1) - (-std::log1p(-1e-7))));
    return report(out, "bce reference values", worst < 1e-9, worst);
}

} // namespace

bool run_selfcheck(std::ostream& out, const SelfcheckOptions& options) {
    const auto bce = options.bce_fn ? options.bce_fn
                                    : [](double p, int y) { return bce_loss(p, y); };
    bool ok = true;
    ok &= check_contrastive_closed_form(out);
    ok &= check_mve_chain_gradients(out);
    ok &= check_head_score_gradients(out);
    ok &= check_encoder_gradients(out);
    ok &= check_auc_oracle(out);
    ok &= check_bce_values(out, bce);
    out << (ok ? "selfcheck: all checks passed\n" : "selfcheck: FAILURES detected\n");
    return ok;
}

} // namespace uci
