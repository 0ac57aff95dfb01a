#include "uci/nn.hpp"

#include <algorithm>
#include <cmath>

namespace uci {

void Adam::step(ParamRegistry& reg) {
    if (m_.size() != reg.items().size())
        throw NumericError("adam: optimizer not attached to this registry");
    ++t_;
    if (grad_clip > 0.0) {
        double sq = 0.0;
        for (Param* p : reg.items())
            for (double g : p->grad)
                sq += g * g;
        const double norm = std::sqrt(sq);
        if (norm > grad_clip) {
            const double scale = grad_clip / norm;
            for (Param* p : reg.items())
                for (double& g : p->grad)
                    g *= scale;
        }
    }
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (size_t i = 0; i < reg.items().size(); ++i) {
        Param* p = reg.items()[i];
        std::vector<double>& m = m_[i];
        std::vector<double>& v = v_[i];
        for (size_t k = 0; k < p->size(); ++k) {
            const double g = p->grad[k];
            m[k] = beta1 * m[k] + (1.0 - beta1) * g;
            v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p->value[k] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

double max_relative_grad_error(std::vector<Param*> params,
                               const std::function<double()>& loss_and_grad,
                               double step,
                               const std::function<uint64_t()>& activation_signature) {
    // one analytic pass, grads captured before the perturbation sweeps
    loss_and_grad();
    const uint64_t base_sig = activation_signature ? activation_signature() : 0u;
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (Param* p : params)
        analytic.push_back(p->grad);

    double max_err = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Param* p = params[pi];
        for (size_t k = 0; k < p->size(); ++k) {
            const double orig = p->value[k];
            p->value[k] = orig + step;
            const double lp = loss_and_grad();
            const uint64_t sig_p = activation_signature ? activation_signature() : 0u;
            p->value[k] = orig - step;
            const double lm = loss_and_grad();
            const uint64_t sig_m = activation_signature ? activation_signature() : 0u;
            p->value[k] = orig;
            if (sig_p != base_sig || sig_m != base_sig)
                continue; // perturbation crossed a kink
            const double fd = (lp - lm) / (2.0 * step);
            const double an = analytic[pi][k];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
            max_err = std::max(max_err, std::abs(fd - an) / denom);
        }
    }
    loss_and_grad(); // restore analytic grads for the caller
    return max_err;
}

} // namespace uci
