#pragma once

#include "uci/common.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace uci {

/// Named weight array with its gradient buffer. Modules own their Params;
/// the registry is a flat non-owning view the optimizer and checkpoint walk.
struct Param {
    std::string name;
    std::vector<int> shape;
    std::vector<double> value;
    std::vector<double> grad;

    Param() = default;
    Param(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
        size_t count = 1;
        for (int d : shape) count *= static_cast<size_t>(d);
        value.assign(count, 0.0);
        grad.assign(count, 0.0);
    }

    size_t size() const { return value.size(); }

    void init_uniform_fan_in(Rng& rng, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in > 0 ? fan_in : 1));
        for (double& v : value)
            v = rng.uniform(-bound, bound);
    }

    /// Kaiming-uniform with ReLU gain; keeps activation scale stable through
    /// stacked ReLU stages where fan-in-uniform would shrink it ~6x a stage.
    void init_he_uniform(Rng& rng, int fan_in) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in > 0 ? fan_in : 1));
        for (double& v : value)
            v = rng.uniform(-bound, bound);
    }
};

class ParamRegistry {
public:
    void add(Param* p) { items_.push_back(p); }

    const std::vector<Param*>& items() const { return items_; }
    std::vector<Param*>& items() { return items_; }

    size_t total_size() const {
        size_t n = 0;
        for (const Param* p : items_) n += p->size();
        return n;
    }

    void zero_grads() {
        for (Param* p : items_)
            std::fill(p->grad.begin(), p->grad.end(), 0.0);
    }

    Param* find(const std::string& name) {
        for (Param* p : items_)
            if (p->name == name) return p;
        return nullptr;
    }

private:
    std::vector<Param*> items_;
};

/// Adam over a registry. Moment buffers are keyed by registry order, which
/// the checkpoint preserves.
class Adam {
public:
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double grad_clip = 0.0; // 0 disables clipping

    void attach(ParamRegistry& reg) {
        m_.clear();
        v_.clear();
        for (Param* p : reg.items()) {
            m_.emplace_back(p->size(), 0.0);
            v_.emplace_back(p->size(), 0.0);
        }
        t_ = 0;
    }

    void step(ParamRegistry& reg);

    int64_t t() const { return t_; }
    void set_t(int64_t t) { t_ = t; }
    std::vector<std::vector<double>>& m() { return m_; }
    std::vector<std::vector<double>>& v() { return v_; }

private:
    std::vector<std::vector<double>> m_, v_;
    int64_t t_ = 0;
};

/// Central finite differences against analytic gradients.
/// loss_and_grad must zero the grads, run forward+backward and return the
/// loss; it is re-evaluated (forward only matters) after each perturbation.
/// Returns the maximum relative error over every scalar parameter.
///
/// `activation_signature`, when provided, fingerprints the piecewise-linear
/// region of the last forward (ReLU on/off pattern). Coordinates whose
/// perturbation leaves that region are skipped: the difference quotient does
/// not approximate the derivative across a kink.
double max_relative_grad_error(std::vector<Param*> params,
                               const std::function<double()>& loss_and_grad,
                               double step = 1e-3,
                               const std::function<uint64_t()>& activation_signature = {});

} // namespace uci
