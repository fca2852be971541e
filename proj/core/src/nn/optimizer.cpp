#include "nilmtune/nn/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nilmtune::nn {

OptimizerKind parse_optimizer(std::string_view name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "nadam") return OptimizerKind::nadam;
    throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

const char* to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "nadam"; }

void optimizer_step(OptimizerState& state, std::span<Parameter* const> params, std::span<const Tensor> grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("optimizer_step: params/grads count mismatch");
    if (state.m.empty()) {
        for (const Parameter* p : params) {
            state.m.emplace_back(p->value.shape());
            state.v.emplace_back(p->value.shape());
        }
    }
    if (state.m.size() != params.size()) throw std::invalid_argument("optimizer_step: state does not match params");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->value.shape() != grads[i].shape() || state.m[i].shape() != grads[i].shape()) {
            throw std::invalid_argument("optimizer_step: shape mismatch for '" + params[i]->name + "'");
        }
    }

    ++state.step;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto w = params[i]->value.values();
        auto g = grads[i].values();
        auto m = state.m[i].values();
        auto v = state.v[i].values();
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            double m_hat = m[j] / bias1;
            if (state.kind == OptimizerKind::nadam) m_hat = b1 * m_hat + (1.0 - b1) * g[j] / bias1;
            const double v_hat = v[j] / bias2;
            w[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

double clip_global_norm(std::span<Tensor> grads, double max_norm) {
    double sq = 0.0;
    for (const Tensor& g : grads) {
        for (double x : g.values()) sq += x * x;
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double s = max_norm / norm;
        for (Tensor& g : grads) {
            for (double& x : g.values()) x *= s;
        }
    }
    return norm;
}

}  // namespace nilmtune::nn
