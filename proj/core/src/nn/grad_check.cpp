#include "nilmtune/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace nilmtune::nn {

double grad_check(std::span<Parameter* const> params, const LossBuilder& build_loss, double eps) {
    std::vector<Tensor> analytic;
    {
        Tape tape;
        const Var loss = build_loss(tape);
        const Gradients grads = tape.backward(loss);
        for (const Parameter* p : params) analytic.push_back(grads.of(*p));
    }
    const auto eval = [&] {
        Tape tape(false);
        return build_loss(tape).value().item();
    };

    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto w = params[i]->value.values();
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double saved = w[j];
            w[j] = saved + eps;
            const double up = eval();
            w[j] = saved - eps;
            const double down = eval();
            w[j] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[i][j];
            const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace nilmtune::nn
