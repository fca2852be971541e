#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "nilmtune/nn/tape.hpp"

namespace nilmtune::nn {

enum class OptimizerKind { adam, nadam };

OptimizerKind parse_optimizer(std::string_view name);
const char* to_string(OptimizerKind k);

/// Adam / Nadam moments. `m` and `v` are created on the first step to
/// mirror the parameter shapes.
struct OptimizerState {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
};

/// One update of every parameter from its gradient (same order).
void optimizer_step(OptimizerState& state, std::span<Parameter* const> params, std::span<const Tensor> grads);

/// Scales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_global_norm(std::span<Tensor> grads, double max_norm);

}  // namespace nilmtune::nn
