#pragma once

#include <functional>
#include <span>

#include "nilmtune/nn/tape.hpp"

namespace nilmtune::nn {

/// Builds a scalar loss on the given tape. Must be deterministic and must
/// not use dropout (evaluated repeatedly with perturbed parameters).
using LossBuilder = std::function<Var(Tape&)>;

/// Central-difference check of reverse-mode gradients. Returns the maximum
/// over all parameter entries of |analytic - numeric| /
/// max(1e-8, |analytic| + |numeric|). Parameters are restored afterwards.
double grad_check(std::span<Parameter* const> params, const LossBuilder& build_loss, double eps = 1e-5);

}  // namespace nilmtune::nn
