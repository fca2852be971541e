#pragma once

#include <cstddef>
#include <random>
#include <string_view>

#include "nilmtune/nn/tape.hpp"

namespace nilmtune::nn {

enum class Activation { relu, sigmoid, tanh, linear };
enum class LossKind { mse, mae };

Activation parse_activation(std::string_view name);
LossKind parse_loss(std::string_view name);
const char* to_string(LossKind k);

/// [M, K] x [K, N] -> [M, N]
Var matmul(Var a, Var b);
/// Adds a [N] bias to every row of an [M, N] input.
Var add_bias(Var x, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var one_minus(Var a);
Var scale(Var a, double s);

Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var activate(Var a, Activation kind);

/// Inverted dropout: kept units are scaled by 1 / (1 - p).
Var dropout(Var a, double p, std::mt19937_64& rng);

/// Cross-correlation of x [B, C, L] with w [O, C, K] plus bias [O], with
/// `pad_left` / `pad_right` zeros around each channel.
Var conv1d(Var x, Var w, Var bias, std::size_t pad_left, std::size_t pad_right);

Var reshape(Var a, Shape shape);
/// x [B, T, F] -> [B, F] at time t.
Var time_step(Var x, std::size_t t);

Var sum(Var a);
/// Mean over all elements; the mae subgradient at zero residual is zero.
Var loss(LossKind kind, Var pred, const Tensor& target);

}  // namespace nilmtune::nn
