#pragma once

#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include "nilmtune/nn/ops.hpp"
#include "nilmtune/nn/tape.hpp"

namespace nilmtune::nn {

enum class Mode { train, eval };

/// y = x W + b, x [B, in] -> [B, out]. Weights start uniform in
/// +-1/sqrt(in), biases at zero.
class Dense {
public:
    Dense(std::size_t in, std::size_t out, std::mt19937_64& rng);

    Var forward(Tape& tape, Var x) const;
    std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }
    std::size_t in() const noexcept { return weight_.value.dim(0); }
    std::size_t out() const noexcept { return weight_.value.dim(1); }

    Parameter& weight() noexcept { return weight_; }
    Parameter& bias() noexcept { return bias_; }

private:
    Parameter weight_;
    Parameter bias_;
};

/// x [B, in_channels, L] -> [B, out_channels, L'] where L' = L with
/// `same` padding and L - kernel + 1 otherwise.
class Conv1d {
public:
    Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, bool same,
           std::mt19937_64& rng);

    Var forward(Tape& tape, Var x) const;
    std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }
    std::size_t out_channels() const noexcept { return weight_.value.dim(0); }
    std::size_t output_length(std::size_t input_length) const;

    Parameter& weight() noexcept { return weight_; }
    Parameter& bias() noexcept { return bias_; }

private:
    Parameter weight_;
    Parameter bias_;
    bool same_;
};

/// One GRU timestep:
///   z = s(x Wz + h Uz + bz), r = s(x Wr + h Ur + br)
///   n = tanh(x Wn + (r * h) Un + bn), h' = (1 - z) * n + z * h
class GruCell {
public:
    GruCell(std::size_t in, std::size_t hidden, std::mt19937_64& rng);

    Var forward(Tape& tape, Var x, Var h) const;
    std::vector<Parameter*> parameters();
    std::size_t hidden() const noexcept { return hidden_; }

private:
    std::size_t hidden_;
    Parameter wz_, uz_, bz_, wr_, ur_, br_, wn_, un_, bn_;
};

/// One LSTM timestep with input, forget, cell and output gates. Returns
/// (h', c').
class LstmCell {
public:
    LstmCell(std::size_t in, std::size_t hidden, std::mt19937_64& rng);

    std::pair<Var, Var> forward(Tape& tape, Var x, Var h, Var c) const;
    std::vector<Parameter*> parameters();
    std::size_t hidden() const noexcept { return hidden_; }

private:
    std::size_t hidden_;
    Parameter wi_, ui_, bi_, wf_, uf_, bf_, wg_, ug_, bg_, wo_, uo_, bo_;
};

/// Inverted dropout in train mode; identity in eval mode.
class Dropout {
public:
    explicit Dropout(double p);

    Var forward(Var x, Mode mode, std::mt19937_64& rng) const;
    double p() const noexcept { return p_; }

private:
    double p_;
};

}  // namespace nilmtune::nn
