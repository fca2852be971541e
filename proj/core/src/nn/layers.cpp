#include "nilmtune/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace nilmtune::nn {

namespace {

Parameter uniform_param(std::string name, Shape shape, double bound, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : t.values()) v = u(rng);
    return Parameter{std::move(name), std::move(t)};
}

Parameter zeros(std::string name, Shape shape) { return Parameter{std::move(name), Tensor(std::move(shape))}; }

// x W + h U + b for one recurrent gate
Var gate(Tape& tape, Var x, Var h, const Parameter& w, const Parameter& u, const Parameter& b) {
    return add_bias(add(matmul(x, tape.parameter(w)), matmul(h, tape.parameter(u))), tape.parameter(b));
}

}  // namespace

Dense::Dense(std::size_t in, std::size_t out, std::mt19937_64& rng)
    : weight_(uniform_param("weight", {in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng)),
      bias_(zeros("bias", {out})) {
    if (in == 0 || out == 0) throw std::invalid_argument("Dense: zero-sized layer");
}

Var Dense::forward(Tape& tape, Var x) const {
    if (x.value().rank() != 2 || x.value().dim(1) != in()) {
        throw std::invalid_argument("Dense: expected [B, " + std::to_string(in()) + "] input, got " +
                                    shape_string(x.value().shape()));
    }
    return add_bias(matmul(x, tape.parameter(weight_)), tape.parameter(bias_));
}

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, bool same,
               std::mt19937_64& rng)
    : weight_(uniform_param("weight", {out_channels, in_channels, kernel},
                            1.0 / std::sqrt(static_cast<double>(in_channels * kernel)), rng)),
      bias_(zeros("bias", {out_channels})),
      same_(same) {
    if (in_channels == 0 || out_channels == 0 || kernel == 0) throw std::invalid_argument("Conv1d: zero size");
}

std::size_t Conv1d::output_length(std::size_t input_length) const {
    const std::size_t k = weight_.value.dim(2);
    if (same_) return input_length;
    if (input_length < k) throw std::invalid_argument("Conv1d: input shorter than kernel");
    return input_length - k + 1;
}

Var Conv1d::forward(Tape& tape, Var x) const {
    const std::size_t k = weight_.value.dim(2);
    const std::size_t left = same_ ? (k - 1) / 2 : 0;
    const std::size_t right = same_ ? k - 1 - left : 0;
    return conv1d(x, tape.parameter(weight_), tape.parameter(bias_), left, right);
}

GruCell::GruCell(std::size_t in, std::size_t hidden, std::mt19937_64& rng) : hidden_(hidden) {
    if (in == 0 || hidden == 0) throw std::invalid_argument("GruCell: zero size");
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    wz_ = uniform_param("wz", {in, hidden}, bound, rng);
    uz_ = uniform_param("uz", {hidden, hidden}, bound, rng);
    bz_ = zeros("bz", {hidden});
    wr_ = uniform_param("wr", {in, hidden}, bound, rng);
    ur_ = uniform_param("ur", {hidden, hidden}, bound, rng);
    br_ = zeros("br", {hidden});
    wn_ = uniform_param("wn", {in, hidden}, bound, rng);
    un_ = uniform_param("un", {hidden, hidden}, bound, rng);
    bn_ = zeros("bn", {hidden});
}

std::vector<Parameter*> GruCell::parameters() { return {&wz_, &uz_, &bz_, &wr_, &ur_, &br_, &wn_, &un_, &bn_}; }

Var GruCell::forward(Tape& tape, Var x, Var h) const {
    const Var z = sigmoid(gate(tape, x, h, wz_, uz_, bz_));
    const Var r = sigmoid(gate(tape, x, h, wr_, ur_, br_));
    const Var n = tanh(gate(tape, x, mul(r, h), wn_, un_, bn_));
    return add(mul(one_minus(z), n), mul(z, h));
}

LstmCell::LstmCell(std::size_t in, std::size_t hidden, std::mt19937_64& rng) : hidden_(hidden) {
    if (in == 0 || hidden == 0) throw std::invalid_argument("LstmCell: zero size");
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    wi_ = uniform_param("wi", {in, hidden}, bound, rng);
    ui_ = uniform_param("ui", {hidden, hidden}, bound, rng);
    bi_ = zeros("bi", {hidden});
    wf_ = uniform_param("wf", {in, hidden}, bound, rng);
    uf_ = uniform_param("uf", {hidden, hidden}, bound, rng);
    bf_ = zeros("bf", {hidden});
    wg_ = uniform_param("wg", {in, hidden}, bound, rng);
    ug_ = uniform_param("ug", {hidden, hidden}, bound, rng);
    bg_ = zeros("bg", {hidden});
    wo_ = uniform_param("wo", {in, hidden}, bound, rng);
    uo_ = uniform_param("uo", {hidden, hidden}, bound, rng);
    bo_ = zeros("bo", {hidden});
}

std::vector<Parameter*> LstmCell::parameters() {
    return {&wi_, &ui_, &bi_, &wf_, &uf_, &bf_, &wg_, &ug_, &bg_, &wo_, &uo_, &bo_};
}

std::pair<Var, Var> LstmCell::forward(Tape& tape, Var x, Var h, Var c) const {
    const Var i = sigmoid(gate(tape, x, h, wi_, ui_, bi_));
    const Var f = sigmoid(gate(tape, x, h, wf_, uf_, bf_));
    const Var g = tanh(gate(tape, x, h, wg_, ug_, bg_));
    const Var o = sigmoid(gate(tape, x, h, wo_, uo_, bo_));
    const Var c_next = add(mul(f, c), mul(i, g));
    return {mul(o, tanh(c_next)), c_next};
}

Dropout::Dropout(double p) : p_(p) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("Dropout: p must lie in [0, 1)");
}

Var Dropout::forward(Var x, Mode mode, std::mt19937_64& rng) const {
    if (mode == Mode::eval || p_ == 0.0) return x;
    return dropout(x, p_, rng);
}

}  // namespace nilmtune::nn
