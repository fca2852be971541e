#include "nilmtune/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "nilmtune/metrics.hpp"
#include "nilmtune/nn/ops.hpp"

namespace nilmtune {

using nn::Mode;
using nn::Parameter;
using nn::Tape;
using nn::Tensor;
using nn::Var;

namespace {

constexpr std::string_view kFamilyNames[] = {"fcnn", "dae", "rnn_gru", "window_gru", "lstm", "seq2point", "seq2seq"};

}  // namespace

NeuralFamily parse_neural_family(std::string_view name) {
    for (std::size_t i = 0; i < std::size(kFamilyNames); ++i) {
        if (kFamilyNames[i] == name) return static_cast<NeuralFamily>(i);
    }
    throw std::invalid_argument("unknown neural family '" + std::string(name) + "'");
}

std::string to_string(NeuralFamily f) { return std::string(kFamilyNames[static_cast<std::size_t>(f)]); }

bool is_neural_family(std::string_view name) {
    return std::find(std::begin(kFamilyNames), std::end(kFamilyNames), name) != std::end(kFamilyNames);
}

void NetworkSpec::validate() const {
    if (window < 1) throw std::invalid_argument("NetworkSpec: window must be >= 1");
    if (epochs < 1) throw std::invalid_argument("NetworkSpec: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("NetworkSpec: batch_size must be >= 1");
    if (num_layers < 1) throw std::invalid_argument("NetworkSpec: num_layers must be >= 1");
    if (hidden < 1) throw std::invalid_argument("NetworkSpec: hidden width must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("NetworkSpec: dropout must lie in [0, 1)");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("NetworkSpec: learning rate must be > 0");
    if (family == NeuralFamily::dae && hidden < 4) throw std::invalid_argument("NetworkSpec: dae needs hidden >= 4");
    if ((family == NeuralFamily::seq2point || family == NeuralFamily::seq2seq) &&
        (conv_channels1 < 1 || conv_channels2 < 1 || conv_kernel < 1)) {
        throw std::invalid_argument("NetworkSpec: bad convolution sizes");
    }
}

std::vector<const Parameter*> Network::parameters() const {
    auto params = const_cast<Network*>(this)->parameters();
    return {params.begin(), params.end()};
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const Parameter* p : parameters()) n += p->value.size();
    return n;
}

namespace {

template <class Layer>
void append_params(std::vector<Parameter*>& out, Layer& layer) {
    for (Parameter* p : layer.parameters()) out.push_back(p);
}

/// Dense stack with relu + dropout after each hidden layer and a linear
/// output layer. Used by fcnn (point output) and dae (window output).
class DenseNet final : public Network {
public:
    DenseNet(const NetworkSpec& spec, std::vector<std::size_t> widths, std::size_t out, std::size_t anchor,
             std::mt19937_64& rng)
        : Network(spec, out, anchor), dropout_(spec.dropout) {
        std::size_t in = spec.window;
        for (std::size_t w : widths) {
            hidden_.emplace_back(in, w, rng);
            in = w;
        }
        head_.emplace_back(in, out, rng);
    }

    Var forward(Tape& tape, Var x, Mode mode, std::mt19937_64& rng) const override {
        for (const auto& layer : hidden_) x = dropout_.forward(nn::relu(layer.forward(tape, x)), mode, rng);
        return head_.front().forward(tape, x);
    }

    std::vector<Parameter*> parameters() override {
        std::vector<Parameter*> out;
        for (auto& l : hidden_) append_params(out, l);
        append_params(out, head_.front());
        return out;
    }

private:
    std::vector<nn::Dense> hidden_;
    std::vector<nn::Dense> head_;
    nn::Dropout dropout_;
};

/// Stacked GRU or LSTM cells over the window, dense head on the last
/// hidden state.
template <class Cell>
class RecurrentNet final : public Network {
public:
    RecurrentNet(const NetworkSpec& spec, std::size_t layers, std::mt19937_64& rng)
        : Network(spec, 1, spec.window - 1), dropout_(spec.dropout) {
        std::size_t in = 1;
        for (std::size_t i = 0; i < layers; ++i) {
            cells_.emplace_back(in, spec.hidden, rng);
            in = spec.hidden;
        }
        head_.emplace_back(spec.hidden, 1, rng);
    }

    Var forward(Tape& tape, Var x, Mode mode, std::mt19937_64& rng) const override {
        const std::size_t B = x.value().dim(0);
        const std::size_t T = x.value().dim(1);
        const Var seq = nn::reshape(x, {B, T, 1});
        const std::size_t H = spec().hidden;
        std::vector<Var> h(cells_.size()), c(cells_.size());
        for (std::size_t l = 0; l < cells_.size(); ++l) {
            h[l] = tape.constant(Tensor({B, H}));
            c[l] = tape.constant(Tensor({B, H}));
        }
        for (std::size_t t = 0; t < T; ++t) {
            Var in = nn::time_step(seq, t);
            for (std::size_t l = 0; l < cells_.size(); ++l) {
                if (l > 0) in = dropout_.forward(in, mode, rng);
                if constexpr (std::is_same_v<Cell, nn::LstmCell>) {
                    std::tie(h[l], c[l]) = cells_[l].forward(tape, in, h[l], c[l]);
                } else {
                    h[l] = cells_[l].forward(tape, in, h[l]);
                }
                in = h[l];
            }
        }
        return head_.front().forward(tape, dropout_.forward(h.back(), mode, rng));
    }

    std::vector<Parameter*> parameters() override {
        std::vector<Parameter*> out;
        for (auto& cell : cells_) append_params(out, cell);
        append_params(out, head_.front());
        return out;
    }

private:
    std::vector<Cell> cells_;
    std::vector<nn::Dense> head_;
    nn::Dropout dropout_;
};

/// Two same-padded conv layers, then a dense hidden layer and a head that
/// emits either the window midpoint (seq2point) or the whole window.
class ConvNet final : public Network {
public:
    ConvNet(const NetworkSpec& spec, std::size_t out, std::mt19937_64& rng)
        : Network(spec, out, spec.window / 2), dropout_(spec.dropout) {
        convs_.emplace_back(1, spec.conv_channels1, spec.conv_kernel, true, rng);
        convs_.emplace_back(spec.conv_channels1, spec.conv_channels2, spec.conv_kernel, true, rng);
        dense_.emplace_back(spec.conv_channels2 * spec.window, spec.hidden, rng);
        dense_.emplace_back(spec.hidden, out, rng);
    }

    Var forward(Tape& tape, Var x, Mode mode, std::mt19937_64& rng) const override {
        const std::size_t B = x.value().dim(0);
        const std::size_t W = x.value().dim(1);
        Var y = nn::reshape(x, {B, 1, W});
        for (const auto& conv : convs_) y = nn::relu(conv.forward(tape, y));
        y = nn::reshape(y, {B, convs_.back().out_channels() * W});
        y = dropout_.forward(nn::relu(dense_[0].forward(tape, y)), mode, rng);
        return dense_[1].forward(tape, y);
    }

    std::vector<Parameter*> parameters() override {
        std::vector<Parameter*> out;
        for (auto& c : convs_) append_params(out, c);
        for (auto& d : dense_) append_params(out, d);
        return out;
    }

private:
    std::vector<nn::Conv1d> convs_;
    std::vector<nn::Dense> dense_;
    nn::Dropout dropout_;
};

std::vector<std::size_t> autoencoder_widths(std::size_t layers, std::size_t width) {
    // halve towards a width/4 bottleneck in the middle, mirror outwards
    std::vector<std::size_t> out(layers);
    const double centre = (static_cast<double>(layers) - 1.0) / 2.0;
    for (std::size_t i = 0; i < layers; ++i) {
        const auto d = static_cast<int>(std::floor(std::abs(static_cast<double>(i) - centre)));
        const int halvings = std::max(0, 2 - d);
        out[i] = std::max<std::size_t>(1, width >> halvings);
    }
    return out;
}

}  // namespace

std::unique_ptr<Network> build_network(const NetworkSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    switch (spec.family) {
        case NeuralFamily::fcnn:
            return std::make_unique<DenseNet>(spec, std::vector<std::size_t>(spec.num_layers, spec.hidden), 1,
                                              spec.window / 2, rng);
        case NeuralFamily::dae:
            return std::make_unique<DenseNet>(spec, autoencoder_widths(spec.num_layers, spec.hidden), spec.window,
                                              spec.window / 2, rng);
        case NeuralFamily::rnn_gru:
            return std::make_unique<RecurrentNet<nn::GruCell>>(spec, std::min<std::size_t>(spec.num_layers, 2), rng);
        case NeuralFamily::lstm:
            return std::make_unique<RecurrentNet<nn::LstmCell>>(spec, std::min<std::size_t>(spec.num_layers, 2), rng);
        case NeuralFamily::window_gru:
            return std::make_unique<RecurrentNet<nn::GruCell>>(spec, 1, rng);
        case NeuralFamily::seq2point:
            return std::make_unique<ConvNet>(spec, 1, rng);
        case NeuralFamily::seq2seq:
            return std::make_unique<ConvNet>(spec, spec.window, rng);
    }
    throw std::invalid_argument("build_network: unknown family");
}

// ---------------------------------------------------------------------------

std::vector<double> overlap_average(std::span<const double> outputs, std::size_t width,
                                    std::span<const std::size_t> centers, std::size_t anchor, std::size_t length) {
    if (width == 0 || outputs.size() != centers.size() * width) {
        throw std::invalid_argument("overlap_average: outputs do not match centers x width");
    }
    std::vector<double> sum(length, 0.0);
    std::vector<std::size_t> count(length, 0);
    for (std::size_t r = 0; r < centers.size(); ++r) {
        const auto origin = static_cast<std::ptrdiff_t>(centers[r]) - static_cast<std::ptrdiff_t>(anchor);
        for (std::size_t k = 0; k < width; ++k) {
            const auto pos = origin + static_cast<std::ptrdiff_t>(k);
            if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(length)) continue;
            sum[static_cast<std::size_t>(pos)] += outputs[r * width + k];
            ++count[static_cast<std::size_t>(pos)];
        }
    }
    for (std::size_t t = 0; t < length; ++t) {
        if (count[t] == 0) throw std::invalid_argument("overlap_average: index " + std::to_string(t) + " is uncovered");
        sum[t] /= static_cast<double>(count[t]);
    }
    return sum;
}

namespace {

constexpr std::size_t kPredictBatch = 256;

/// Normalised outputs for every stride-1 window of `normalised` input.
std::vector<double> infer(const Network& net, std::span<const double> normalised) {
    const NetworkSpec& spec = net.spec();
    const Windows w = make_windows_anchored(normalised, spec.window, 1, Padding::zero, net.anchor());
    const std::size_t width = net.output_width();
    std::vector<double> outputs(w.rows * width);
    std::mt19937_64 unused(0);
    for (std::size_t first = 0; first < w.rows; first += kPredictBatch) {
        const std::size_t B = std::min(kPredictBatch, w.rows - first);
        Tensor in({B, spec.window},
                  std::vector<double>(w.data.begin() + static_cast<std::ptrdiff_t>(first * spec.window),
                                      w.data.begin() + static_cast<std::ptrdiff_t>((first + B) * spec.window)));
        Tape tape(false);
        const Var y = net.forward(tape, tape.constant(std::move(in)), Mode::eval, unused);
        std::copy(y.value().values().begin(), y.value().values().end(),
                  outputs.begin() + static_cast<std::ptrdiff_t>(first * width));
    }
    if (width == 1) return outputs;
    return overlap_average(outputs, width, w.centers, net.anchor(), normalised.size());
}

PowerSeries to_watts(const std::string& label, const PowerSeries& grid, std::span<const double> normalised,
                     const Scaler& scaler) {
    std::vector<double> watts(normalised.size());
    for (std::size_t i = 0; i < watts.size(); ++i) watts[i] = std::max(0.0, scaler.invert(normalised[i]));
    return PowerSeries(label, grid.start_time(), grid.period(), std::move(watts));
}

}  // namespace

PowerSeries predict_series(const TrainedNetwork& model, const PowerSeries& aggregate) {
    if (!model.network) throw std::logic_error("predict_series: no network");
    if (!model.input_scaler || !model.target_scaler) {
        throw std::invalid_argument("predict_series: missing standardization parameters");
    }
    if (aggregate.has_gaps()) throw std::invalid_argument("predict_series: aggregate contains gaps");
    const auto normalised = standardize(aggregate.values(), *model.input_scaler);
    const auto out = infer(*model.network, normalised);
    return to_watts(model.target, aggregate, out, *model.target_scaler);
}

TrainedNetwork train(std::unique_ptr<Network> network, const AlignedDataset& train, const AlignedDataset& val,
                     const std::string& target) {
    if (!network) throw std::invalid_argument("train: no network");
    const NetworkSpec& spec = network->spec();
    spec.validate();
    if (train.size() == 0) throw std::invalid_argument("train: empty training split");

    TrainedNetwork model;
    model.target = target;
    model.input_scaler = fit_scaler(train.aggregate().values());
    model.target_scaler = fit_scaler(train.appliance(target).values());

    const auto x = standardize(train.aggregate().values(), *model.input_scaler);
    const auto y = standardize(train.appliance(target).values(), *model.target_scaler);
    const std::size_t W = spec.window;
    const std::size_t out_w = network->output_width();
    const Windows xw = make_windows_anchored(x, W, 1, Padding::zero, network->anchor());
    std::vector<double> targets;
    if (out_w == 1) {
        targets.resize(xw.rows);
        for (std::size_t r = 0; r < xw.rows; ++r) targets[r] = y[xw.centers[r]];
    } else {
        targets = make_windows_anchored(y, W, 1, Padding::zero, network->anchor()).data;
    }

    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    nn::OptimizerState opt;
    opt.kind = spec.optimizer;
    opt.learning_rate = spec.learning_rate;
    const auto params = network->parameters();

    std::vector<std::size_t> order(xw.rows);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t per_epoch =
        spec.max_windows_per_epoch == 0 ? xw.rows : std::min(spec.max_windows_per_epoch, xw.rows);

    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t first = 0; first < per_epoch; first += spec.batch_size) {
            const std::size_t B = std::min(spec.batch_size, per_epoch - first);
            Tensor in({B, W});
            Tensor tgt({B, out_w});
            for (std::size_t b = 0; b < B; ++b) {
                const std::size_t r = order[first + b];
                std::copy_n(xw.data.begin() + static_cast<std::ptrdiff_t>(r * W), W, in.data() + b * W);
                std::copy_n(targets.begin() + static_cast<std::ptrdiff_t>(r * out_w), out_w, tgt.data() + b * out_w);
            }
            Tape tape;
            nn::Gradients grads;
            double loss_value = 0.0;
            try {
                const Var pred = network->forward(tape, tape.constant(std::move(in)), Mode::train, rng);
                const Var l = nn::loss(spec.loss, pred, tgt);
                loss_value = l.value().item();
                grads = tape.backward(l);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("train(" + to_string(spec.family) + "): non-finite loss at epoch " +
                                         std::to_string(epoch + 1) + ", batch " + std::to_string(batches + 1) +
                                         ": " + e.what());
            }
            std::vector<Tensor> g;
            g.reserve(params.size());
            for (const Parameter* p : params) g.push_back(grads.of(*p));
            nn::clip_global_norm(g, spec.clip_norm);
            nn::optimizer_step(opt, params, g);
            loss_sum += loss_value;
            ++batches;
        }
        model.history.train_loss.push_back(loss_sum / static_cast<double>(batches));

        model.network = std::move(network);
        const PowerSeries pred = predict_series(model, val.aggregate());
        model.history.val_mae.push_back(mae(val.appliance(target).values(), pred.values()));
        network = std::move(model.network);
    }
    model.network = std::move(network);
    return model;
}

void save_network(std::ostream& out, const TrainedNetwork& model) {
    const NetworkSpec& s = model.network->spec();
    char buf[64];
    const auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "nilmtune-network v1\n"
        << "family " << to_string(s.family) << "\ntarget " << model.target << "\nwindow " << s.window
        << "\nnum_layers " << s.num_layers << "\nhidden " << s.hidden << "\nconv " << s.conv_channels1 << ' '
        << s.conv_channels2 << ' ' << s.conv_kernel << "\ndropout " << num(s.dropout) << "\noptimizer "
        << nn::to_string(s.optimizer) << "\nlearning_rate " << num(s.learning_rate) << "\nloss "
        << nn::to_string(s.loss) << "\nseed " << s.seed << '\n';
    if (model.input_scaler) out << "input_scaler " << num(model.input_scaler->mean) << ' ' << num(model.input_scaler->std) << '\n';
    if (model.target_scaler) out << "target_scaler " << num(model.target_scaler->mean) << ' ' << num(model.target_scaler->std) << '\n';
    const auto params = model.network->parameters();
    out << "params " << params.size() << '\n';
    for (const Parameter* p : params) {
        out << p->name << ' ' << p->value.rank();
        for (std::size_t d : p->value.shape()) out << ' ' << d;
        out << '\n';
        for (std::size_t i = 0; i < p->value.size(); ++i) out << (i ? " " : "") << num(p->value[i]);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------

NeuralDisaggregator::NeuralDisaggregator(NetworkSpec spec) : spec_(spec) { spec_.validate(); }

void NeuralDisaggregator::fit(const AlignedDataset& train_split, const AlignedDataset& val,
                              const std::vector<std::string>& targets) {
    models_.clear();
    for (std::size_t i = 0; i < targets.size(); ++i) {
        NetworkSpec s = spec_;
        s.seed = spec_.seed + i;
        models_.push_back(train(build_network(s), train_split, val, targets[i]));
    }
}

std::vector<PowerSeries> NeuralDisaggregator::predict(const PowerSeries& aggregate) const {
    if (models_.empty()) throw std::logic_error(family() + ": predict before fit");
    std::vector<PowerSeries> out;
    for (const auto& m : models_) out.push_back(predict_series(m, aggregate));
    return out;
}

void NeuralDisaggregator::save(std::ostream& out) const {
    for (const auto& m : models_) save_network(out, m);
}

}  // namespace nilmtune
