#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nilmtune/disaggregator.hpp"
#include "nilmtune/nn/layers.hpp"
#include "nilmtune/nn/optimizer.hpp"
#include "nilmtune/timeseries.hpp"

namespace nilmtune {

enum class NeuralFamily { fcnn, dae, rnn_gru, window_gru, lstm, seq2point, seq2seq };

NeuralFamily parse_neural_family(std::string_view name);
std::string to_string(NeuralFamily f);
bool is_neural_family(std::string_view name);

/// Everything needed to build and train one network.
///
/// `window` is the input length: the window size for the windowed families,
/// the sequence length for rnn_gru / lstm. `num_layers` sets the dense depth
/// of fcnn / dae and is capped at 2 stacked cells for rnn_gru / lstm.
struct NetworkSpec {
    NeuralFamily family = NeuralFamily::seq2point;
    std::size_t window = 50;
    std::size_t num_layers = 5;
    std::size_t hidden = 64;
    std::size_t conv_channels1 = 16;
    std::size_t conv_channels2 = 32;
    std::size_t conv_kernel = 5;
    double dropout = 0.1;
    nn::OptimizerKind optimizer = nn::OptimizerKind::adam;
    double learning_rate = 1e-3;
    nn::LossKind loss = nn::LossKind::mse;
    std::size_t epochs = 20;
    std::size_t batch_size = 64;
    /// Training windows drawn per epoch; 0 uses every window.
    std::size_t max_windows_per_epoch = 0;
    double clip_norm = 10.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// A network maps a batch of aggregate windows [B, window] to either one
/// value per window (at `anchor()`) or a full window [B, window].
class Network {
public:
    virtual ~Network() = default;

    virtual nn::Var forward(nn::Tape& tape, nn::Var input, nn::Mode mode, std::mt19937_64& rng) const = 0;
    virtual std::vector<nn::Parameter*> parameters() = 0;

    std::vector<const nn::Parameter*> parameters() const;
    std::size_t parameter_count() const;

    const NetworkSpec& spec() const noexcept { return spec_; }
    /// 1 for point outputs, `window` for sequence outputs.
    std::size_t output_width() const noexcept { return output_width_; }
    /// Position inside the input window that a point output estimates, or
    /// where sequence outputs are anchored.
    std::size_t anchor() const noexcept { return anchor_; }

protected:
    Network(NetworkSpec spec, std::size_t output_width, std::size_t anchor)
        : spec_(std::move(spec)), output_width_(output_width), anchor_(anchor) {}

private:
    NetworkSpec spec_;
    std::size_t output_width_;
    std::size_t anchor_;
};

/// Deterministic initialisation from spec.seed.
std::unique_ptr<Network> build_network(const NetworkSpec& spec);

struct TrainingHistory {
    std::vector<double> train_loss;  // normalised units
    std::vector<double> val_mae;     // watts
};

struct TrainedNetwork {
    std::unique_ptr<Network> network;
    std::string target;
    std::optional<Scaler> input_scaler;
    std::optional<Scaler> target_scaler;
    TrainingHistory history;
};

/// Fixed-epoch minibatch training on one target appliance. Scalers are
/// fitted on the training split only.
TrainedNetwork train(std::unique_ptr<Network> network, const AlignedDataset& train, const AlignedDataset& val,
                     const std::string& target);

/// Per-timestep estimate on the aggregate's grid, in watts, clamped at zero.
PowerSeries predict_series(const TrainedNetwork& model, const PowerSeries& aggregate);

/// Averages overlapping window outputs into one series. Cell k of row r
/// sits at position centers[r] - anchor + k; cells outside [0, length) are
/// ignored. Throws if any position is uncovered.
std::vector<double> overlap_average(std::span<const double> outputs, std::size_t width,
                                    std::span<const std::size_t> centers, std::size_t anchor, std::size_t length);

void save_network(std::ostream& out, const TrainedNetwork& model);

class NeuralDisaggregator final : public Disaggregator {
public:
    explicit NeuralDisaggregator(NetworkSpec spec);

    std::string family() const override { return to_string(spec_.family); }
    void fit(const AlignedDataset& train, const AlignedDataset& val,
             const std::vector<std::string>& targets) override;
    std::vector<PowerSeries> predict(const PowerSeries& aggregate) const override;
    void save(std::ostream& out) const override;

    const std::vector<TrainedNetwork>& models() const noexcept { return models_; }

private:
    NetworkSpec spec_;
    std::vector<TrainedNetwork> models_;
};

}  // namespace nilmtune
