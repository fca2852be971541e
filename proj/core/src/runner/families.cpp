#include "nilmtune/runner/families.hpp"

#include <algorithm>
#include <stdexcept>

#include "nilmtune/classic.hpp"
#include "nilmtune/hpo/space.hpp"
#include "nilmtune/neural.hpp"
#include "nilmtune/trees.hpp"

namespace nilmtune::runner {

bool is_family(std::string_view family) {
    const auto& all = hpo::all_families();
    return std::find(all.begin(), all.end(), family) != all.end();
}

Hyperparameters default_hyperparameters(std::string_view family) {
    Hyperparameters h;
    if (family == "co" || family == "fhmm") {
        h.set("k", 2.0);
    } else if (family == "dt" || family == "rf") {
        h.set("criterion", std::string("squared_error"));
        h.set("min_samples_split", 10.0);
        if (family == "rf") h.set("n_estimators", 10.0);
    } else if (is_neural_family(family)) {
        h.set("optimizer", std::string("adam"));
        h.set("learning_rate", 1e-3);
        h.set("loss", std::string("mse"));
        h.set("dropout", 0.1);
        if (family == "fcnn" || family == "dae") h.set("num_layers", 5.0);
        if (family == "rnn_gru" || family == "lstm") h.set("sequence_length", 20.0);
        if (family == "window_gru" || family == "seq2point" || family == "seq2seq") h.set("window_size", 50.0);
    } else {
        throw std::invalid_argument("unknown model family '" + std::string(family) + "'");
    }
    return h;
}

namespace {

std::size_t positive(const Hyperparameters& h, std::string_view name, std::int64_t fallback, std::int64_t min) {
    const std::int64_t v = h.integer(name, fallback);
    if (v < min) {
        throw std::invalid_argument("hyperparameter '" + std::string(name) + "' must be >= " + std::to_string(min));
    }
    return static_cast<std::size_t>(v);
}

}  // namespace

std::unique_ptr<Disaggregator> make_disaggregator(std::string_view family, const Hyperparameters& params,
                                                  const TrainingBudget& budget, std::uint64_t seed) {
    Hyperparameters h = default_hyperparameters(family);
    for (const auto& [name, value] : params.values()) {
        if (name == "family") continue;
        if (!h.contains(name)) {
            throw std::invalid_argument("family '" + std::string(family) + "' has no hyperparameter '" + name + "'");
        }
        h.set(name, value);
    }

    if (family == "co" || family == "fhmm") {
        const auto method = family == "co" ? StateDisaggregator::Method::co : StateDisaggregator::Method::fhmm;
        return std::make_unique<StateDisaggregator>(method, positive(h, "k", 2, 1), seed);
    }
    if (family == "dt" || family == "rf") {
        ForestParams fp;
        fp.tree.criterion = parse_criterion(h.text("criterion", "squared_error"));
        fp.tree.min_samples_split = positive(h, "min_samples_split", 10, 2);
        fp.n_estimators = positive(h, "n_estimators", 10, 1);
        if (budget.tree_lag < 1) throw std::invalid_argument("tree lag must be >= 1");
        return std::make_unique<TreeDisaggregator>(family == "rf", fp, budget.tree_lag, seed);
    }

    NetworkSpec spec;
    spec.family = parse_neural_family(family);
    spec.optimizer = nn::parse_optimizer(h.text("optimizer", "adam"));
    spec.learning_rate = h.number("learning_rate", 1e-3);
    spec.loss = nn::parse_loss(h.text("loss", "mse"));
    spec.dropout = h.number("dropout", 0.1);
    spec.num_layers = positive(h, "num_layers", 2, 1);
    if (h.contains("sequence_length")) spec.window = positive(h, "sequence_length", 20, 1);
    if (h.contains("window_size")) spec.window = positive(h, "window_size", 50, 1);
    spec.hidden = budget.hidden_width;
    spec.epochs = budget.epochs;
    spec.batch_size = budget.batch_size;
    spec.max_windows_per_epoch = budget.max_windows_per_epoch;
    spec.seed = seed;
    return std::make_unique<NeuralDisaggregator>(spec);
}

}  // namespace nilmtune::runner
