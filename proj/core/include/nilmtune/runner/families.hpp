#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "nilmtune/disaggregator.hpp"
#include "nilmtune/hyperparameters.hpp"

namespace nilmtune::runner {

/// Settings that size training but are not searched.
struct TrainingBudget {
    std::size_t epochs = 20;
    std::size_t batch_size = 64;
    std::size_t max_windows_per_epoch = 0;
    std::size_t hidden_width = 64;
    std::size_t tree_lag = 10;
};

bool is_family(std::string_view family);

/// The configuration a family runs with when nothing is specified.
Hyperparameters default_hyperparameters(std::string_view family);

/// Builds an unfitted model. Unknown families, unknown hyperparameter names
/// and out-of-range values throw std::invalid_argument. Missing
/// hyperparameters take their defaults.
std::unique_ptr<Disaggregator> make_disaggregator(std::string_view family, const Hyperparameters& params,
                                                  const TrainingBudget& budget, std::uint64_t seed);

}  // namespace nilmtune::runner
