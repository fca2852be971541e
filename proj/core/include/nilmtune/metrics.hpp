#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nilmtune/timeseries.hpp"

namespace nilmtune {

inline constexpr double kDefaultOnThreshold = 10.0;

/// Mean absolute error in watts.
double mae(std::span<const double> truth, std::span<const double> pred);

/// State i is on iff value i > threshold (strict).
std::vector<bool> on_off_states(std::span<const double> values, double threshold);

/// (TP + TN) / (P + N) over binary on/off states.
double classification_accuracy(const std::vector<bool>& truth, const std::vector<bool>& pred);

struct ApplianceScore {
    std::string label;
    double mae = 0.0;
    double accuracy = 0.0;
};

struct MetricReport {
    std::vector<ApplianceScore> appliances;
    double mean_mae = 0.0;
    double mean_accuracy = 0.0;
    std::size_t n_samples = 0;
    double threshold_watts = kDefaultOnThreshold;
};

/// Scores predictions against the matching appliance channels of `truth`.
/// Predictions are matched to truth channels by label.
MetricReport evaluate(const AlignedDataset& truth, std::span<const PowerSeries> predictions,
                      double threshold_watts = kDefaultOnThreshold);

}  // namespace nilmtune
