#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "nilmtune/hpo/parzen.hpp"
#include "nilmtune/hpo/space.hpp"

namespace nilmtune::hpo {

enum class TrialStatus { ok, failed };

const char* to_string(TrialStatus s);
TrialStatus parse_trial_status(std::string_view s);

struct Trial {
    std::size_t id = 0;
    Configuration config;
    /// Validation MAE in watts; +inf for failed trials.
    double loss = 0.0;
    std::map<std::string, double> aux;
    TrialStatus status = TrialStatus::ok;
    std::uint64_t seed = 0;
    std::string error;
    double wall_seconds = 0.0;

    bool ok() const noexcept { return status == TrialStatus::ok; }
};

using TrialHistory = std::vector<Trial>;

struct TpeConfig {
    double gamma = 0.25;
    std::size_t n_startup = 10;
    std::size_t n_candidates = 24;
    ParzenConfig parzen{};

    void validate() const;
};

/// Ok trials sorted by (loss, id); the first max(1, ceil(gamma n)) are good.
std::pair<std::vector<const Trial*>, std::vector<const Trial*>> split_good_bad(const TrialHistory& history,
                                                                                double gamma);

/// Random sampling until n_startup ok trials exist, then a per-node
/// argmax of l(x) / g(x) over candidates drawn from l.
Configuration tpe_suggest(const SearchSpace& space, const TrialHistory& history, const TpeConfig& cfg,
                          std::mt19937_64& rng);

/// Minimum loss among ok trials, lowest id on ties.
const Trial& best_trial(const TrialHistory& history);

struct Evaluation {
    double loss = 0.0;
    std::map<std::string, double> aux;
};

/// Returns the loss for a configuration; throwing marks the trial failed.
using Objective = std::function<Evaluation(const Configuration&, std::uint64_t seed)>;

enum class Algorithm { tpe, random };

struct OptimizationResult {
    TrialHistory history;
    Trial best;
};

/// Exactly max_evals sequential trials. Trial i gets seed ^ i. The
/// suggestion stream is one mt19937_64 seeded with `seed`. `on_trial` sees
/// each trial as soon as it completes. Throws if every trial failed.
OptimizationResult run_optimization(const SearchSpace& space, const Objective& objective, std::size_t max_evals,
                                    std::uint64_t seed, const TpeConfig& cfg = {}, Algorithm algorithm = Algorithm::tpe,
                                    const std::function<void(const Trial&)>& on_trial = {});

}  // namespace nilmtune::hpo
