#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nilmtune/hpo/tpe.hpp"
#include "nilmtune/hyperparameters.hpp"
#include "nilmtune/runner/families.hpp"
#include "nilmtune/timeseries.hpp"

namespace nilmtune::runner {

/// Bad or inconsistent user input (exit code 1 at the CLI).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class RunMode { single, automl };

struct SpaceOverride {
    std::string family;
    hpo::ParamSpec spec;
};

struct ExperimentConfig {
    std::optional<std::filesystem::path> dataset;    // CSV file
    std::optional<std::filesystem::path> synthetic;  // synthetic-house spec file
    std::string aggregate_column = "aggregate";
    std::vector<std::string> appliances;
    Seconds sample_period = 60;
    /// Explicit split dates; when absent the first 25 days train, the next
    /// 7 validate and the rest test.
    std::optional<SplitSpec> split;
    RunMode mode = RunMode::single;

    std::string family;
    Hyperparameters params;

    std::vector<std::string> space_families;  // empty: all
    std::vector<SpaceOverride> space_overrides;
    std::size_t max_evals = 30;
    hpo::TpeConfig tpe;
    hpo::Algorithm algorithm = hpo::Algorithm::tpe;

    TrainingBudget budget;
    double on_threshold = 10.0;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "nilmtune-out";

    hpo::SearchSpace search_space() const;
    void validate() const;
};

/// Flat `key = value` format; unknown keys are rejected. Relative paths
/// resolve against `base_dir`.
ExperimentConfig parse_config(std::istream& in, const std::string& source, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& file);

}  // namespace nilmtune::runner
