#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "nilmtune/hpo/tpe.hpp"

namespace nilmtune::runner {

/// One JSON object per line:
///   {"accuracy", "error", "family", "hyperparameters", "id", "seed",
///    "status", "test_mae", "validation_mae", "wall_time_s"}
/// Keys are sorted; a failed trial has validation_mae null. test_mae is
/// taken from aux["test_mae"] when present, else null.
std::string format_trial_record(const hpo::Trial& trial);

/// The same record without wall_time_s, for determinism comparisons.
std::string format_trial_record_without_time(const hpo::Trial& trial);

hpo::Trial parse_trial_record(const std::string& line);

/// Raised by replay_log. `history` holds every record before the bad line.
class TrialLogError : public std::runtime_error {
public:
    TrialLogError(std::size_t line, const std::string& what, hpo::TrialHistory history);
    std::size_t line() const noexcept { return line_; }
    const hpo::TrialHistory& history() const noexcept { return history_; }

private:
    std::size_t line_;
    hpo::TrialHistory history_;
};

hpo::TrialHistory replay_log(std::istream& in);
hpo::TrialHistory replay_log(const std::filesystem::path& file);

/// Append-only writer; each record is flushed as it is written.
class TrialLogWriter {
public:
    /// Truncates unless `append` is set.
    explicit TrialLogWriter(const std::filesystem::path& file, bool append = false);
    void write(const hpo::Trial& trial);

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

}  // namespace nilmtune::runner
