#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nilmtune/hpo/tpe.hpp"

namespace nilmtune::runner {

struct FamilyBest {
    std::string family;
    double mae = 0.0;
    double accuracy = 0.0;  // NaN when not recorded
    std::size_t trial_id = 0;
    std::size_t trials = 0;
};

/// Best ok trial per family, sorted by ascending MAE (family name on ties).
std::vector<FamilyBest> family_best(const hpo::TrialHistory& history);

/// Writes into `dir` (created if missing):
///   summary.md           per-family best-MAE table and accuracy-vs-MAE table
///   family_best.csv      family,best_mae,accuracy,trial_id,trials
///   trials.csv           id,family,status,mae,accuracy,best_so_far
///   family_best_mae.svg  bar chart of per-family best MAE
/// Contents depend only on the history (wall times are not written).
std::vector<std::filesystem::path> emit_report(const hpo::TrialHistory& history, const std::filesystem::path& dir);

}  // namespace nilmtune::runner
