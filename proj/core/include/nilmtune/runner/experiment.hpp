#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "nilmtune/disaggregator.hpp"
#include "nilmtune/hpo/tpe.hpp"
#include "nilmtune/metrics.hpp"
#include "nilmtune/runner/config.hpp"

namespace nilmtune::runner {

/// Counts split accesses; a test access before begin_final_evaluation() is
/// a leak.
class SplitAudit {
public:
    enum class Split { train, validation, test };

    void record(Split s);
    void begin_final_evaluation() noexcept { final_phase_ = true; }
    bool final_phase() const noexcept { return final_phase_; }

    std::size_t accesses(Split s) const noexcept { return counts_[static_cast<std::size_t>(s)]; }
    std::size_t test_accesses_before_final() const noexcept { return early_test_; }

private:
    std::size_t counts_[3] = {0, 0, 0};
    std::size_t early_test_ = 0;
    bool final_phase_ = false;
};

/// The three splits behind an audit. Only train() and validation() are
/// handed to model selection.
class AuditedSplits {
public:
    AuditedSplits(DatasetSplits splits, SplitAudit& audit) : splits_(std::move(splits)), audit_(&audit) {}

    const AlignedDataset& train();
    const AlignedDataset& validation();
    const AlignedDataset& test();

private:
    DatasetSplits splits_;
    SplitAudit* audit_;
};

/// Reads the CSV (resampled to the configured period and aligned) or
/// generates the synthetic house. Missing appliance labels are config
/// errors.
AlignedDataset load_dataset(const ExperimentConfig& cfg);

/// Explicit dates, or 25 train days, 7 validation days and the rest as test.
SplitSpec resolve_split(const ExperimentConfig& cfg, const AlignedDataset& ds);

struct FitScore {
    MetricReport validation;
    MetricReport evaluation;  // on `evaluate_on`, or a copy of `validation`
    std::unique_ptr<Disaggregator> model;
};

/// Fits one configuration on train and scores it on validation and on
/// `evaluate_on` when given.
FitScore fit_and_score(std::string_view family, const Hyperparameters& params, const TrainingBudget& budget,
                       std::uint64_t seed, const AlignedDataset& train, const AlignedDataset& validation,
                       const AlignedDataset* evaluate_on, const std::vector<std::string>& targets,
                       double threshold_watts);

struct SingleResult {
    MetricReport validation;
    MetricReport test;
    double wall_seconds = 0.0;
    SplitAudit audit;
};

/// Fits with the configured hyperparameters and seed, scores the test
/// split once, and writes single_result.json and model.txt.
SingleResult run_single(const ExperimentConfig& cfg);
SingleResult run_single(const ExperimentConfig& cfg, const AlignedDataset& dataset);

struct AutomlResult {
    hpo::TrialHistory history;
    hpo::Trial best;
    MetricReport best_test;
    SplitAudit audit;
};

/// Optimises validation MAE over the configured space, logging each trial
/// to trials.jsonl as it finishes. The best configuration is then refit
/// with its trial seed and scored once on test (best_trial.json), and the
/// report is emitted under report/.
AutomlResult run_automl(const ExperimentConfig& cfg);
AutomlResult run_automl(const ExperimentConfig& cfg, const AlignedDataset& dataset);

}  // namespace nilmtune::runner
