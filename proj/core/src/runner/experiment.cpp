#include "nilmtune/runner/experiment.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nilmtune/runner/report.hpp"
#include "nilmtune/runner/synthetic.hpp"
#include "nilmtune/runner/trial_log.hpp"

namespace nilmtune::runner {

using nlohmann::json;

void SplitAudit::record(Split s) {
    ++counts_[static_cast<std::size_t>(s)];
    if (s == Split::test && !final_phase_) ++early_test_;
}

const AlignedDataset& AuditedSplits::train() {
    audit_->record(SplitAudit::Split::train);
    return splits_.train;
}

const AlignedDataset& AuditedSplits::validation() {
    audit_->record(SplitAudit::Split::validation);
    return splits_.val;
}

const AlignedDataset& AuditedSplits::test() {
    audit_->record(SplitAudit::Split::test);
    return splits_.test;
}

AlignedDataset load_dataset(const ExperimentConfig& cfg) {
    std::optional<AlignedDataset> ds;
    if (cfg.synthetic) {
        ds = generate_synthetic(load_synthetic_spec(*cfg.synthetic));
        if (ds->period() != cfg.sample_period) {
            throw ConfigError("synthetic house period " + std::to_string(ds->period()) +
                              " s differs from sample_period " + std::to_string(cfg.sample_period) + " s");
        }
    } else {
        std::ifstream in(*cfg.dataset);
        if (!in) throw ConfigError("cannot open dataset " + cfg.dataset->string());
        auto channels = load_csv(in, cfg.sample_period);
        std::optional<PowerSeries> aggregate;
        std::vector<PowerSeries> appliances;
        for (auto& c : channels) {
            if (c.period() != cfg.sample_period) c = resample(c, cfg.sample_period);
            if (c.label() == cfg.aggregate_column) {
                aggregate = std::move(c);
            } else {
                appliances.push_back(std::move(c));
            }
        }
        if (!aggregate) throw ConfigError("dataset has no '" + cfg.aggregate_column + "' column");
        ds = align(*aggregate, appliances);
    }
    for (const auto& label : cfg.appliances) {
        if (!ds->has_appliance(label)) throw ConfigError("appliance '" + label + "' is not in the dataset");
    }
    return std::move(*ds);
}

SplitSpec resolve_split(const ExperimentConfig& cfg, const AlignedDataset& ds) {
    if (cfg.split) return *cfg.split;
    constexpr Seconds day = 86400;
    const SplitSpec s{ds.start_time(), ds.start_time() + 25 * day, ds.start_time() + 32 * day, ds.end_time()};
    if (s.val_end >= s.test_end) {
        throw ConfigError("dataset is too short for the default 25-day train / 7-day validation split");
    }
    return s;
}

FitScore fit_and_score(std::string_view family, const Hyperparameters& params, const TrainingBudget& budget,
                       std::uint64_t seed, const AlignedDataset& train, const AlignedDataset& validation,
                       const AlignedDataset* evaluate_on, const std::vector<std::string>& targets,
                       double threshold_watts) {
    FitScore out;
    out.model = make_disaggregator(family, params, budget, seed);
    out.model->fit(train, validation, targets);
    out.validation = evaluate(validation, out.model->predict(validation.aggregate()), threshold_watts);
    out.evaluation = evaluate_on ? evaluate(*evaluate_on, out.model->predict(evaluate_on->aggregate()), threshold_watts)
                                 : out.validation;
    return out;
}

namespace {

json report_json(const MetricReport& r) {
    json apps = json::array();
    for (const auto& a : r.appliances) apps.push_back({{"label", a.label}, {"mae", a.mae}, {"accuracy", a.accuracy}});
    return {{"appliances", apps},
            {"mean_mae", r.mean_mae},
            {"mean_accuracy", r.mean_accuracy},
            {"samples", r.n_samples},
            {"threshold_watts", r.threshold_watts}};
}

json params_json(const Hyperparameters& h) {
    json out = json::object();
    for (const auto& [k, v] : h.values()) {
        if (const auto* d = std::get_if<double>(&v)) {
            out[k] = *d;
        } else {
            out[k] = std::get<std::string>(v);
        }
    }
    return out;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
}

Hyperparameters without_family(const Hyperparameters& config) {
    Hyperparameters out;
    for (const auto& [k, v] : config.values()) {
        if (k != "family") out.set(k, v);
    }
    return out;
}

}  // namespace

SingleResult run_single(const ExperimentConfig& cfg) { return run_single(cfg, load_dataset(cfg)); }

SingleResult run_single(const ExperimentConfig& cfg, const AlignedDataset& dataset) {
    if (cfg.mode != RunMode::single) throw ConfigError("run_single needs mode = single");
    SingleResult result;
    AuditedSplits splits(split_by_date(dataset, resolve_split(cfg, dataset)), result.audit);
    const auto start = std::chrono::steady_clock::now();

    FitScore fs = fit_and_score(cfg.family, cfg.params, cfg.budget, cfg.seed, splits.train(), splits.validation(),
                                nullptr, cfg.appliances, cfg.on_threshold);
    result.validation = fs.validation;
    result.audit.begin_final_evaluation();
    const AlignedDataset& test = splits.test();
    result.test = evaluate(test, fs.model->predict(test.aggregate()), cfg.on_threshold);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    ensure_dir(cfg.output_dir);
    Hyperparameters effective = default_hyperparameters(cfg.family);
    for (const auto& [k, v] : cfg.params.values()) effective.set(k, v);
    const json j{{"family", cfg.family},
                 {"hyperparameters", params_json(effective)},
                 {"seed", cfg.seed},
                 {"validation", report_json(result.validation)},
                 {"test", report_json(result.test)},
                 {"wall_time_s", result.wall_seconds}};
    write_text(cfg.output_dir / "single_result.json", j.dump(2) + "\n");
    std::ostringstream model;
    fs.model->save(model);
    write_text(cfg.output_dir / "model.txt", model.str());
    return result;
}

AutomlResult run_automl(const ExperimentConfig& cfg) { return run_automl(cfg, load_dataset(cfg)); }

AutomlResult run_automl(const ExperimentConfig& cfg, const AlignedDataset& dataset) {
    if (cfg.mode != RunMode::automl) throw ConfigError("run_automl needs mode = automl");
    const hpo::SearchSpace space = cfg.search_space();
    AutomlResult result;
    AuditedSplits splits(split_by_date(dataset, resolve_split(cfg, dataset)), result.audit);
    ensure_dir(cfg.output_dir);

    {
        const AlignedDataset& train = splits.train();
        const AlignedDataset& val = splits.validation();
        const hpo::Objective objective = [&](const hpo::Configuration& config, std::uint64_t seed) {
            const std::string family = config.text("family", "");
            const FitScore fs = fit_and_score(family, without_family(config), cfg.budget, seed, train, val, nullptr,
                                              cfg.appliances, cfg.on_threshold);
            return hpo::Evaluation{fs.validation.mean_mae, {{"accuracy", fs.validation.mean_accuracy}}};
        };
        TrialLogWriter log(cfg.output_dir / "trials.jsonl");
        auto opt = hpo::run_optimization(space, objective, cfg.max_evals, cfg.seed, cfg.tpe, cfg.algorithm,
                                         [&](const hpo::Trial& t) { log.write(t); });
        result.history = std::move(opt.history);
        result.best = std::move(opt.best);
    }

    // final evaluation: refit the winner on train and score test once
    const std::string family = result.best.config.text("family", "");
    const Hyperparameters params = without_family(result.best.config);
    FitScore fs = fit_and_score(family, params, cfg.budget, result.best.seed, splits.train(), splits.validation(),
                                nullptr, cfg.appliances, cfg.on_threshold);
    result.audit.begin_final_evaluation();
    const AlignedDataset& test = splits.test();
    result.best_test = evaluate(test, fs.model->predict(test.aggregate()), cfg.on_threshold);

    const json j{{"id", result.best.id},
                 {"family", family},
                 {"hyperparameters", params_json(params)},
                 {"seed", result.best.seed},
                 {"validation_mae", result.best.loss},
                 {"refit_validation_mae", fs.validation.mean_mae},
                 {"test_mae", result.best_test.mean_mae},
                 {"test_accuracy", result.best_test.mean_accuracy},
                 {"test", report_json(result.best_test)},
                 {"test_accesses_before_final", result.audit.test_accesses_before_final()}};
    write_text(cfg.output_dir / "best_trial.json", j.dump(2) + "\n");
    std::ostringstream model;
    fs.model->save(model);
    write_text(cfg.output_dir / "best_model.txt", model.str());
    emit_report(result.history, cfg.output_dir / "report");
    return result;
}

}  // namespace nilmtune::runner
