// nilmtune: ingest, synthesize, run, tune and report NILM experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "nilmtune/runner/config.hpp"
#include "nilmtune/runner/experiment.hpp"
#include "nilmtune/runner/report.hpp"
#include "nilmtune/runner/synthetic.hpp"
#include "nilmtune/runner/trial_log.hpp"
#include "nilmtune/timeseries.hpp"

namespace fs = std::filesystem;
using namespace nilmtune;
using namespace nilmtune::runner;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

void print_report(const char* title, const MetricReport& r) {
    std::printf("%s: mean MAE %.4f W, mean accuracy %.4f over %zu samples\n", title, r.mean_mae, r.mean_accuracy,
                r.n_samples);
    for (const auto& a : r.appliances) std::printf("  %-16s MAE %10.4f W  accuracy %.4f\n", a.label.c_str(), a.mae, a.accuracy);
}

void ingest(const fs::path& csv, Seconds period, const std::string& aggregate_label, const fs::path& out_dir) {
    std::ifstream in(csv);
    if (!in) throw std::runtime_error("cannot open " + csv.string());
    auto channels = load_csv(in, period);
    std::optional<PowerSeries> aggregate;
    std::vector<PowerSeries> appliances;
    std::size_t gaps = 0;
    for (auto& c : channels) {
        gaps += c.gap_count();
        if (c.period() != period) c = resample(c, period);
        if (c.label() == aggregate_label) {
            aggregate = std::move(c);
        } else {
            appliances.push_back(std::move(c));
        }
    }
    if (!aggregate) throw ConfigError("no '" + aggregate_label + "' column in " + csv.string());
    const AlignedDataset ds = align(*aggregate, appliances);

    fs::create_directories(out_dir);
    std::ofstream data(out_dir / "dataset.csv", std::ios::binary);
    write_csv(data, ds);
    std::ofstream manifest(out_dir / "manifest.txt", std::ios::binary);
    manifest << "source = " << csv.string() << "\nperiod = " << period << "\nstart = " << format_utc_date(ds.start_time())
             << "\nend = " << format_utc_date(ds.end_time()) << "\nrows = " << ds.size() << "\nsource_gaps = " << gaps
             << "\nappliances = ";
    const auto labels = ds.appliance_labels();
    for (std::size_t i = 0; i < labels.size(); ++i) manifest << (i ? ", " : "") << labels[i];
    manifest << '\n';
    if (!data || !manifest) throw std::runtime_error("failed writing into " + out_dir.string());
    std::printf("ingested %zu rows x %zu appliances at %llds -> %s\n", ds.size(), labels.size(),
                static_cast<long long>(period), (out_dir / "dataset.csv").c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Automated model selection and tuning for energy disaggregation"};
    app.require_subcommand(1);

    fs::path ingest_csv, ingest_out;
    Seconds ingest_period = 60;
    std::string ingest_aggregate = "aggregate";
    auto* ingest_cmd = app.add_subcommand("ingest", "Resample and align a CSV export onto one grid");
    ingest_cmd->add_option("csv", ingest_csv, "timestamp,<channel>... CSV")->required();
    ingest_cmd->add_option("--period", ingest_period, "target period in seconds")->check(CLI::PositiveNumber);
    ingest_cmd->add_option("--aggregate", ingest_aggregate, "aggregate column name");
    ingest_cmd->add_option("--out", ingest_out, "output directory")->required();

    fs::path synth_spec, synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic house as CSV");
    synth_cmd->add_option("spec", synth_spec, "synthetic-house spec file")->required();
    synth_cmd->add_option("--out", synth_out, "output CSV")->required();

    fs::path run_config;
    auto* run_cmd = app.add_subcommand("run", "Fit one configured model and score it on the test split");
    run_cmd->add_option("config", run_config, "experiment config")->required();

    fs::path automl_config;
    auto* automl_cmd = app.add_subcommand("automl", "Search models and hyperparameters with TPE");
    automl_cmd->add_option("config", automl_config, "experiment config")->required();

    fs::path report_log, report_out;
    auto* report_cmd = app.add_subcommand("report", "Tables, CSVs and an SVG chart from a trial log");
    report_cmd->add_option("trial-log", report_log, "JSON-lines trial log")->required();
    report_cmd->add_option("--out", report_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*ingest_cmd) {
            ingest(ingest_csv, ingest_period, ingest_aggregate, ingest_out);
        } else if (*synth_cmd) {
            const AlignedDataset ds = generate_synthetic(load_synthetic_spec(synth_spec));
            if (synth_out.has_parent_path()) fs::create_directories(synth_out.parent_path());
            std::ofstream out(synth_out, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write " + synth_out.string());
            write_csv(out, ds);
            std::printf("wrote %zu rows x %zu appliances -> %s\n", ds.size(), ds.appliances().size(), synth_out.c_str());
        } else if (*run_cmd) {
            const ExperimentConfig cfg = load_config(run_config);
            if (cfg.mode != RunMode::single) throw ConfigError("'run' needs mode = single");
            const SingleResult r = run_single(cfg);
            std::printf("family %s, seed %llu, %.1f s\n", cfg.family.c_str(),
                        static_cast<unsigned long long>(cfg.seed), r.wall_seconds);
            print_report("validation", r.validation);
            print_report("test", r.test);
            std::printf("results in %s\n", cfg.output_dir.c_str());
        } else if (*automl_cmd) {
            const ExperimentConfig cfg = load_config(automl_config);
            if (cfg.mode != RunMode::automl) throw ConfigError("'automl' needs mode = automl");
            const AutomlResult r = run_automl(cfg);
            std::size_t failed = 0;
            for (const auto& t : r.history) failed += !t.ok();
            std::printf("%zu trials (%zu failed); best trial %zu: %s, validation MAE %.4f W\n", r.history.size(),
                        failed, r.best.id, r.best.config.text("family", "?").c_str(), r.best.loss);
            for (const auto& [k, v] : r.best.config.values()) {
                if (k != "family") std::printf("  %s = %s\n", k.c_str(), to_string(v).c_str());
            }
            print_report("test (best configuration, refit)", r.best_test);
            std::printf("trial log %s\n", (cfg.output_dir / "trials.jsonl").c_str());
        } else if (*report_cmd) {
            const auto history = replay_log(report_log);
            for (const auto& f : emit_report(history, report_out)) std::printf("wrote %s\n", f.c_str());
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntimeError;
    }
    return kOk;
}
