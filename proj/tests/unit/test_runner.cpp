#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nilmtune/runner/config.hpp"
#include "nilmtune/runner/experiment.hpp"
#include "nilmtune/runner/families.hpp"
#include "nilmtune/runner/report.hpp"
#include "nilmtune/runner/synthetic.hpp"
#include "nilmtune/runner/trial_log.hpp"
#include "oracles.hpp"

using namespace nilmtune;
using namespace nilmtune::runner;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("nilmtune-test-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ExperimentConfig parse(const std::string& text, const fs::path& base = fs::temp_directory_path()) {
    std::istringstream in(text);
    return parse_config(in, "test.cfg", base);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// three appliances whose on-power sums are all distinct, no noise
SyntheticHouseSpec clean_house(std::size_t days = 34) {
    SyntheticHouseSpec s;
    s.appliances = {{"kettle", 1500, 0.8, 0.98}, {"fridge", 90, 0.9, 0.9}, {"washer", 400, 0.95, 0.99}};
    s.noise_std = 0.0;
    s.start = parse_utc_date("2014-03-13");
    s.samples = days * 24 * 60 / 10;
    s.period = 600;
    s.seed = 4;
    return s;
}

hpo::Trial trial(std::size_t id, std::string family, double loss, double acc) {
    hpo::Trial t;
    t.id = id;
    t.config.set("family", family);
    t.loss = loss;
    t.aux["accuracy"] = acc;
    t.seed = 100 + id;
    t.wall_seconds = 0.25 * static_cast<double>(id);
    return t;
}

}  // namespace

TEST(Config, MinimalSingleGetsDefaults) {
    const auto cfg = parse("dataset = house.csv\nappliances = kettle\nmode = single\nfamily = co\n", "/data");
    EXPECT_EQ(cfg.sample_period, 60);
    EXPECT_EQ(cfg.budget.epochs, 20u);
    EXPECT_EQ(cfg.max_evals, 30u);
    EXPECT_EQ(*cfg.dataset, fs::path("/data/house.csv"));
    EXPECT_EQ(cfg.appliances, (std::vector<std::string>{"kettle"}));
    EXPECT_EQ(cfg.mode, RunMode::single);
}

TEST(Config, Errors) {
    const std::string base = "dataset = h.csv\nappliances = kettle\nmode = automl\n";
    EXPECT_THROW(parse(base + "max_evals = 0\n"), ConfigError);
    try {
        parse(base + "max_eval = 3\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("'max_eval'"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("unknown key"), std::string::npos);
    }
    EXPECT_THROW(parse("dataset = h.csv\nappliances = kettle\nmode = single\nfamily = svm\n"), ConfigError);
    EXPECT_THROW(parse("dataset = h.csv\nappliances = kettle\nmode = single\nfamily = co\nparams.depth = 3\n"),
                 ConfigError);
    EXPECT_THROW(parse(base + "train_start = 2014-01-01\n"), ConfigError);
    EXPECT_THROW(parse("appliances = kettle\nmode = single\nfamily = co\n"), ConfigError);
    EXPECT_THROW(parse(base + "space.rf.learning_rate = 0.1..0.2\n"), ConfigError);
    EXPECT_THROW(parse(base + "epochs = -2\n"), ConfigError);
}

TEST(Config, AutomlSpaceKeys) {
    const auto cfg = parse(
        "synthetic = house.txt\nappliances = a, b\nmode = automl\nspace.families = co, rf\n"
        "space.rf.n_estimators = 10..40/10\ntpe.n_startup = 5\nalgorithm = random\nseed = 9\n");
    EXPECT_EQ(cfg.appliances, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(cfg.space_families, (std::vector<std::string>{"co", "rf"}));
    EXPECT_EQ(cfg.tpe.n_startup, 5u);
    EXPECT_EQ(cfg.algorithm, hpo::Algorithm::random);
    EXPECT_EQ(cfg.search_space().params[0].options.size(), 2u);
}

TEST(Synthetic, NoiseFreeSingleApplianceIsTheAggregate) {
    SyntheticHouseSpec s;
    s.appliances = {{"heater", 800, 0.9, 0.9}};
    s.samples = 5000;
    s.seed = 1;
    const AlignedDataset ds = generate_synthetic(s);
    EXPECT_EQ(ds.aggregate().values().size(), 5000u);
    for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(ds.aggregate()[i], ds.appliance("heater")[i]);
}

TEST(Synthetic, StationaryOnFraction) {
    SyntheticHouseSpec s;
    s.appliances = {{"x", 100, 0.9, 0.9}};
    s.samples = 100000;
    s.seed = 21;
    const AlignedDataset ds = generate_synthetic(s);
    double on = 0;
    for (double v : ds.appliance("x").values()) on += v > 0;
    EXPECT_NEAR(on / 100000.0, 0.5, 0.03);
    // asymmetric chain: P(on) = (1 - stay_off) / ((1 - stay_on) + (1 - stay_off)) = 0.05 / 0.25
    s.appliances = {{"y", 100, 0.8, 0.95}};
    const AlignedDataset d2 = generate_synthetic(s);
    on = 0;
    for (double v : d2.appliance("y").values()) on += v > 0;
    EXPECT_NEAR(on / 100000.0, 0.2, 0.03);
}

TEST(Synthetic, DeterministicAndValidated) {
    const auto a = generate_synthetic(clean_house(2));
    const auto b = generate_synthetic(clean_house(2));
    EXPECT_EQ(a.aggregate(), b.aggregate());
    SyntheticHouseSpec bad = clean_house(2);
    bad.appliances[0].stay_on = 1.0;
    EXPECT_THROW(generate_synthetic(bad), std::invalid_argument);
    bad = clean_house(2);
    bad.noise_std = -1;
    EXPECT_THROW(generate_synthetic(bad), std::invalid_argument);
}

TEST(Synthetic, SpecFileParsing) {
    std::istringstream in(
        "start = 2014-03-13\nduration_days = 2\nperiod = 60\nnoise_std = 5\nseed = 3\n"
        "appliance.kettle.on_power = 2000\nappliance.kettle.stay_on = 0.8\nappliance.fridge.on_power = 90\n");
    const auto s = parse_synthetic_spec(in, "spec");
    EXPECT_EQ(s.samples, 2u * 24 * 60);
    ASSERT_EQ(s.appliances.size(), 2u);
    std::istringstream bad("duration_days = 2\nappliance.kettle.watts = 3\n");
    EXPECT_THROW(parse_synthetic_spec(bad, "spec"), std::invalid_argument);
}

TEST(Families, DefaultsAndUnknownHyperparameters) {
    for (const auto& f : hpo::all_families()) {
        EXPECT_TRUE(is_family(f));
        TrainingBudget b;
        b.epochs = 1;
        EXPECT_NO_THROW(make_disaggregator(f, default_hyperparameters(f), b, 0)) << f;
    }
    Hyperparameters h;
    h.set("depth", 3.0);
    EXPECT_THROW(make_disaggregator("dt", h, {}, 0), std::invalid_argument);
    EXPECT_THROW(make_disaggregator("svm", {}, {}, 0), std::invalid_argument);
    Hyperparameters k;
    k.set("k", 0.0);
    EXPECT_THROW(make_disaggregator("co", k, {}, 0), std::invalid_argument);
}

TEST(RunSingle, StateModelsExactOnCleanHouse) {
    const AlignedDataset ds = generate_synthetic(clean_house());
    for (const std::string family : {"co", "fhmm"}) {
        ExperimentConfig cfg;
        cfg.synthetic = "unused";
        cfg.appliances = {"kettle", "fridge", "washer"};
        cfg.sample_period = 600;
        cfg.family = family;
        cfg.on_threshold = 10.0;
        cfg.output_dir = scratch("single-" + family);
        const SingleResult r = run_single(cfg, ds);
        EXPECT_NEAR(r.test.mean_mae, 0.0, 1e-9) << family;
        EXPECT_EQ(r.test.mean_accuracy, 1.0) << family;
        EXPECT_EQ(r.audit.test_accesses_before_final(), 0u);
        EXPECT_TRUE(fs::exists(cfg.output_dir / "single_result.json"));
        EXPECT_TRUE(fs::exists(cfg.output_dir / "model.txt"));
    }
}

TEST(RunSingle, OracleAgreesWithCoOnCleanHouse) {
    const AlignedDataset ds = generate_synthetic(clean_house(3));
    const std::vector<std::vector<double>> levels{{0, 1500}, {0, 90}, {0, 400}};
    const auto agg = ds.aggregate().values();
    const auto want = oracle::co(std::vector<double>(agg.begin(), agg.end()), levels);
    for (std::size_t t = 0; t < ds.size(); ++t) {
        EXPECT_EQ(want[0][t], ds.appliance("kettle")[t]);
        EXPECT_EQ(want[2][t], ds.appliance("washer")[t]);
    }
}

TEST(Audit, CountsEarlyTestAccess) {
    SplitAudit audit;
    const AlignedDataset ds = generate_synthetic(clean_house());
    AuditedSplits splits(split_by_date(ds, SplitSpec{ds.start_time(), ds.start_time() + 25 * 86400,
                                                      ds.start_time() + 32 * 86400, ds.end_time()}),
                         audit);
    splits.train();
    splits.validation();
    EXPECT_EQ(audit.test_accesses_before_final(), 0u);
    splits.test();
    EXPECT_EQ(audit.test_accesses_before_final(), 1u);
    audit.begin_final_evaluation();
    splits.test();
    EXPECT_EQ(audit.test_accesses_before_final(), 1u);
    EXPECT_EQ(audit.accesses(SplitAudit::Split::test), 2u);
}

TEST(ResolveSplit, DefaultProportions) {
    const AlignedDataset ds = generate_synthetic(clean_house());
    ExperimentConfig cfg;
    const SplitSpec s = resolve_split(cfg, ds);
    EXPECT_EQ(s.train_end - s.train_start, 25 * 86400);
    EXPECT_EQ(s.val_end - s.train_end, 7 * 86400);
    EXPECT_EQ(s.test_end, ds.end_time());
}

TEST(TrialLog, RoundTripThirtyRecords) {
    const fs::path dir = scratch("log");
    hpo::TrialHistory h;
    {
        TrialLogWriter w(dir / "trials.jsonl");
        for (std::size_t i = 0; i < 30; ++i) {
            hpo::Trial t = trial(i, i % 2 ? "seq2point" : "rf", 10.0 + i / 7.0, 0.9);
            if (i % 2) {
                t.config.set("learning_rate", 0.001);
                t.config.set("optimizer", std::string("nadam"));
            }
            if (i == 5) {
                t.status = hpo::TrialStatus::failed;
                t.loss = std::numeric_limits<double>::infinity();
                t.error = "non-finite loss";
                t.aux.clear();
            }
            w.write(t);
            h.push_back(t);
        }
    }
    const auto back = replay_log(dir / "trials.jsonl");
    ASSERT_EQ(back.size(), 30u);
    for (std::size_t i = 0; i < 30; ++i) {
        EXPECT_EQ(back[i].id, i);
        EXPECT_EQ(back[i].config.values(), h[i].config.values());
        EXPECT_EQ(back[i].loss, h[i].loss);
        EXPECT_EQ(back[i].status, h[i].status);
        EXPECT_EQ(back[i].seed, h[i].seed);
        EXPECT_EQ(back[i].error, h[i].error);
        EXPECT_EQ(back[i].wall_seconds, h[i].wall_seconds);
    }
    EXPECT_EQ(hpo::best_trial(back).id, hpo::best_trial(h).id);
    const auto line = nlohmann::json::parse(format_trial_record(h[5]));
    EXPECT_TRUE(line["validation_mae"].is_null());
    EXPECT_EQ(line["status"], "failed");
    EXPECT_EQ(format_trial_record_without_time(h[3]).find("wall_time_s"), std::string::npos);
}

TEST(TrialLog, TruncatedLineAndEmptyFile) {
    std::stringstream s;
    s << format_trial_record(trial(0, "co", 3, 1)) << "\n" << format_trial_record(trial(1, "co", 2, 1)) << "\n";
    const std::string full = format_trial_record(trial(2, "co", 1, 1));
    s << full.substr(0, full.size() / 2);
    try {
        replay_log(s);
        FAIL();
    } catch (const TrialLogError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.history().size(), 2u);
    }
    std::istringstream empty("");
    EXPECT_TRUE(replay_log(empty).empty());
}

TEST(Report, OrderingAndDeterminism) {
    const hpo::TrialHistory h{trial(0, "co", 224, 0.5), trial(1, "seq2point", 8.31, 0.9),
                              trial(2, "seq2point", 9.2, 0.8)};
    const auto best = family_best(h);
    ASSERT_EQ(best.size(), 2u);
    EXPECT_EQ(best[0].family, "seq2point");
    EXPECT_EQ(best[0].mae, 8.31);
    EXPECT_EQ(best[0].trials, 2u);
    EXPECT_EQ(best[1].family, "co");

    const fs::path a = scratch("report-a"), b = scratch("report-b");
    const auto files = emit_report(h, a);
    emit_report(h, b);
    EXPECT_EQ(files.size(), 4u);
    for (const auto& f : files) EXPECT_EQ(slurp(f), slurp(b / f.filename())) << f;
    const std::string md = slurp(a / "summary.md");
    EXPECT_LT(md.find("seq2point"), md.find("| co"));
    EXPECT_EQ(slurp(a / "family_best_mae.svg").find("<script"), std::string::npos);
    EXPECT_THROW(emit_report({}, a), std::invalid_argument);
}

TEST(Report, SingleTrialOneRow) {
    const fs::path d = scratch("report-one");
    emit_report({trial(0, "dt", 12.5, 0.7)}, d);
    const std::string csv = slurp(d / "family_best.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Automl, StateFamiliesExactAndBudgetOne) {
    const AlignedDataset ds = generate_synthetic(clean_house());
    ExperimentConfig cfg;
    cfg.synthetic = "unused";
    cfg.appliances = {"kettle", "fridge", "washer"};
    cfg.sample_period = 600;
    cfg.mode = RunMode::automl;
    cfg.space_families = {"co", "fhmm"};
    cfg.max_evals = 4;
    cfg.seed = 3;
    cfg.output_dir = scratch("automl-state");
    const AutomlResult r = run_automl(cfg, ds);
    EXPECT_EQ(r.history.size(), 4u);
    EXPECT_NEAR(r.best.loss, 0.0, 1e-9);
    EXPECT_EQ(r.audit.test_accesses_before_final(), 0u);
    for (const char* f : {"trials.jsonl", "best_trial.json", "best_model.txt", "report/summary.md"}) {
        EXPECT_TRUE(fs::exists(cfg.output_dir / f)) << f;
    }
    const auto replayed = replay_log(cfg.output_dir / "trials.jsonl");
    EXPECT_EQ(hpo::best_trial(replayed).id, r.best.id);
    EXPECT_EQ(hpo::best_trial(replayed).config.values(), r.best.config.values());

    cfg.max_evals = 1;
    cfg.output_dir = scratch("automl-one");
    const AutomlResult one = run_automl(cfg, ds);
    ASSERT_EQ(one.history.size(), 1u);
    EXPECT_EQ(one.best.id, 0u);
}

TEST(Automl, CollapsedSpaceEqualsRunSingle) {
    SyntheticHouseSpec spec = clean_house();
    spec.noise_std = 15.0;
    const AlignedDataset ds = generate_synthetic(spec);
    ExperimentConfig cfg;
    cfg.synthetic = "unused";
    cfg.appliances = {"kettle", "washer"};
    cfg.sample_period = 600;
    cfg.seed = 12;
    cfg.mode = RunMode::automl;
    cfg.space_families = {"rf"};
    cfg.space_overrides = {{"rf", hpo::parse_param_spec("criterion", "friedman_mse")},
                           {"rf", hpo::parse_param_spec("min_samples_split", "12")},
                           {"rf", hpo::parse_param_spec("n_estimators", "5")}};
    cfg.max_evals = 1;
    cfg.output_dir = scratch("collapsed-automl");
    const AutomlResult a = run_automl(cfg, ds);

    ExperimentConfig single = cfg;
    single.mode = RunMode::single;
    single.family = "rf";
    single.params.set("criterion", std::string("friedman_mse"));
    single.params.set("min_samples_split", 12.0);
    single.params.set("n_estimators", 5.0);
    single.output_dir = scratch("collapsed-single");
    const SingleResult s = run_single(single, ds);
    EXPECT_EQ(a.history[0].loss, s.validation.mean_mae);
    EXPECT_EQ(a.best_test.mean_mae, s.test.mean_mae);
    EXPECT_EQ(a.best_test.mean_accuracy, s.test.mean_accuracy);
}

TEST(Automl, RerunIsByteIdenticalWithoutWallTime) {
    const AlignedDataset ds = generate_synthetic(clean_house());
    ExperimentConfig cfg;
    cfg.synthetic = "unused";
    cfg.appliances = {"kettle", "fridge"};
    cfg.sample_period = 600;
    cfg.mode = RunMode::automl;
    cfg.space_families = {"co", "dt"};
    cfg.max_evals = 6;
    cfg.tpe.n_startup = 3;
    std::string logs[2];
    for (int run = 0; run < 2; ++run) {
        cfg.output_dir = scratch("rerun-" + std::to_string(run));
        run_automl(cfg, ds);
        for (const auto& t : replay_log(cfg.output_dir / "trials.jsonl")) logs[run] += format_trial_record_without_time(t) + "\n";
    }
    EXPECT_EQ(logs[0], logs[1]);
}
