// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//   acceptance --workdir DIR [--only N[,N...]]
// Criterion 7 reads NILMTUNE_UKDALE_CSV (and optionally
// NILMTUNE_UKDALE_APPLIANCE, default "kettle").

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gradient_fixtures.hpp"
#include "hpo_benchmark.hpp"
#include "nilmtune/classic.hpp"
#include "nilmtune/metrics.hpp"
#include "nilmtune/runner/experiment.hpp"
#include "nilmtune/runner/synthetic.hpp"
#include "oracles.hpp"

using namespace nilmtune;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

PowerSeries series(std::vector<double> v) { return PowerSeries("aggregate", 0, 60, std::move(v)); }

ApplianceStateModel levels_only(std::string label, std::vector<double> levels) {
    ApplianceStateModel m;
    m.label = std::move(label);
    m.levels = std::move(levels);
    return m;
}

// every split audit seen by any end-to-end run, for criterion 9
std::vector<std::pair<std::string, std::size_t>> g_audits;

void note_audit(const std::string& what, const runner::SplitAudit& audit) {
    g_audits.emplace_back(what, audit.test_accesses_before_final());
}

Outcome co_exactness() {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> n_app(1, 4), n_state(2, 3), step(1, 60);
    std::uniform_real_distribution<double> agg(0, 2500);
    std::size_t mismatches = 0, instances = 0;
    double worst_seconds = 0.0;
    for (int rep = 0; rep < 40; ++rep) {
        std::vector<ApplianceStateModel> models;
        std::vector<std::vector<double>> levels;
        const int A = rep < 4 ? 4 : n_app(rng);
        for (int a = 0; a < A; ++a) {
            std::vector<double> l{0.0};
            const int k = rep < 4 ? 3 : n_state(rng);
            for (int s = 1; s < k; ++s) l.push_back(l.back() + 10.0 * step(rng));
            levels.push_back(l);
            models.push_back(levels_only("a" + std::to_string(a), l));
        }
        std::vector<double> y(10000);
        for (double& v : y) v = std::round(agg(rng) / 10.0) * 10.0;
        const auto t0 = Clock::now();
        const auto got = co_disaggregate(series(y), models);
        worst_seconds = std::max(worst_seconds, seconds_since(t0));
        const auto want = oracle::co(y, levels);
        for (int a = 0; a < A; ++a) {
            for (std::size_t t = 0; t < y.size(); ++t) mismatches += got[a][t] != want[a][t];
        }
        ++instances;
    }
    return {mismatches == 0 && worst_seconds < 1.0,
            std::to_string(instances) + " instances at T=10^4, " + std::to_string(mismatches) +
                " mismatching timesteps, slowest " + fmt(worst_seconds, 3) + " s"};
}

Outcome fhmm_exactness() {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> n_state(2, 3), length(2, 8), coin(0, 1);
    std::uniform_real_distribution<double> u(0, 1200);
    double worst = 0.0;
    std::size_t fixtures = 0;
    for (int rep = 0; rep < 60; ++rep) {
        std::vector<ApplianceStateModel> models;
        std::size_t joint = 1;
        const int A = coin(rng) + 1;
        for (int a = 0; a < A; ++a) {
            const auto k = static_cast<std::size_t>(n_state(rng));
            models.push_back(oracle::random_hmm("a" + std::to_string(a), k, rng));
            joint *= k;
        }
        // keep the enumeration to a few million paths
        std::size_t T = static_cast<std::size_t>(length(rng));
        while (std::pow(static_cast<double>(joint), static_cast<double>(T)) > 3e6) --T;
        std::vector<double> y(T);
        for (double& v : y) v = u(rng);
        const FhmmDecoding d = fhmm_decode(series(y), models);
        std::vector<std::size_t> radices;
        for (const auto& m : models) radices.push_back(m.levels.size());
        const JointStateIndex idx(radices);
        std::vector<std::vector<std::size_t>> path;
        for (std::size_t s : d.path) path.push_back(idx.unflat(s));
        const double brute = oracle::fhmm_brute_force_max(y, models);
        worst = std::max({worst, std::abs(d.log_probability - brute),
                          std::abs(oracle::fhmm_log_probability(y, models, path) - brute)});
        ++fixtures;
    }
    return {worst <= 1e-9 && fixtures >= 50,
            std::to_string(fixtures) + " fixtures, max |log p - brute force| = " + fmt(worst, 3)};
}

Outcome gradient_correctness() {
    double worst = 0.0;
    std::string where;
    std::size_t checks = 0;
    const auto track = [&](double e, const std::string& what) {
        ++checks;
        if (e > worst) {
            worst = e;
            where = what;
        }
    };
    for (const auto& kind : fixtures::layer_kinds()) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto [lib, ref] = fixtures::layer_gradient_error(kind, seed);
            track(std::max(lib, ref), kind + " seed " + std::to_string(seed));
        }
    }
    for (auto family : fixtures::all_neural_families()) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto [lib, ref] = fixtures::family_gradient_error(family, seed);
            track(std::max(lib, ref), to_string(family) + " seed " + std::to_string(seed));
        }
    }
    return {worst < 1e-4, std::to_string(checks) + " checks, worst relative error " + fmt(worst, 3) + " (" + where + ")"};
}

Outcome metric_fidelity() {
    const std::vector<double> truth{0, 100, 100};
    const std::vector<bool> on{true, true, false, false, true}, pred{true, false, false, true, true};
    const double m1 = mae(truth, std::vector<double>{0, 90, 110});
    const double m2 = mae(truth, std::vector<double>{0, 0, 0});
    const double acc = classification_accuracy(on, pred);
    const bool ok = m1 == 20.0 / 3.0 && m2 == 200.0 / 3.0 && mae(truth, truth) == 0.0 && acc == 0.6 &&
                    classification_accuracy(on, on) == 1.0;
    return {ok, "mae " + fmt(m1, 17) + ", " + fmt(m2, 17) + "; accuracy " + fmt(acc, 17)};
}

Outcome tpe_vs_random() {
    const double tpe = bench::median_best(hpo::Algorithm::tpe);
    const double rnd = bench::median_best(hpo::Algorithm::random);
    std::size_t identical = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto a = bench::run(hpo::Algorithm::tpe, seed, 30);
        const auto b = bench::run(hpo::Algorithm::random, seed, 30);
        bool same = a.history.size() == b.history.size();
        for (std::size_t i = 0; same && i < a.history.size(); ++i) {
            same = a.history[i].config.values() == b.history[i].config.values() && a.history[i].loss == b.history[i].loss;
        }
        identical += same;
    }
    return {tpe <= rnd && identical == 20, "median best: tpe " + fmt(tpe) + ", random " + fmt(rnd) +
                                               "; n_startup=30 identical to random on " + std::to_string(identical) +
                                               "/20 seeds"};
}

runner::SyntheticHouseSpec acceptance_house() {
    runner::SyntheticHouseSpec s;
    s.appliances = {{"kettle", 2000, 0.8, 0.99}, {"fridge", 90, 0.95, 0.95}, {"washer", 500, 0.97, 0.995}};
    s.noise_std = 40.0;
    s.start = parse_utc_date("2014-03-13");
    s.period = 60;
    s.samples = 40 * 24 * 60;  // 25 train, 7 validation, 8 test days
    s.seed = 11;
    return s;
}

runner::ExperimentConfig acceptance_config(const fs::path& out) {
    runner::ExperimentConfig cfg;
    cfg.synthetic = "acceptance-house";
    cfg.appliances = {"kettle", "fridge", "washer"};
    cfg.sample_period = 60;
    cfg.budget.epochs = 5;
    cfg.budget.batch_size = 64;
    cfg.budget.max_windows_per_epoch = 4096;
    cfg.budget.hidden_width = 32;
    cfg.mode = runner::RunMode::automl;
    cfg.max_evals = 30;
    cfg.seed = 2024;
    cfg.output_dir = out;
    return cfg;
}

std::string log_without_wall_time(const fs::path& file) {
    std::ifstream in(file);
    std::string line, out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        j.erase("wall_time_s");
        out += j.dump() + "\n";
    }
    return out;
}

Outcome end_to_end(const fs::path& work, const AlignedDataset& house) {
    const auto t0 = Clock::now();
    double best_single = std::numeric_limits<double>::infinity();
    std::string best_family;
    std::ostringstream singles;
    for (const auto& family : hpo::all_families()) {
        auto cfg = acceptance_config(work / ("single-" + family));
        cfg.mode = runner::RunMode::single;
        cfg.family = family;
        const auto r = runner::run_single(cfg, house);
        note_audit("single " + family, r.audit);
        singles << " " << family << "=" << fmt(r.test.mean_mae);
        if (r.test.mean_mae < best_single) {
            best_single = r.test.mean_mae;
            best_family = family;
        }
    }
    const auto automl = runner::run_automl(acceptance_config(work / "automl-a"), house);
    note_audit("automl", automl.audit);
    const double seconds = seconds_since(t0);
    const double got = automl.best_test.mean_mae;
    std::cout << "  default single runs, test MAE:" << singles.str() << "\n";
    return {got <= 1.05 * best_single && seconds < 1800.0,
            "automl best " + automl.best.config.text("family", "?") + " test MAE " + fmt(got) + " vs best default " +
                best_family + " " + fmt(best_single) + " (bound " + fmt(1.05 * best_single) + "), " +
                fmt(seconds, 4) + " s"};
}

Outcome uk_dale_ordering(const fs::path& work) {
    const char* csv = std::getenv("NILMTUNE_UKDALE_CSV");
    if (csv == nullptr || *csv == '\0') return {true, "optional check skipped: NILMTUNE_UKDALE_CSV not set"};
    const char* label = std::getenv("NILMTUNE_UKDALE_APPLIANCE");
    double mae_of[2] = {0, 0};
    const char* families[2] = {"seq2point", "co"};
    for (int i = 0; i < 2; ++i) {
        runner::ExperimentConfig cfg;
        cfg.dataset = fs::path(csv);
        cfg.appliances = {label && *label ? label : "kettle"};
        cfg.family = families[i];
        cfg.budget.epochs = 5;
        cfg.output_dir = work / ("ukdale-" + std::string(families[i]));
        const auto r = runner::run_single(cfg);
        note_audit(std::string("uk-dale ") + families[i], r.audit);
        mae_of[i] = r.test.mean_mae;
    }
    return {mae_of[0] < mae_of[1], "seq2point " + fmt(mae_of[0]) + " W vs co " + fmt(mae_of[1]) + " W"};
}

Outcome determinism(const fs::path& work, const AlignedDataset& house) {
    const fs::path a = work / "automl-a", b = work / "automl-b";
    if (!fs::exists(a / "trials.jsonl")) {
        note_audit("automl first run", runner::run_automl(acceptance_config(a), house).audit);
    }
    note_audit("automl rerun", runner::run_automl(acceptance_config(b), house).audit);
    const std::string la = log_without_wall_time(a / "trials.jsonl");
    const std::string lb = log_without_wall_time(b / "trials.jsonl");
    const auto lines = std::count(la.begin(), la.end(), '\n');
    return {la == lb && lines == 30, std::to_string(lines) + " records, logs " + (la == lb ? "identical" : "differ")};
}

Outcome split_hygiene() {
    std::size_t leaks = 0;
    std::string first;
    for (const auto& [what, n] : g_audits) {
        if (n > 0 && first.empty()) first = what;
        leaks += n;
    }
    if (g_audits.empty()) return {false, "no end-to-end run was audited"};
    return {leaks == 0, std::to_string(g_audits.size()) + " audited runs, " + std::to_string(leaks) +
                            " early test accesses" + (first.empty() ? "" : " (first in " + first + ")")};
}

}  // namespace

int main(int argc, char** argv) {
    fs::path work = fs::temp_directory_path() / "nilmtune-acceptance";
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--workdir" && i + 1 < argc) {
            work = argv[++i];
        } else if (arg == "--only" && i + 1 < argc) {
            std::stringstream s(argv[++i]);
            for (std::string n; std::getline(s, n, ',');) only.insert(std::stoi(n));
        } else {
            std::cerr << "usage: acceptance [--workdir DIR] [--only N[,N...]]\n";
            return 2;
        }
    }
    fs::remove_all(work);
    fs::create_directories(work);

    std::optional<AlignedDataset> house;
    const auto get_house = [&]() -> const AlignedDataset& {
        if (!house) house = runner::generate_synthetic(acceptance_house());
        return *house;
    };

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"CO exactness", co_exactness},
        {"FHMM exactness", fhmm_exactness},
        {"gradient correctness", gradient_correctness},
        {"metric fidelity", metric_fidelity},
        {"TPE vs random", tpe_vs_random},
        {"end-to-end automl", [&] { return end_to_end(work, get_house()); }},
        {"seq2point below CO on UK-DALE", [&] { return uk_dale_ordering(work); }},
        {"determinism", [&] { return determinism(work, get_house()); }},
        {"split hygiene", split_hygiene},
    };

    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int n = static_cast<int>(i + 1);
        if (!only.empty() && !only.count(n)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        all = all && o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << n << "] " << criteria[i].first << ": " << o.detail << " ("
                  << fmt(seconds_since(t0), 3) << " s)" << std::endl;
    }
    return all ? 0 : 1;
}
