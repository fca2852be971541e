#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "nilmtune/classic.hpp"
#include "nilmtune/hpo/tpe.hpp"
#include "nilmtune/neural.hpp"

using namespace nilmtune;

namespace {

PowerSeries random_aggregate(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 3000);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return PowerSeries("aggregate", 0, 60, std::move(v));
}

std::vector<ApplianceStateModel> chains(std::size_t appliances, std::size_t k) {
    std::vector<ApplianceStateModel> out;
    for (std::size_t a = 0; a < appliances; ++a) {
        ApplianceStateModel m;
        m.label = "a" + std::to_string(a);
        for (std::size_t s = 0; s < k; ++s) {
            m.levels.push_back(static_cast<double>(s * (200 + 150 * a)));
            m.emission_std.push_back(20.0);
        }
        m.transition.assign(k, std::vector<double>(k, 0.1 / static_cast<double>(k - 1)));
        for (std::size_t s = 0; s < k; ++s) m.transition[s][s] = 0.9;
        m.initial.assign(k, 1.0 / static_cast<double>(k));
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace

static void BM_CoDisaggregate(benchmark::State& state) {
    const auto agg = random_aggregate(static_cast<std::size_t>(state.range(0)), 1);
    const auto models = chains(4, 3);
    for (auto _ : state) benchmark::DoNotOptimize(co_disaggregate(agg, models));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CoDisaggregate)->Arg(1000)->Arg(10000);

static void BM_FhmmDisaggregate(benchmark::State& state) {
    const auto agg = random_aggregate(static_cast<std::size_t>(state.range(0)), 2);
    const auto models = chains(static_cast<std::size_t>(state.range(1)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(fhmm_disaggregate(agg, models));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FhmmDisaggregate)->Args({1440, 3})->Args({1440, 6})->Args({10080, 3});

static void BM_TpeSuggest(benchmark::State& state) {
    const auto space = hpo::default_search_space({});
    std::mt19937_64 rng(3);
    hpo::TrialHistory history;
    for (std::size_t i = 0; i < static_cast<std::size_t>(state.range(0)); ++i) {
        hpo::Trial t;
        t.id = i;
        t.config = hpo::sample_random(space, rng);
        t.loss = std::uniform_real_distribution<double>(0, 100)(rng);
        history.push_back(std::move(t));
    }
    const hpo::TpeConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(hpo::tpe_suggest(space, history, cfg, rng));
}
BENCHMARK(BM_TpeSuggest)->Arg(10)->Arg(30)->Arg(100);

static void BM_Seq2pointForward(benchmark::State& state) {
    NetworkSpec spec;
    spec.family = NeuralFamily::seq2point;
    spec.window = 100;
    spec.hidden = 64;
    const auto net = build_network(spec);
    const std::size_t batch = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(4);
    for (auto _ : state) {
        nn::Tape tape(false);
        const nn::Var y = net->forward(tape, tape.constant(nn::Tensor({batch, spec.window}, 0.3)), nn::Mode::eval, rng);
        benchmark::DoNotOptimize(y.value().data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Seq2pointForward)->Arg(1)->Arg(64);
BENCHMARK_MAIN();
