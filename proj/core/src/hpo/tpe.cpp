#include "nilmtune/hpo/tpe.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nilmtune::hpo {

const char* to_string(TrialStatus s) { return s == TrialStatus::ok ? "ok" : "failed"; }

TrialStatus parse_trial_status(std::string_view s) {
    if (s == "ok") return TrialStatus::ok;
    if (s == "failed") return TrialStatus::failed;
    throw std::invalid_argument("unknown trial status '" + std::string(s) + "'");
}

void TpeConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("tpe: gamma must lie in (0, 1)");
    if (n_startup < 1) throw std::invalid_argument("tpe: n_startup must be >= 1");
    if (n_candidates < 1) throw std::invalid_argument("tpe: n_candidates must be >= 1");
    if (!(parzen.prior_weight > 0.0)) throw std::invalid_argument("tpe: prior_weight must be > 0");
    if (!(parzen.min_bandwidth_fraction > 0.0 && parzen.min_bandwidth_fraction <= parzen.max_bandwidth_fraction)) {
        throw std::invalid_argument("tpe: bad bandwidth clip fractions");
    }
}

std::pair<std::vector<const Trial*>, std::vector<const Trial*>> split_good_bad(const TrialHistory& history,
                                                                                double gamma) {
    std::vector<const Trial*> ok;
    for (const Trial& t : history) {
        if (t.ok()) ok.push_back(&t);
    }
    if (ok.empty()) throw std::invalid_argument("split_good_bad: no completed trials");
    std::sort(ok.begin(), ok.end(), [](const Trial* a, const Trial* b) {
        return a->loss != b->loss ? a->loss < b->loss : a->id < b->id;
    });
    const auto n_good = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(ok.size()) - 1e-12)));
    std::vector<const Trial*> bad(ok.begin() + static_cast<std::ptrdiff_t>(n_good), ok.end());
    ok.resize(n_good);
    return {std::move(ok), std::move(bad)};
}

namespace {

using Group = std::vector<const Trial*>;

std::vector<ParamValue> values_of(const Group& trials, const std::string& name) {
    std::vector<ParamValue> out;
    for (const Trial* t : trials) {
        const auto it = t->config.values().find(name);
        if (it != t->config.values().end()) out.push_back(it->second);
    }
    return out;
}

Group with_value(const Group& trials, const std::string& name, const ParamValue& v) {
    Group out;
    for (const Trial* t : trials) {
        const auto it = t->config.values().find(name);
        if (it != t->config.values().end() && it->second == v) out.push_back(t);
    }
    return out;
}

void suggest_params(const std::vector<ParamSpec>& params, const Group& good, const Group& bad, const TpeConfig& cfg,
                    std::mt19937_64& rng, Configuration& out) {
    for (const ParamSpec& p : params) {
        const auto good_values = values_of(good, p.name);
        const auto bad_values = values_of(bad, p.name);
        const ParzenEstimator l(p, good_values, cfg.parzen);
        const ParzenEstimator g(p, bad_values, cfg.parzen);
        ParamValue best;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < cfg.n_candidates; ++c) {
            ParamValue x = l.sample(rng);
            const double score = std::log(l.pdf(x)) - std::log(g.pdf(x));
            if (score > best_score) {
                best_score = score;
                best = std::move(x);
            }
        }
        out.set(p.name, best);
        if (p.is_choice()) {
            const auto& sub = p.options[p.option_index(best)].subspace;
            if (!sub.empty()) suggest_params(sub, with_value(good, p.name, best), with_value(bad, p.name, best), cfg, rng, out);
        }
    }
}

}  // namespace

Configuration tpe_suggest(const SearchSpace& space, const TrialHistory& history, const TpeConfig& cfg,
                          std::mt19937_64& rng) {
    cfg.validate();
    const auto ok = static_cast<std::size_t>(std::count_if(history.begin(), history.end(), [](const Trial& t) { return t.ok(); }));
    if (ok < cfg.n_startup) return sample_random(space, rng);
    const auto [good, bad] = split_good_bad(history, cfg.gamma);
    Configuration out;
    suggest_params(space.params, good, bad, cfg, rng, out);
    return out;
}

const Trial& best_trial(const TrialHistory& history) {
    const Trial* best = nullptr;
    for (const Trial& t : history) {
        if (!t.ok()) continue;
        if (!best || t.loss < best->loss || (t.loss == best->loss && t.id < best->id)) best = &t;
    }
    if (!best) throw std::runtime_error("best_trial: no successful trials");
    return *best;
}

OptimizationResult run_optimization(const SearchSpace& space, const Objective& objective, std::size_t max_evals,
                                    std::uint64_t seed, const TpeConfig& cfg, Algorithm algorithm,
                                    const std::function<void(const Trial&)>& on_trial) {
    space.validate();
    cfg.validate();
    if (max_evals < 1) throw std::invalid_argument("run_optimization: max_evals must be >= 1");
    std::mt19937_64 rng(seed);
    OptimizationResult result;
    for (std::size_t id = 0; id < max_evals; ++id) {
        Trial t;
        t.id = id;
        t.seed = seed ^ static_cast<std::uint64_t>(id);
        t.config = algorithm == Algorithm::tpe ? tpe_suggest(space, result.history, cfg, rng) : sample_random(space, rng);
        const auto start = std::chrono::steady_clock::now();
        try {
            Evaluation e = objective(t.config, t.seed);
            if (!std::isfinite(e.loss)) throw std::runtime_error("objective returned a non-finite loss");
            t.loss = e.loss;
            t.aux = std::move(e.aux);
        } catch (const std::exception& e) {
            t.status = TrialStatus::failed;
            t.loss = std::numeric_limits<double>::infinity();
            t.aux.clear();
            t.error = e.what();
        }
        t.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.history.push_back(std::move(t));
        if (on_trial) on_trial(result.history.back());
    }
    result.best = best_trial(result.history);
    return result;
}

}  // namespace nilmtune::hpo
