// Independent reference computations for the test suites. Nothing here
// calls the library code it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "nilmtune/classic.hpp"
#include "nilmtune/hyperparameters.hpp"

namespace oracle {

/// All state tuples in flat order: the first appliance varies fastest.
inline std::vector<std::vector<std::size_t>> joint_states(const std::vector<std::size_t>& radices) {
    std::vector<std::vector<std::size_t>> out{{}};
    for (std::size_t r : radices) {
        std::vector<std::vector<std::size_t>> next;
        for (std::size_t s = 0; s < r; ++s) {
            for (const auto& prefix : out) {
                auto t = prefix;
                t.push_back(s);
                next.push_back(t);
            }
        }
        out = std::move(next);
    }
    // `out` now has the last appliance varying slowest: reorder so the tuple
    // with the smallest first-fastest index comes first
    std::vector<std::vector<std::size_t>> ordered(out.size());
    for (const auto& t : out) {
        std::size_t flat = 0, stride = 1;
        for (std::size_t a = 0; a < t.size(); ++a) {
            flat += t[a] * stride;
            stride *= radices[a];
        }
        ordered[flat] = t;
    }
    return ordered;
}

/// Per-timestep exhaustive CO: levels chosen per appliance, first minimum
/// in flat order wins.
inline std::vector<std::vector<double>> co(const std::vector<double>& aggregate,
                                           const std::vector<std::vector<double>>& levels) {
    std::vector<std::size_t> radices;
    for (const auto& l : levels) radices.push_back(l.size());
    const auto states = joint_states(radices);
    std::vector<std::vector<double>> out(levels.size(), std::vector<double>(aggregate.size()));
    for (std::size_t t = 0; t < aggregate.size(); ++t) {
        double best = std::numeric_limits<double>::infinity();
        const std::vector<std::size_t>* arg = nullptr;
        for (const auto& s : states) {
            double total = 0.0;
            for (std::size_t a = 0; a < s.size(); ++a) total += levels[a][s[a]];
            const double err = std::abs(aggregate[t] - total);
            if (err < best) {
                best = err;
                arg = &s;
            }
        }
        for (std::size_t a = 0; a < levels.size(); ++a) out[a][t] = levels[a][(*arg)[a]];
    }
    return out;
}

/// Log-probability of a joint path given as per-timestep state tuples.
inline double fhmm_log_probability(const std::vector<double>& y,
                                   const std::vector<nilmtune::ApplianceStateModel>& models,
                                   const std::vector<std::vector<std::size_t>>& path) {
    double lp = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        double mean = 0.0, var = 0.0;
        for (std::size_t a = 0; a < models.size(); ++a) {
            const std::size_t s = path[t][a];
            mean += models[a].levels[s];
            var += models[a].emission_std[s] * models[a].emission_std[s];
            lp += t == 0 ? std::log(models[a].initial[s]) : std::log(models[a].transition[path[t - 1][a]][s]);
        }
        lp += -0.5 * std::log(2.0 * std::numbers::pi * var) - (y[t] - mean) * (y[t] - mean) / (2.0 * var);
    }
    return lp;
}

/// Maximum path log-probability by enumerating every joint path.
inline double fhmm_brute_force_max(const std::vector<double>& y,
                                   const std::vector<nilmtune::ApplianceStateModel>& models) {
    std::vector<std::size_t> radices;
    for (const auto& m : models) radices.push_back(m.levels.size());
    const auto states = joint_states(radices);
    const std::size_t S = states.size(), T = y.size();
    std::vector<std::size_t> digits(T, 0);
    double best = -std::numeric_limits<double>::infinity();
    for (;;) {
        std::vector<std::vector<std::size_t>> path(T);
        for (std::size_t t = 0; t < T; ++t) path[t] = states[digits[t]];
        best = std::max(best, fhmm_log_probability(y, models, path));
        std::size_t i = 0;
        while (i < T && ++digits[i] == S) digits[i++] = 0;
        if (i == T) break;
    }
    return best;
}

/// Random stochastic vector with entries bounded away from zero.
inline std::vector<double> random_simplex(std::size_t k, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> p(k);
    double total = 0.0;
    for (double& x : p) total += (x = u(rng));
    for (double& x : p) x /= total;
    return p;
}

inline nilmtune::ApplianceStateModel random_hmm(const std::string& label, std::size_t k, std::mt19937_64& rng) {
    nilmtune::ApplianceStateModel m;
    m.label = label;
    std::uniform_real_distribution<double> step(20.0, 400.0), sd(10.0, 80.0);
    double level = 0.0;
    for (std::size_t s = 0; s < k; ++s) {
        m.levels.push_back(level);
        m.emission_std.push_back(sd(rng));
        level += step(rng);
    }
    for (std::size_t s = 0; s < k; ++s) m.transition.push_back(random_simplex(k, rng));
    m.initial = random_simplex(k, rng);
    return m;
}

/// Best two-level quantisation of a multiset by trying every sorted split
/// point; returns the two cluster means.
inline std::pair<double, double> best_two_partition(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double best = std::numeric_limits<double>::infinity();
    std::pair<double, double> arg{0, 0};
    for (std::size_t cut = 1; cut < v.size(); ++cut) {
        double m1 = 0, m2 = 0;
        for (std::size_t i = 0; i < cut; ++i) m1 += v[i];
        for (std::size_t i = cut; i < v.size(); ++i) m2 += v[i];
        m1 /= static_cast<double>(cut);
        m2 /= static_cast<double>(v.size() - cut);
        double sse = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double c = i < cut ? m1 : m2;
            sse += (v[i] - c) * (v[i] - c);
        }
        if (sse < best - 1e-12) {
            best = sse;
            arg = {m1, m2};
        }
    }
    return arg;
}

/// Benchmark objective over the neural subtree:
/// (log10 lr + 3)^2 + {adam: 0, nadam: 0.5} + 0.1 |window - 50| / 30.
/// Families without a window or sequence length count as window 50.
inline double benchmark_objective(const nilmtune::Hyperparameters& h) {
    const double lr = h.number("learning_rate", 1e-3);
    const double opt = h.text("optimizer", "adam") == "nadam" ? 0.5 : 0.0;
    double window = 50.0;
    if (h.contains("window_size")) window = h.number("window_size", 50.0);
    if (h.contains("sequence_length")) window = h.number("sequence_length", 50.0);
    const double l = std::log10(lr) + 3.0;
    return l * l + opt + 0.1 * std::abs(window - 50.0) / 30.0;
}

}  // namespace oracle
