#include "nilmtune/classic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nilmtune {

void ApplianceStateModel::validate() const {
    if (levels.size() < 2) throw std::invalid_argument("state model '" + label + "' needs >= 2 levels");
    for (std::size_t i = 1; i < levels.size(); ++i) {
        if (!(levels[i] > levels[i - 1])) {
            throw std::invalid_argument("state model '" + label + "' levels must be strictly increasing");
        }
    }
    const auto stochastic = [&](const std::vector<double>& p, const char* what) {
        if (p.size() != levels.size()) throw std::invalid_argument(std::string(what) + " has wrong size");
        double sum = 0.0;
        for (double x : p) {
            if (!(x >= 0.0)) throw std::invalid_argument(std::string(what) + " has a negative entry");
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument(std::string(what) + " does not sum to 1");
    };
    if (!transition.empty()) {
        if (transition.size() != levels.size()) throw std::invalid_argument("transition has wrong size");
        for (const auto& row : transition) stochastic(row, "transition row");
    }
    if (!initial.empty()) stochastic(initial, "initial distribution");
    if (!emission_std.empty()) {
        if (emission_std.size() != levels.size()) throw std::invalid_argument("emission_std has wrong size");
        for (double s : emission_std) {
            if (!(s >= kEmissionStdFloor)) throw std::invalid_argument("emission_std below floor");
        }
    }
}

// ---------------------------------------------------------------------------

JointStateIndex::JointStateIndex(std::vector<std::size_t> radices) : radices_(std::move(radices)) {
    strides_.reserve(radices_.size());
    for (std::size_t r : radices_) {
        if (r == 0) throw std::invalid_argument("JointStateIndex: zero radix");
        strides_.push_back(size_);
        if (size_ > std::numeric_limits<std::size_t>::max() / r) {
            throw std::overflow_error("JointStateIndex: joint state count overflows");
        }
        size_ *= r;
    }
}

std::size_t JointStateIndex::flat(std::span<const std::size_t> states) const {
    if (states.size() != radices_.size()) throw std::invalid_argument("JointStateIndex: tuple size mismatch");
    std::size_t f = 0;
    for (std::size_t a = 0; a < states.size(); ++a) {
        if (states[a] >= radices_[a]) throw std::out_of_range("JointStateIndex: state out of range");
        f += states[a] * strides_[a];
    }
    return f;
}

std::vector<std::size_t> JointStateIndex::unflat(std::size_t flat) const {
    if (flat >= size_) throw std::out_of_range("JointStateIndex: flat index out of range");
    std::vector<std::size_t> out(radices_.size());
    for (std::size_t a = 0; a < radices_.size(); ++a) out[a] = state_of(flat, a);
    return out;
}

// ---------------------------------------------------------------------------

StateClustering cluster_states(std::span<const double> values, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("learn_states: k must be >= 2");
    std::vector<double> x;
    x.reserve(values.size());
    for (double v : values) {
        if (!is_gap(v)) x.push_back(v);
    }
    {
        std::vector<double> distinct = x;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < k) throw std::invalid_argument("learn_states: fewer distinct values than k");
    }
    const std::size_t n = x.size();

    std::mt19937_64 rng(seed);
    std::vector<double> centers;
    centers.push_back(x[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
    std::vector<double> nearest(n);
    while (centers.size() < k) {
        std::size_t far = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = std::numeric_limits<double>::infinity();
            for (double c : centers) d = std::min(d, std::abs(x[i] - c));
            nearest[i] = d;
            if (d > nearest[far]) far = i;
        }
        centers.push_back(x[far]);
    }

    const auto closest = [&](double v) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c) {
            const double dc = std::abs(v - centers[c]);
            const double db = std::abs(v - centers[best]);
            if (dc < db || (dc == db && centers[c] > centers[best])) best = c;
        }
        return best;
    };

    std::vector<std::size_t> assign(n, k);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = closest(x[i]);
            if (c != assign[i]) {
                assign[i] = c;
                changed = true;
            }
        }
        if (!changed) break;

        std::vector<double> sum(k, 0.0);
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[assign[i]] += x[i];
            ++count[assign[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] > 0) {
                centers[c] = sum[c] / static_cast<double>(count[c]);
                continue;
            }
            // empty cluster: restart it at the sample worst served by its centre
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = std::abs(x[i] - centers[assign[i]]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            centers[c] = x[far];
        }
    }

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return centers[a] < centers[b]; });
    std::vector<std::size_t> rank(k);
    StateClustering out;
    for (std::size_t r = 0; r < k; ++r) {
        rank[order[r]] = r;
        out.levels.push_back(centers[order[r]]);
    }
    out.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.assignment[i] = rank[assign[i]];
    for (std::size_t r = 1; r < k; ++r) {
        if (!(out.levels[r] > out.levels[r - 1])) {
            throw std::runtime_error("learn_states: clustering produced coincident levels");
        }
    }
    return out;
}

ApplianceStateModel learn_states(const PowerSeries& series, std::size_t k, std::uint64_t seed) {
    ApplianceStateModel m;
    m.label = series.label();
    m.levels = cluster_states(series.values(), k, seed).levels;
    return m;
}

// ---------------------------------------------------------------------------

namespace {

JointStateIndex joint_index(std::span<const ApplianceStateModel> models, std::size_t cap) {
    if (models.empty()) throw std::invalid_argument("disaggregate: no appliance models");
    std::vector<std::size_t> radices;
    double product = 1.0;
    for (const auto& m : models) {
        if (m.levels.empty()) throw std::invalid_argument("disaggregate: model without levels");
        radices.push_back(m.levels.size());
        product *= static_cast<double>(m.levels.size());
    }
    if (product > static_cast<double>(cap)) {
        throw std::invalid_argument("disaggregate: joint state count " +
                                    std::to_string(static_cast<long long>(product)) +
                                    " exceeds cap " + std::to_string(cap));
    }
    return JointStateIndex(std::move(radices));
}

std::vector<double> joint_sums(const JointStateIndex& idx, std::span<const ApplianceStateModel> models) {
    std::vector<double> sums(idx.size(), 0.0);
    for (std::size_t s = 0; s < idx.size(); ++s) {
        for (std::size_t a = 0; a < models.size(); ++a) sums[s] += models[a].levels[idx.state_of(s, a)];
    }
    return sums;
}

std::vector<PowerSeries> expand_path(const PowerSeries& aggregate, const JointStateIndex& idx,
                                     std::span<const ApplianceStateModel> models,
                                     std::span<const std::size_t> path) {
    std::vector<PowerSeries> out;
    out.reserve(models.size());
    for (std::size_t a = 0; a < models.size(); ++a) {
        std::vector<double> v(path.size());
        for (std::size_t t = 0; t < path.size(); ++t) {
            v[t] = std::max(0.0, models[a].levels[idx.state_of(path[t], a)]);
        }
        out.emplace_back(models[a].label, aggregate.start_time(), aggregate.period(), std::move(v));
    }
    return out;
}

void require_gap_free(const PowerSeries& aggregate) {
    if (aggregate.has_gaps()) throw std::invalid_argument("disaggregate: aggregate contains gaps");
}

struct JointHmm {
    std::vector<double> log_initial;     // S
    std::vector<double> log_transition;  // S x S, [from * S + to]
    std::vector<double> mean;            // S
    std::vector<double> variance;        // S
};

JointHmm build_joint(const JointStateIndex& idx, std::span<const ApplianceStateModel> models) {
    for (const auto& m : models) {
        if (m.transition.size() != m.states() || m.emission_std.size() != m.states() ||
            m.initial.size() != m.states()) {
            throw std::invalid_argument("fhmm: model '" + m.label + "' is not fitted");
        }
    }
    const std::size_t S = idx.size();
    JointHmm h;
    h.log_initial.assign(S, 0.0);
    h.mean.assign(S, 0.0);
    h.variance.assign(S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < models.size(); ++a) {
            const std::size_t st = idx.state_of(s, a);
            h.log_initial[s] += std::log(models[a].initial[st]);
            h.mean[s] += models[a].levels[st];
            h.variance[s] += models[a].emission_std[st] * models[a].emission_std[st];
        }
    }
    h.log_transition.assign(S * S, 0.0);
    for (std::size_t from = 0; from < S; ++from) {
        for (std::size_t to = 0; to < S; ++to) {
            double lp = 0.0;
            for (std::size_t a = 0; a < models.size(); ++a) {
                lp += std::log(models[a].transition[idx.state_of(from, a)][idx.state_of(to, a)]);
            }
            h.log_transition[from * S + to] = lp;
        }
    }
    return h;
}

inline double log_emission(const JointHmm& h, std::size_t s, double x) {
    const double d = x - h.mean[s];
    return -0.5 * std::log(2.0 * std::numbers::pi * h.variance[s]) - d * d / (2.0 * h.variance[s]);
}

}  // namespace

std::vector<PowerSeries> co_disaggregate(const PowerSeries& aggregate,
                                         std::span<const ApplianceStateModel> models,
                                         std::size_t joint_cap) {
    require_gap_free(aggregate);
    const JointStateIndex idx = joint_index(models, joint_cap);
    const std::vector<double> sums = joint_sums(idx, models);
    const auto agg = aggregate.values();
    std::vector<std::size_t> path(agg.size());
    for (std::size_t t = 0; t < agg.size(); ++t) {
        std::size_t best = 0;
        double best_err = std::abs(agg[t] - sums[0]);
        for (std::size_t s = 1; s < sums.size(); ++s) {
            const double err = std::abs(agg[t] - sums[s]);
            if (err < best_err) {
                best_err = err;
                best = s;
            }
        }
        path[t] = best;
    }
    return expand_path(aggregate, idx, models, path);
}

std::vector<ApplianceStateModel> fit_fhmm(const AlignedDataset& train, std::span<const std::size_t> k,
                                          std::uint64_t seed) {
    const auto& apps = train.appliances();
    if (k.size() != apps.size()) throw std::invalid_argument("fit_fhmm: need one state count per appliance");
    std::vector<ApplianceStateModel> out;
    for (std::size_t a = 0; a < apps.size(); ++a) {
        const auto values = apps[a].values();
        const StateClustering cl = cluster_states(values, k[a], seed + a);
        const std::size_t K = cl.levels.size();
        ApplianceStateModel m;
        m.label = apps[a].label();
        m.levels = cl.levels;

        std::vector<std::vector<double>> counts(K, std::vector<double>(K, 1.0));
        for (std::size_t t = 1; t < cl.assignment.size(); ++t) counts[cl.assignment[t - 1]][cl.assignment[t]] += 1.0;
        for (auto& row : counts) {
            const double total = std::accumulate(row.begin(), row.end(), 0.0);
            for (double& c : row) c /= total;
        }
        m.transition = std::move(counts);

        std::vector<double> sum(K, 0.0), sq(K, 0.0), n(K, 0.0);
        for (std::size_t t = 0; t < cl.assignment.size(); ++t) {
            const std::size_t s = cl.assignment[t];
            sum[s] += values[t];
            n[s] += 1.0;
        }
        for (std::size_t t = 0; t < cl.assignment.size(); ++t) {
            const std::size_t s = cl.assignment[t];
            const double d = values[t] - sum[s] / n[s];
            sq[s] += d * d;
        }
        m.emission_std.resize(K);
        m.initial.resize(K);
        const auto total = static_cast<double>(cl.assignment.size());
        for (std::size_t s = 0; s < K; ++s) {
            m.emission_std[s] = std::max(kEmissionStdFloor, std::sqrt(sq[s] / n[s]));
            m.initial[s] = n[s] / total;
        }
        out.push_back(std::move(m));
    }
    return out;
}

FhmmDecoding fhmm_decode(const PowerSeries& aggregate, std::span<const ApplianceStateModel> models,
                         std::size_t joint_cap) {
    require_gap_free(aggregate);
    const JointStateIndex idx = joint_index(models, joint_cap);
    const JointHmm h = build_joint(idx, models);
    const std::size_t S = idx.size();
    const auto x = aggregate.values();
    const std::size_t T = x.size();

    std::vector<double> delta(S), next(S);
    std::vector<std::uint32_t> back(T * S, 0);
    for (std::size_t s = 0; s < S; ++s) delta[s] = h.log_initial[s] + log_emission(h, s, x[0]);
    for (std::size_t t = 1; t < T; ++t) {
        for (std::size_t to = 0; to < S; ++to) {
            std::size_t arg = 0;
            double best = delta[0] + h.log_transition[to];
            for (std::size_t from = 1; from < S; ++from) {
                const double v = delta[from] + h.log_transition[from * S + to];
                if (v > best) {
                    best = v;
                    arg = from;
                }
            }
            next[to] = best + log_emission(h, to, x[t]);
            back[t * S + to] = static_cast<std::uint32_t>(arg);
        }
        delta.swap(next);
    }
    std::size_t last = 0;
    for (std::size_t s = 1; s < S; ++s) {
        if (delta[s] > delta[last]) last = s;
    }
    if (!std::isfinite(delta[last])) throw std::runtime_error("fhmm: non-finite log-probability");

    FhmmDecoding out;
    out.log_probability = delta[last];
    out.path.resize(T);
    out.path[T - 1] = last;
    for (std::size_t t = T - 1; t > 0; --t) out.path[t - 1] = back[t * S + out.path[t]];
    out.appliances = expand_path(aggregate, idx, models, out.path);
    return out;
}

std::vector<PowerSeries> fhmm_disaggregate(const PowerSeries& aggregate,
                                           std::span<const ApplianceStateModel> models,
                                           std::size_t joint_cap) {
    return fhmm_decode(aggregate, models, joint_cap).appliances;
}

double fhmm_path_log_probability(const PowerSeries& aggregate,
                                 std::span<const ApplianceStateModel> models,
                                 std::span<const std::size_t> path) {
    const JointStateIndex idx = joint_index(models, std::numeric_limits<std::size_t>::max());
    const JointHmm h = build_joint(idx, models);
    const auto x = aggregate.values();
    if (path.size() != x.size()) throw std::invalid_argument("fhmm: path length mismatch");
    double lp = h.log_initial[path[0]] + log_emission(h, path[0], x[0]);
    for (std::size_t t = 1; t < x.size(); ++t) {
        lp += h.log_transition[path[t - 1] * idx.size() + path[t]] + log_emission(h, path[t], x[t]);
    }
    return lp;
}

// ---------------------------------------------------------------------------

namespace {

void write_row(std::ostream& out, const char* key, const std::vector<double>& v) {
    char buf[40];
    out << key;
    for (double x : v) {
        std::snprintf(buf, sizeof buf, " %.17g", x);
        out << buf;
    }
    out << '\n';
}

std::vector<double> read_row(std::istream& in, const std::string& key, std::size_t n) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("state models: missing '" + key + "' line");
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word != key) throw std::runtime_error("state models: expected '" + key + "', got '" + word + "'");
    std::vector<double> v(n);
    for (double& x : v) {
        if (!(ss >> x)) throw std::runtime_error("state models: short '" + key + "' row");
    }
    return v;
}

}  // namespace

void save_state_models(std::ostream& out, std::span<const ApplianceStateModel> models) {
    out << "state-models v1\n" << "count " << models.size() << '\n';
    for (const auto& m : models) {
        out << "model " << m.label << '\n' << "states " << m.states() << '\n';
        write_row(out, "levels", m.levels);
        const bool fitted = !m.transition.empty();
        out << "fitted " << (fitted ? 1 : 0) << '\n';
        if (!fitted) continue;
        write_row(out, "initial", m.initial);
        write_row(out, "emission_std", m.emission_std);
        for (const auto& row : m.transition) write_row(out, "transition", row);
    }
}

std::vector<ApplianceStateModel> load_state_models(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "state-models v1") throw std::runtime_error("state models: bad header");
    std::size_t count = 0;
    {
        std::getline(in, line);
        std::istringstream ss(line);
        std::string word;
        if (!(ss >> word >> count) || word != "count") throw std::runtime_error("state models: bad count");
    }
    std::vector<ApplianceStateModel> out(count);
    for (auto& m : out) {
        if (!std::getline(in, line) || line.rfind("model ", 0) != 0) throw std::runtime_error("state models: bad model line");
        m.label = line.substr(6);
        std::size_t k = 0;
        int fitted = 0;
        std::getline(in, line);
        if (std::sscanf(line.c_str(), "states %zu", &k) != 1) throw std::runtime_error("state models: bad states line");
        m.levels = read_row(in, "levels", k);
        std::getline(in, line);
        if (std::sscanf(line.c_str(), "fitted %d", &fitted) != 1) throw std::runtime_error("state models: bad fitted line");
        if (fitted) {
            m.initial = read_row(in, "initial", k);
            m.emission_std = read_row(in, "emission_std", k);
            for (std::size_t r = 0; r < k; ++r) m.transition.push_back(read_row(in, "transition", k));
        }
        m.validate();
    }
    return out;
}

// ---------------------------------------------------------------------------

StateDisaggregator::StateDisaggregator(Method method, std::size_t states_per_appliance, std::uint64_t seed)
    : method_(method), k_(states_per_appliance), seed_(seed) {
    if (k_ < 2) throw std::invalid_argument("state count k must be >= 2");
}

std::string StateDisaggregator::family() const { return method_ == Method::co ? "co" : "fhmm"; }

void StateDisaggregator::fit(const AlignedDataset& train, const AlignedDataset& /*val*/,
                             const std::vector<std::string>& targets) {
    for (const auto& t : targets) (void)train.appliance(t);
    targets_ = targets;
    const std::vector<std::size_t> ks(train.appliances().size(), k_);
    if (method_ == Method::fhmm) {
        models_ = fit_fhmm(train, ks, seed_);
        return;
    }
    models_.clear();
    for (std::size_t a = 0; a < train.appliances().size(); ++a) {
        models_.push_back(learn_states(train.appliances()[a], k_, seed_ + a));
    }
}

std::vector<PowerSeries> StateDisaggregator::predict(const PowerSeries& aggregate) const {
    if (models_.empty()) throw std::logic_error(family() + ": predict before fit");
    auto all = method_ == Method::co ? co_disaggregate(aggregate, models_) : fhmm_disaggregate(aggregate, models_);
    std::vector<PowerSeries> out;
    for (const auto& t : targets_) {
        for (auto& s : all) {
            if (s.label() == t) out.push_back(s);
        }
    }
    return out;
}

void StateDisaggregator::save(std::ostream& out) const {
    out << "family " << family() << '\n';
    save_state_models(out, models_);
}

}  // namespace nilmtune
