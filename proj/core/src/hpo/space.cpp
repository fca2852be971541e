#include "nilmtune/hpo/space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <stdexcept>

#include "nilmtune/keyvalue.hpp"

namespace nilmtune::hpo {

ParamSpec ParamSpec::choice(std::string name, std::vector<ChoiceOption> options) {
    ParamSpec s;
    s.kind = Kind::choice;
    s.name = std::move(name);
    s.options = std::move(options);
    return s;
}

ParamSpec ParamSpec::choice(std::string name, const std::vector<ParamValue>& values) {
    std::vector<ChoiceOption> options;
    for (const auto& v : values) options.push_back({v, {}});
    return choice(std::move(name), std::move(options));
}

ParamSpec ParamSpec::uniform(std::string name, double lo, double hi) {
    ParamSpec s;
    s.kind = Kind::uniform;
    s.name = std::move(name);
    s.lo = lo;
    s.hi = hi;
    return s;
}

ParamSpec ParamSpec::quniform(std::string name, double lo, double hi, double q) {
    ParamSpec s = uniform(std::move(name), lo, hi);
    s.kind = Kind::quniform;
    s.q = q;
    return s;
}

std::size_t ParamSpec::option_index(const ParamValue& v) const {
    for (std::size_t i = 0; i < options.size(); ++i) {
        if (options[i].value == v) return i;
    }
    throw std::invalid_argument("'" + to_string(v) + "' is not an option of '" + name + "'");
}

bool ParamSpec::admits(const ParamValue& v) const {
    if (kind == Kind::choice) {
        return std::any_of(options.begin(), options.end(), [&](const ChoiceOption& o) { return o.value == v; });
    }
    const auto* x = std::get_if<double>(&v);
    if (!x || !(*x >= lo && *x <= hi)) return false;
    if (kind == Kind::uniform) return true;
    return std::abs(quantize(*x, lo, hi, q) - *x) <= 1e-9 * q;
}

double quantize(double x, double lo, double hi, double q) {
    return std::clamp(std::round(x / q) * q, lo, hi);
}

std::vector<double> ParamSpec::lattice() const {
    if (kind != Kind::quniform) throw std::logic_error("lattice: '" + name + "' is not quantized");
    std::vector<double> out{quantize(lo, lo, hi, q)};
    const auto first = static_cast<long long>(std::ceil(lo / q));
    const auto last = static_cast<long long>(std::floor(hi / q));
    if (last - first > 1'000'000) throw std::invalid_argument("lattice of '" + name + "' is too large");
    for (long long k = first; k <= last; ++k) out.push_back(quantize(static_cast<double>(k) * q, lo, hi, q));
    out.push_back(quantize(hi, lo, hi, q));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

void validate_params(const std::vector<ParamSpec>& params, std::set<std::string>& path_names) {
    std::vector<std::string> added;
    for (const ParamSpec& p : params) {
        if (p.name.empty()) throw std::invalid_argument("search space: unnamed parameter");
        if (!path_names.insert(p.name).second) {
            throw std::invalid_argument("search space: '" + p.name + "' repeats along one branch path");
        }
        added.push_back(p.name);
        switch (p.kind) {
            case ParamSpec::Kind::choice:
                if (p.options.empty()) throw std::invalid_argument("search space: '" + p.name + "' has no options");
                for (std::size_t i = 0; i < p.options.size(); ++i) {
                    for (std::size_t j = 0; j < i; ++j) {
                        if (p.options[i].value == p.options[j].value) {
                            throw std::invalid_argument("search space: '" + p.name + "' repeats option '" +
                                                        to_string(p.options[i].value) + "'");
                        }
                    }
                    validate_params(p.options[i].subspace, path_names);
                }
                break;
            case ParamSpec::Kind::quniform:
                if (!(p.q > 0.0)) throw std::invalid_argument("search space: '" + p.name + "' needs q > 0");
                [[fallthrough]];
            case ParamSpec::Kind::uniform:
                if (!(p.lo < p.hi)) throw std::invalid_argument("search space: '" + p.name + "' needs lo < hi");
                break;
        }
    }
    for (const auto& n : added) path_names.erase(n);
}

void sample_params(const std::vector<ParamSpec>& params, std::mt19937_64& rng, Configuration& out) {
    for (const ParamSpec& p : params) {
        switch (p.kind) {
            case ParamSpec::Kind::choice: {
                std::uniform_int_distribution<std::size_t> pick(0, p.options.size() - 1);
                const ChoiceOption& o = p.options[pick(rng)];
                out.set(p.name, o.value);
                sample_params(o.subspace, rng, out);
                break;
            }
            case ParamSpec::Kind::uniform:
                out.set(p.name, std::uniform_real_distribution<double>(p.lo, p.hi)(rng));
                break;
            case ParamSpec::Kind::quniform:
                out.set(p.name, quantize(std::uniform_real_distribution<double>(p.lo, p.hi)(rng), p.lo, p.hi, p.q));
                break;
        }
    }
}

bool check_params(const std::vector<ParamSpec>& params, const Configuration& config, std::set<std::string>& seen,
                  std::string* why) {
    for (const ParamSpec& p : params) {
        const auto it = config.values().find(p.name);
        if (it == config.values().end()) {
            if (why) *why = "missing '" + p.name + "'";
            return false;
        }
        if (!p.admits(it->second)) {
            if (why) *why = "'" + p.name + "' = " + to_string(it->second) + " is outside its domain";
            return false;
        }
        seen.insert(p.name);
        if (p.is_choice() && !check_params(p.options[p.option_index(it->second)].subspace, config, seen, why)) {
            return false;
        }
    }
    return true;
}

const std::vector<ParamValue> kLearningRates{1e-2, 1e-3, 1e-4};

std::vector<ParamSpec> neural_common() {
    return {ParamSpec::choice("optimizer", {std::string("adam"), std::string("nadam")}),
            ParamSpec::choice("learning_rate", kLearningRates),
            ParamSpec::choice("loss", {std::string("mse"), std::string("mae")})};
}

}  // namespace

void SearchSpace::validate() const {
    std::set<std::string> names;
    validate_params(params, names);
}

Configuration sample_random(const SearchSpace& space, std::mt19937_64& rng) {
    Configuration out;
    sample_params(space.params, rng, out);
    return out;
}

bool satisfies(const SearchSpace& space, const Configuration& config, std::string* why) {
    std::set<std::string> seen;
    if (!check_params(space.params, config, seen, why)) return false;
    for (const auto& [name, value] : config.values()) {
        if (!seen.contains(name)) {
            if (why) *why = "'" + name + "' belongs to an inactive branch";
            return false;
        }
    }
    return true;
}

const std::vector<std::string>& all_families() {
    static const std::vector<std::string> names{"co",   "fhmm",       "dt",   "rf",        "fcnn",   "dae",
                                                "rnn_gru", "window_gru", "lstm", "seq2point", "seq2seq"};
    return names;
}

std::vector<ParamSpec> default_family_space(std::string_view family) {
    if (family == "co" || family == "fhmm") return {ParamSpec::choice("k", {2.0, 3.0})};
    if (family == "dt" || family == "rf") {
        std::vector<ParamSpec> out{
            ParamSpec::choice("criterion", {std::string("squared_error"), std::string("friedman_mse")}),
            ParamSpec::quniform("min_samples_split", 10, 20, 1)};
        if (family == "rf") out.push_back(ParamSpec::quniform("n_estimators", 10, 30, 1));
        return out;
    }
    auto out = neural_common();
    if (family == "fcnn" || family == "dae") {
        out.push_back(ParamSpec::quniform("num_layers", 5, 7, 1));
    } else if (family == "rnn_gru" || family == "lstm") {
        out.push_back(ParamSpec::choice("sequence_length", {10.0, 20.0, 50.0}));
    } else if (family == "window_gru" || family == "seq2point" || family == "seq2seq") {
        out.push_back(ParamSpec::choice("window_size", {20.0, 50.0, 100.0}));
    } else {
        throw std::invalid_argument("unknown model family '" + std::string(family) + "'");
    }
    out.push_back(ParamSpec::uniform("dropout", 0.1, 0.3));
    return out;
}

SearchSpace default_search_space(const std::vector<std::string>& families) {
    const auto& names = families.empty() ? all_families() : families;
    std::vector<ChoiceOption> options;
    for (const auto& f : names) options.push_back({f, default_family_space(f)});
    SearchSpace space{{ParamSpec::choice("family", std::move(options))}};
    space.validate();
    return space;
}

void override_param(SearchSpace& space, std::string_view family, const ParamSpec& replacement) {
    for (ParamSpec& root : space.params) {
        if (!root.is_choice() || root.name != "family") continue;
        for (ChoiceOption& o : root.options) {
            if (o.value != ParamValue(std::string(family))) continue;
            for (ParamSpec& p : o.subspace) {
                if (p.name == replacement.name) {
                    p = replacement;
                    space.validate();
                    return;
                }
            }
            throw std::invalid_argument("family '" + std::string(family) + "' has no hyperparameter '" +
                                        replacement.name + "'");
        }
    }
    throw std::invalid_argument("family '" + std::string(family) + "' is not in the search space");
}

namespace {

ParamValue parse_option(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (!s.empty() && end == s.c_str() + s.size()) return v;
    return s;
}

double parse_bound(const std::string& name, std::string_view s) {
    const std::string text(s);
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size()) {
        throw std::invalid_argument("'" + name + "': bad number '" + text + "'");
    }
    return v;
}

}  // namespace

ParamSpec parse_param_spec(std::string name, std::string_view text) {
    const auto dots = text.find("..");
    if (dots == std::string_view::npos) {
        std::vector<ParamValue> values;
        for (const auto& item : split_list(text)) values.push_back(parse_option(item));
        if (values.empty()) throw std::invalid_argument("'" + name + "': empty option list");
        return ParamSpec::choice(std::move(name), values);
    }
    const std::string_view lo = text.substr(0, dots);
    std::string_view rest = text.substr(dots + 2);
    const auto slash = rest.find('/');
    const auto trim = [](std::string_view s) {
        while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
        while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
        return s;
    };
    if (slash == std::string_view::npos) {
        return ParamSpec::uniform(name, parse_bound(name, trim(lo)), parse_bound(name, trim(rest)));
    }
    return ParamSpec::quniform(name, parse_bound(name, trim(lo)), parse_bound(name, trim(rest.substr(0, slash))),
                               parse_bound(name, trim(rest.substr(slash + 1))));
}

}  // namespace nilmtune::hpo
