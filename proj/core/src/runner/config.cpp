#include "nilmtune/runner/config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>

#include "nilmtune/keyvalue.hpp"

namespace nilmtune::runner {

namespace {

struct Reader {
    std::string source;
    std::map<std::string, KeyValue> entries;
    std::set<std::string> used;

    const KeyValue* find(const std::string& key) {
        const auto it = entries.find(key);
        if (it == entries.end()) return nullptr;
        used.insert(key);
        return &it->second;
    }

    [[noreturn]] void fail(const KeyValue& kv, const std::string& what) const {
        throw ConfigError(source + ":" + std::to_string(kv.line) + ": '" + kv.key + "': " + what);
    }

    std::optional<std::string> text(const std::string& key) {
        const KeyValue* kv = find(key);
        if (!kv) return std::nullopt;
        if (kv->value.empty()) fail(*kv, "empty value");
        return kv->value;
    }

    std::optional<double> number(const std::string& key) {
        const KeyValue* kv = find(key);
        if (!kv) return std::nullopt;
        char* end = nullptr;
        const double v = std::strtod(kv->value.c_str(), &end);
        if (kv->value.empty() || end != kv->value.c_str() + kv->value.size()) fail(*kv, "expected a number");
        return v;
    }

    std::optional<std::uint64_t> count(const std::string& key) {
        const KeyValue* kv = find(key);
        if (!kv) return std::nullopt;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(kv->value.c_str(), &end, 10);
        if (kv->value.empty() || kv->value.front() == '-' || end != kv->value.c_str() + kv->value.size()) {
            fail(*kv, "expected a non-negative integer");
        }
        return v;
    }

    std::optional<Timestamp> date(const std::string& key) {
        const KeyValue* kv = find(key);
        if (!kv) return std::nullopt;
        try {
            return parse_utc_date(kv->value);
        } catch (const std::exception& e) {
            fail(*kv, e.what());
        }
    }
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

hpo::SearchSpace ExperimentConfig::search_space() const {
    try {
        hpo::SearchSpace space = hpo::default_search_space(space_families);
        for (const auto& o : space_overrides) hpo::override_param(space, o.family, o.spec);
        return space;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

void ExperimentConfig::validate() const {
    if (dataset.has_value() == synthetic.has_value()) throw ConfigError("exactly one of 'dataset' and 'synthetic' is required");
    if (appliances.empty()) throw ConfigError("'appliances' is required");
    if (sample_period <= 0) throw ConfigError("'sample_period' must be > 0");
    if (split) {
        try {
            split->validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (budget.epochs < 1) throw ConfigError("'epochs' must be >= 1");
    if (budget.batch_size < 1) throw ConfigError("'batch_size' must be >= 1");
    if (budget.hidden_width < 4) throw ConfigError("'hidden_width' must be >= 4");
    if (budget.tree_lag < 1) throw ConfigError("'tree_lag' must be >= 1");
    if (!(on_threshold >= 0.0)) throw ConfigError("'on_threshold' must be >= 0");
    if (mode == RunMode::single) {
        if (family.empty()) throw ConfigError("'family' is required in single mode");
        try {
            make_disaggregator(family, params, budget, seed);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    } else {
        if (max_evals < 1) throw ConfigError("'max_evals' must be >= 1");
        try {
            tpe.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        for (const auto& f : space_families) {
            if (!is_family(f)) throw ConfigError("unknown model family '" + f + "' in 'space.families'");
        }
        search_space();
    }
}

ExperimentConfig parse_config(std::istream& in, const std::string& source, const std::filesystem::path& base_dir) {
    Reader r{source, {}, {}};
    try {
        for (auto& kv : parse_key_values(in, source)) r.entries.emplace(kv.key, kv);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    ExperimentConfig cfg;
    if (auto v = r.text("dataset")) cfg.dataset = resolve(base_dir, *v);
    if (auto v = r.text("synthetic")) cfg.synthetic = resolve(base_dir, *v);
    if (auto v = r.text("aggregate_column")) cfg.aggregate_column = *v;
    if (auto v = r.text("appliances")) cfg.appliances = split_list(*v);
    if (auto v = r.count("sample_period")) cfg.sample_period = static_cast<Seconds>(*v);

    const auto train_start = r.date("train_start");
    const auto train_end = r.date("train_end");
    const auto val_end = r.date("val_end");
    const auto test_end = r.date("test_end");
    const int given = train_start.has_value() + train_end.has_value() + val_end.has_value() + test_end.has_value();
    if (given == 4) {
        cfg.split = SplitSpec{*train_start, *train_end, *val_end, *test_end};
    } else if (given != 0) {
        throw ConfigError(source + ": split dates need all of train_start, train_end, val_end, test_end");
    }

    if (auto v = r.text("mode")) {
        if (*v == "single") {
            cfg.mode = RunMode::single;
        } else if (*v == "automl") {
            cfg.mode = RunMode::automl;
        } else {
            r.fail(r.entries.at("mode"), "expected 'single' or 'automl'");
        }
    }
    if (auto v = r.text("family")) {
        if (!is_family(*v)) r.fail(r.entries.at("family"), "unknown model family '" + *v + "'");
        cfg.family = *v;
    }
    if (auto v = r.count("max_evals")) cfg.max_evals = *v;
    if (auto v = r.count("epochs")) cfg.budget.epochs = *v;
    if (auto v = r.count("batch_size")) cfg.budget.batch_size = *v;
    if (auto v = r.count("max_windows_per_epoch")) cfg.budget.max_windows_per_epoch = *v;
    if (auto v = r.count("hidden_width")) cfg.budget.hidden_width = *v;
    if (auto v = r.count("tree_lag")) cfg.budget.tree_lag = *v;
    if (auto v = r.number("on_threshold")) cfg.on_threshold = *v;
    if (auto v = r.count("seed")) cfg.seed = *v;
    if (auto v = r.text("output_dir")) cfg.output_dir = resolve(base_dir, *v);
    else cfg.output_dir = base_dir / cfg.output_dir;
    if (auto v = r.text("algorithm")) {
        if (*v == "tpe") {
            cfg.algorithm = hpo::Algorithm::tpe;
        } else if (*v == "random") {
            cfg.algorithm = hpo::Algorithm::random;
        } else {
            r.fail(r.entries.at("algorithm"), "expected 'tpe' or 'random'");
        }
    }
    if (auto v = r.number("tpe.gamma")) cfg.tpe.gamma = *v;
    if (auto v = r.count("tpe.n_startup")) cfg.tpe.n_startup = *v;
    if (auto v = r.count("tpe.n_candidates")) cfg.tpe.n_candidates = *v;
    if (auto v = r.number("tpe.prior_weight")) cfg.tpe.parzen.prior_weight = *v;
    if (auto v = r.text("space.families")) cfg.space_families = split_list(*v);

    for (const auto& [key, kv] : r.entries) {
        if (r.used.contains(key)) continue;
        if (key.starts_with("params.") && key.size() > 7) {
            const std::string name = key.substr(7);
            char* end = nullptr;
            const double d = std::strtod(kv.value.c_str(), &end);
            if (!kv.value.empty() && end == kv.value.c_str() + kv.value.size()) {
                cfg.params.set(name, d);
            } else {
                cfg.params.set(name, kv.value);
            }
            r.used.insert(key);
        } else if (key.starts_with("space.")) {
            const auto dot = key.find('.', 6);
            if (dot == std::string::npos || dot + 1 >= key.size()) r.fail(kv, "expected space.<family>.<hyperparameter>");
            const std::string fam = key.substr(6, dot - 6);
            if (!is_family(fam)) r.fail(kv, "unknown model family '" + fam + "'");
            try {
                cfg.space_overrides.push_back({fam, hpo::parse_param_spec(key.substr(dot + 1), kv.value)});
            } catch (const std::invalid_argument& e) {
                r.fail(kv, e.what());
            }
            r.used.insert(key);
        } else {
            r.fail(kv, "unknown key");
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    return parse_config(in, file.string(), file.parent_path());
}

}  // namespace nilmtune::runner
