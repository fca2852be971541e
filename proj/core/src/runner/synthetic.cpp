#include "nilmtune/runner/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <stdexcept>

#include "nilmtune/keyvalue.hpp"
#include "nilmtune/runner/config.hpp"

namespace nilmtune::runner {

void SyntheticHouseSpec::validate() const {
    if (appliances.empty()) throw std::invalid_argument("synthetic house: no appliances");
    for (const auto& a : appliances) {
        if (a.label.empty()) throw std::invalid_argument("synthetic house: unnamed appliance");
        if (!(a.on_power > 0.0) || !std::isfinite(a.on_power)) {
            throw std::invalid_argument("synthetic house: '" + a.label + "' on_power must be > 0");
        }
        if (!(a.stay_on > 0.0 && a.stay_on < 1.0) || !(a.stay_off > 0.0 && a.stay_off < 1.0)) {
            throw std::invalid_argument("synthetic house: '" + a.label + "' dwell probabilities must lie in (0, 1)");
        }
    }
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw std::invalid_argument("synthetic house: noise_std must be >= 0");
    if (samples == 0) throw std::invalid_argument("synthetic house: duration must be > 0");
    if (period <= 0) throw std::invalid_argument("synthetic house: period must be > 0");
}

AlignedDataset generate_synthetic(const SyntheticHouseSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> total(spec.samples, 0.0);
    std::vector<PowerSeries> channels;
    for (const auto& a : spec.appliances) {
        const double p_on = (1.0 - a.stay_off) / ((1.0 - a.stay_on) + (1.0 - a.stay_off));
        bool on = u(rng) < p_on;
        std::vector<double> values(spec.samples);
        for (std::size_t t = 0; t < spec.samples; ++t) {
            if (t > 0) on = u(rng) < (on ? a.stay_on : 1.0 - a.stay_off);
            values[t] = on ? a.on_power : 0.0;
            total[t] += values[t];
        }
        channels.emplace_back(a.label, spec.start, spec.period, std::move(values));
    }
    if (spec.noise_std > 0.0) {
        std::normal_distribution<double> noise(0.0, spec.noise_std);
        for (double& x : total) x = std::max(0.0, x + noise(rng));
    }
    return AlignedDataset(PowerSeries("aggregate", spec.start, spec.period, std::move(total)), std::move(channels));
}

namespace {

double to_number(const KeyValue& kv, const std::string& source) {
    char* end = nullptr;
    const double v = std::strtod(kv.value.c_str(), &end);
    if (kv.value.empty() || end != kv.value.c_str() + kv.value.size()) {
        throw ConfigError(source + ":" + std::to_string(kv.line) + ": '" + kv.key + "' expects a number");
    }
    return v;
}

}  // namespace

SyntheticHouseSpec parse_synthetic_spec(std::istream& in, const std::string& source) {
    std::vector<KeyValue> entries;
    try {
        entries = parse_key_values(in, source);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    SyntheticHouseSpec spec;
    double duration_days = -1.0;
    double samples = -1.0;
    for (const auto& kv : entries) {
        const auto fail = [&](const std::string& what) {
            throw ConfigError(source + ":" + std::to_string(kv.line) + ": '" + kv.key + "': " + what);
        };
        if (kv.key == "start") {
            try {
                spec.start = parse_utc_date(kv.value);
            } catch (const std::exception& e) {
                fail(e.what());
            }
        } else if (kv.key == "duration_days") {
            duration_days = to_number(kv, source);
        } else if (kv.key == "samples") {
            samples = to_number(kv, source);
        } else if (kv.key == "period") {
            spec.period = static_cast<Seconds>(to_number(kv, source));
        } else if (kv.key == "noise_std") {
            spec.noise_std = to_number(kv, source);
        } else if (kv.key == "seed") {
            spec.seed = static_cast<std::uint64_t>(to_number(kv, source));
        } else if (kv.key.starts_with("appliance.")) {
            const auto dot = kv.key.rfind('.');
            if (dot <= 10) fail("expected appliance.<label>.<field>");
            const std::string label = kv.key.substr(10, dot - 10);
            const std::string field = kv.key.substr(dot + 1);
            auto it = std::find_if(spec.appliances.begin(), spec.appliances.end(),
                                   [&](const SyntheticAppliance& a) { return a.label == label; });
            if (it == spec.appliances.end()) {
                spec.appliances.push_back({label, 0.0, 0.9, 0.9});
                it = spec.appliances.end() - 1;
            }
            const double v = to_number(kv, source);
            if (field == "on_power") {
                it->on_power = v;
            } else if (field == "stay_on") {
                it->stay_on = v;
            } else if (field == "stay_off") {
                it->stay_off = v;
            } else {
                fail("unknown appliance field '" + field + "'");
            }
        } else {
            fail("unknown key");
        }
    }
    if (duration_days >= 0 && samples >= 0) throw ConfigError(source + ": give either duration_days or samples");
    if (samples >= 0) {
        spec.samples = static_cast<std::size_t>(samples);
    } else if (duration_days >= 0 && spec.period > 0) {
        spec.samples = static_cast<std::size_t>(std::llround(duration_days * 86400.0 / static_cast<double>(spec.period)));
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return spec;
}

SyntheticHouseSpec load_synthetic_spec(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open synthetic-house spec " + file.string());
    return parse_synthetic_spec(in, file.string());
}

}  // namespace nilmtune::runner
