#include "nilmtune/runner/trial_log.hpp"

#include <cmath>
#include <istream>
#include <limits>

#include <json.hpp>

namespace nilmtune::runner {

using nlohmann::json;

namespace {

json to_json(const hpo::Trial& t, bool with_time) {
    json hp = json::object();
    std::string family;
    for (const auto& [name, value] : t.config.values()) {
        if (name == "family") {
            family = to_string(value);
            continue;
        }
        if (const auto* d = std::get_if<double>(&value)) {
            hp[name] = *d;
        } else {
            hp[name] = std::get<std::string>(value);
        }
    }
    json j;
    j["id"] = t.id;
    j["family"] = family;
    j["hyperparameters"] = hp;
    j["validation_mae"] = t.ok() ? json(t.loss) : json(nullptr);
    const auto test = t.aux.find("test_mae");
    j["test_mae"] = test != t.aux.end() ? json(test->second) : json(nullptr);
    const auto acc = t.aux.find("accuracy");
    j["accuracy"] = acc != t.aux.end() ? json(acc->second) : json(nullptr);
    j["status"] = hpo::to_string(t.status);
    j["seed"] = t.seed;
    j["error"] = t.error;
    if (with_time) j["wall_time_s"] = t.wall_seconds;
    return j;
}

}  // namespace

std::string format_trial_record(const hpo::Trial& trial) { return to_json(trial, true).dump(); }

std::string format_trial_record_without_time(const hpo::Trial& trial) { return to_json(trial, false).dump(); }

hpo::Trial parse_trial_record(const std::string& line) {
    const json j = json::parse(line);
    if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
    hpo::Trial t;
    t.id = j.at("id").get<std::size_t>();
    const auto family = j.at("family").get<std::string>();
    if (!family.empty()) t.config.set("family", family);
    for (const auto& [name, value] : j.at("hyperparameters").items()) {
        if (value.is_number()) {
            t.config.set(name, value.get<double>());
        } else if (value.is_string()) {
            t.config.set(name, value.get<std::string>());
        } else {
            throw std::invalid_argument("hyperparameter '" + name + "' is neither a number nor a string");
        }
    }
    t.status = hpo::parse_trial_status(j.at("status").get<std::string>());
    const auto& loss = j.at("validation_mae");
    if (t.ok()) {
        if (!loss.is_number()) throw std::invalid_argument("ok trial without validation_mae");
        t.loss = loss.get<double>();
    } else {
        t.loss = std::numeric_limits<double>::infinity();
    }
    if (const auto& v = j.at("test_mae"); !v.is_null()) t.aux["test_mae"] = v.get<double>();
    if (const auto& v = j.at("accuracy"); !v.is_null()) t.aux["accuracy"] = v.get<double>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.error = j.value("error", std::string());
    t.wall_seconds = j.value("wall_time_s", 0.0);
    return t;
}

TrialLogError::TrialLogError(std::size_t line, const std::string& what, hpo::TrialHistory history)
    : std::runtime_error("trial log line " + std::to_string(line) + ": " + what),
      line_(line),
      history_(std::move(history)) {}

hpo::TrialHistory replay_log(std::istream& in) {
    hpo::TrialHistory history;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            history.push_back(parse_trial_record(line));
        } catch (const std::exception& e) {
            throw TrialLogError(line_no, e.what(), std::move(history));
        }
    }
    return history;
}

hpo::TrialHistory replay_log(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open trial log " + file.string());
    return replay_log(in);
}

TrialLogWriter::TrialLogWriter(const std::filesystem::path& file, bool append)
    : path_(file), out_(file, append ? std::ios::app : std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open trial log " + file.string() + " for writing");
}

void TrialLogWriter::write(const hpo::Trial& trial) {
    out_ << format_trial_record(trial) << '\n';
    out_.flush();
    if (!out_) throw std::runtime_error("failed writing trial log " + path_.string());
}

}  // namespace nilmtune::runner
