#include "nilmtune/keyvalue.hpp"

#include "nilmtune/hyperparameters.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace nilmtune {

std::string to_string(const ParamValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(v));
    return buf;
}

namespace {

double parse_number(std::string_view name, const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw std::invalid_argument("hyperparameter '" + std::string(name) + "' is not numeric: '" + s + "'");
    }
    return v;
}

}  // namespace

double Hyperparameters::number(std::string_view name, double fallback) const {
    const auto it = values_.find(std::string(name));
    if (it == values_.end()) return fallback;
    if (const auto* d = std::get_if<double>(&it->second)) return *d;
    return parse_number(name, std::get<std::string>(it->second));
}

std::int64_t Hyperparameters::integer(std::string_view name, std::int64_t fallback) const {
    const double v = number(name, static_cast<double>(fallback));
    if (std::abs(v - std::round(v)) > 1e-9) {
        throw std::invalid_argument("hyperparameter '" + std::string(name) + "' must be an integer");
    }
    return static_cast<std::int64_t>(std::llround(v));
}

std::string Hyperparameters::text(std::string_view name, std::string_view fallback) const {
    const auto it = values_.find(std::string(name));
    if (it == values_.end()) return std::string(fallback);
    return to_string(it->second);
}

// ---------------------------------------------------------------------------

std::vector<KeyValue> parse_key_values(std::istream& in, const std::string& source) {
    std::vector<KeyValue> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        auto strip = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string{};
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        KeyValue kv{strip(line.substr(0, eq)), strip(line.substr(eq + 1)), line_no};
        if (kv.key.empty()) {
            throw std::invalid_argument(source + ":" + std::to_string(line_no) + ": empty key");
        }
        for (const auto& prev : out) {
            if (prev.key == kv.key) {
                throw std::invalid_argument(source + ":" + std::to_string(line_no) + ": duplicate key '" +
                                            kv.key + "'");
            }
        }
        out.push_back(std::move(kv));
    }
    return out;
}

std::vector<KeyValue> read_key_value_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    return parse_key_values(in, path.string());
}

std::vector<std::string> split_list(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto next = text.find(sep, pos);
        if (next == std::string_view::npos) next = text.size();
        auto item = text.substr(pos, next - pos);
        while (!item.empty() && (item.front() == ' ' || item.front() == '\t')) item.remove_prefix(1);
        while (!item.empty() && (item.back() == ' ' || item.back() == '\t')) item.remove_suffix(1);
        if (!item.empty()) out.emplace_back(item);
        pos = next + 1;
    }
    return out;
}

}  // namespace nilmtune
