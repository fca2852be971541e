#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>

namespace nilmtune {

/// A hyperparameter value: numeric draws are doubles, categorical draws are
/// option labels.
using ParamValue = std::variant<double, std::string>;

std::string to_string(const ParamValue& v);

/// Named hyperparameter values for one model family, with typed accessors
/// that accept numeric labels ("0.001") wherever a number is expected.
class Hyperparameters {
public:
    Hyperparameters() = default;
    explicit Hyperparameters(std::map<std::string, ParamValue> values) : values_(std::move(values)) {}

    void set(std::string name, ParamValue value) { values_[std::move(name)] = std::move(value); }
    bool contains(std::string_view name) const { return values_.find(std::string(name)) != values_.end(); }

    double number(std::string_view name, double fallback) const;
    std::int64_t integer(std::string_view name, std::int64_t fallback) const;
    std::string text(std::string_view name, std::string_view fallback) const;

    const std::map<std::string, ParamValue>& values() const noexcept { return values_; }

private:
    std::map<std::string, ParamValue> values_;
};

}  // namespace nilmtune
