#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "nilmtune/hyperparameters.hpp"

namespace nilmtune::hpo {

struct ParamSpec;

/// One option of a Choice and the parameters that exist only when it is chosen.
struct ChoiceOption {
    ParamValue value;
    std::vector<ParamSpec> subspace;
};

/// Choice{name, options}, Uniform{name, lo, hi} or QUniform{name, lo, hi, q}.
struct ParamSpec {
    enum class Kind { choice, uniform, quniform };

    Kind kind = Kind::uniform;
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    double q = 0.0;
    std::vector<ChoiceOption> options;

    static ParamSpec choice(std::string name, std::vector<ChoiceOption> options);
    static ParamSpec choice(std::string name, const std::vector<ParamValue>& values);
    static ParamSpec uniform(std::string name, double lo, double hi);
    static ParamSpec quniform(std::string name, double lo, double hi, double q);

    bool is_choice() const noexcept { return kind == Kind::choice; }
    /// Index of `v` among the options; throws if absent.
    std::size_t option_index(const ParamValue& v) const;
    /// True when `v` is a legal value: an option, a number in [lo, hi], or
    /// a lattice point for QUniform.
    bool admits(const ParamValue& v) const;
    /// Lattice of a QUniform spec, ascending.
    std::vector<double> lattice() const;
};

/// A sequence of independent top-level parameters, each possibly
/// conditional on its own Choice branches.
struct SearchSpace {
    std::vector<ParamSpec> params;

    /// lo < hi, q > 0, non-empty choices, unique names on every path.
    void validate() const;
};

using Configuration = Hyperparameters;

/// round(x / q) * q, then clamped to [lo, hi].
double quantize(double x, double lo, double hi, double q);

Configuration sample_random(const SearchSpace& space, std::mt19937_64& rng);

/// Checks bounds, lattices and that exactly the active branch parameters
/// are present. On failure `why` (if given) names the offending parameter.
bool satisfies(const SearchSpace& space, const Configuration& config, std::string* why = nullptr);

/// Every family name the default space offers, in root order.
const std::vector<std::string>& all_families();

/// The hyperparameters a family consumes, as the subtree under its root
/// option.
std::vector<ParamSpec> default_family_space(std::string_view family);

/// Root Choice "family" over `families` (all 11 if empty), each with its
/// default subtree.
SearchSpace default_search_space(const std::vector<std::string>& families = {});

/// Replaces parameter `name` inside `family`'s subtree. Throws if the
/// family is not in the space or does not consume `name`.
void override_param(SearchSpace& space, std::string_view family, const ParamSpec& replacement);

/// Parses an override: "a, b, c" is a Choice (numbers where they parse),
/// "lo..hi" a Uniform, "lo..hi/q" a QUniform.
ParamSpec parse_param_spec(std::string name, std::string_view text);

}  // namespace nilmtune::hpo
