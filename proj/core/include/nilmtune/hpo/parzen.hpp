#pragma once

#include <random>
#include <span>
#include <vector>

#include "nilmtune/hpo/space.hpp"

namespace nilmtune::hpo {

struct ParzenConfig {
    double prior_weight = 1.0;
    /// Bandwidth bounds as fractions of (hi - lo).
    double min_bandwidth_fraction = 0.01;
    double max_bandwidth_fraction = 1.0;
};

/// Mixture of Gaussians truncated to [lo, hi], one per observation, plus a
/// uniform prior component of weight prior_weight / (n + prior_weight).
class TruncatedMixture {
public:
    TruncatedMixture(std::span<const double> observations, double lo, double hi, const ParzenConfig& cfg);

    double pdf(double x) const;
    double sample(std::mt19937_64& rng) const;

    const std::vector<double>& means() const noexcept { return means_; }
    const std::vector<double>& bandwidths() const noexcept { return sigmas_; }

private:
    double lo_, hi_;
    double prior_weight_;
    std::vector<double> means_;
    std::vector<double> sigmas_;
    std::vector<double> masses_;  // probability of each Gaussian inside [lo, hi]
};

/// Density over the values of one ParamSpec, fitted to observed values.
/// Choice: probability of option o is (count_o + prior_weight) normalised.
/// QUniform: the continuous mixture evaluated on the lattice, renormalised.
class ParzenEstimator {
public:
    ParzenEstimator(const ParamSpec& spec, std::span<const ParamValue> observations, const ParzenConfig& cfg = {});

    /// Density (Uniform) or probability mass (Choice, QUniform). Throws
    /// for values outside the domain.
    double pdf(const ParamValue& x) const;
    ParamValue sample(std::mt19937_64& rng) const;

private:
    const ParamSpec* spec_;
    std::vector<double> probabilities_;  // per option or per lattice point
    std::vector<double> lattice_;
    std::vector<TruncatedMixture> mixture_;  // empty for Choice
};

}  // namespace nilmtune::hpo
