#include "nilmtune/hpo/parzen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace nilmtune::hpo {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

std::size_t draw_index(std::span<const double> weights, std::mt19937_64& rng) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    return weights.size() - 1;
}

}  // namespace

TruncatedMixture::TruncatedMixture(std::span<const double> observations, double lo, double hi,
                                   const ParzenConfig& cfg)
    : lo_(lo), hi_(hi), prior_weight_(cfg.prior_weight), means_(observations.begin(), observations.end()) {
    if (!(lo < hi)) throw std::invalid_argument("TruncatedMixture: lo must be < hi");
    if (!(cfg.prior_weight > 0.0)) throw std::invalid_argument("TruncatedMixture: prior weight must be > 0");
    std::sort(means_.begin(), means_.end());
    const double range = hi - lo;
    const double min_bw = cfg.min_bandwidth_fraction * range;
    const double max_bw = cfg.max_bandwidth_fraction * range;
    const std::size_t n = means_.size();
    sigmas_.resize(n);
    masses_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (means_[i] < lo || means_[i] > hi) throw std::invalid_argument("TruncatedMixture: observation outside domain");
        double bw = n == 1 ? max_bw : 0.0;
        if (i > 0) bw = std::max(bw, means_[i] - means_[i - 1]);
        if (i + 1 < n) bw = std::max(bw, means_[i + 1] - means_[i]);
        sigmas_[i] = std::clamp(bw, min_bw, max_bw);
        masses_[i] = normal_cdf((hi - means_[i]) / sigmas_[i]) - normal_cdf((lo - means_[i]) / sigmas_[i]);
    }
}

double TruncatedMixture::pdf(double x) const {
    if (!(x >= lo_ && x <= hi_)) throw std::invalid_argument("parzen_pdf: value outside domain");
    const double total = static_cast<double>(means_.size()) + prior_weight_;
    double density = prior_weight_ / (hi_ - lo_);
    for (std::size_t i = 0; i < means_.size(); ++i) {
        density += normal_pdf((x - means_[i]) / sigmas_[i]) / (sigmas_[i] * masses_[i]);
    }
    return density / total;
}

double TruncatedMixture::sample(std::mt19937_64& rng) const {
    std::vector<double> weights(means_.size(), 1.0);
    weights.push_back(prior_weight_);
    const std::size_t c = draw_index(weights, rng);
    if (c == means_.size()) return lo_ + (hi_ - lo_) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::normal_distribution<double> z(0.0, 1.0);
    for (;;) {
        const double x = means_[c] + sigmas_[c] * z(rng);
        if (x >= lo_ && x <= hi_) return x;
    }
}

ParzenEstimator::ParzenEstimator(const ParamSpec& spec, std::span<const ParamValue> observations,
                                 const ParzenConfig& cfg)
    : spec_(&spec) {
    if (spec.is_choice()) {
        probabilities_.assign(spec.options.size(), cfg.prior_weight);
        for (const auto& v : observations) probabilities_[spec.option_index(v)] += 1.0;
        const double total = std::accumulate(probabilities_.begin(), probabilities_.end(), 0.0);
        for (double& p : probabilities_) p /= total;
        return;
    }
    std::vector<double> xs;
    for (const auto& v : observations) {
        if (!spec.admits(v)) throw std::invalid_argument("parzen: observation outside the domain of '" + spec.name + "'");
        xs.push_back(std::get<double>(v));
    }
    mixture_.emplace_back(xs, spec.lo, spec.hi, cfg);
    if (spec.kind == ParamSpec::Kind::quniform) {
        lattice_ = spec.lattice();
        for (double x : lattice_) probabilities_.push_back(mixture_.front().pdf(x));
        const double total = std::accumulate(probabilities_.begin(), probabilities_.end(), 0.0);
        for (double& p : probabilities_) p /= total;
    }
}

double ParzenEstimator::pdf(const ParamValue& x) const {
    if (!spec_->admits(x)) throw std::invalid_argument("parzen_pdf: value outside the domain of '" + spec_->name + "'");
    if (spec_->is_choice()) return probabilities_[spec_->option_index(x)];
    const double v = std::get<double>(x);
    if (lattice_.empty()) return mixture_.front().pdf(v);
    const auto it = std::lower_bound(lattice_.begin(), lattice_.end(), v - 1e-9 * spec_->q);
    return probabilities_[static_cast<std::size_t>(it - lattice_.begin())];
}

ParamValue ParzenEstimator::sample(std::mt19937_64& rng) const {
    if (spec_->is_choice()) return spec_->options[draw_index(probabilities_, rng)].value;
    if (lattice_.empty()) return mixture_.front().sample(rng);
    return lattice_[draw_index(probabilities_, rng)];
}

}  // namespace nilmtune::hpo
