#include "nilmtune/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace nilmtune {

double mae(std::span<const double> truth, std::span<const double> pred) {
    if (truth.size() != pred.size()) throw std::invalid_argument("mae: length mismatch");
    if (truth.empty()) throw std::invalid_argument("mae: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (is_gap(truth[i]) || is_gap(pred[i])) throw std::invalid_argument("mae: gap in input");
        sum += std::abs(truth[i] - pred[i]);
    }
    return sum / static_cast<double>(truth.size());
}

std::vector<bool> on_off_states(std::span<const double> values, double threshold) {
    if (!(threshold >= 0.0)) throw std::invalid_argument("on_off_states: threshold must be >= 0");
    std::vector<bool> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] > threshold;
    return out;
}

double classification_accuracy(const std::vector<bool>& truth, const std::vector<bool>& pred) {
    if (truth.size() != pred.size()) throw std::invalid_argument("classification_accuracy: length mismatch");
    if (truth.empty()) throw std::invalid_argument("classification_accuracy: empty input");
    std::size_t tp = 0;
    std::size_t tn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] && pred[i]) ++tp;
        if (!truth[i] && !pred[i]) ++tn;
    }
    return static_cast<double>(tp + tn) / static_cast<double>(truth.size());
}

MetricReport evaluate(const AlignedDataset& truth, std::span<const PowerSeries> predictions,
                      double threshold_watts) {
    if (predictions.empty()) throw std::invalid_argument("evaluate: no predictions");
    MetricReport report;
    report.n_samples = truth.size();
    report.threshold_watts = threshold_watts;
    for (const auto& p : predictions) {
        const auto& t = truth.appliance(p.label());
        if (p.size() != t.size() || p.start_time() != t.start_time() || p.period() != t.period()) {
            throw std::invalid_argument("evaluate: prediction '" + p.label() + "' is off the truth grid");
        }
        ApplianceScore score;
        score.label = p.label();
        score.mae = mae(t.values(), p.values());
        score.accuracy = classification_accuracy(on_off_states(t.values(), threshold_watts),
                                                 on_off_states(p.values(), threshold_watts));
        report.mean_mae += score.mae;
        report.mean_accuracy += score.accuracy;
        report.appliances.push_back(std::move(score));
    }
    report.mean_mae /= static_cast<double>(predictions.size());
    report.mean_accuracy /= static_cast<double>(predictions.size());
    return report;
}

}  // namespace nilmtune
