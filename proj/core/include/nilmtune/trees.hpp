#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nilmtune/disaggregator.hpp"
#include "nilmtune/timeseries.hpp"

namespace nilmtune {

/// Dense row-major feature matrix.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

struct LagFeatures {
    FeatureMatrix X;
    std::vector<std::size_t> target_index;  // grid index each row predicts
};

/// Row t = [x(t - lag + 1), ..., x(t)], zero-padded on the left.
LagFeatures build_lag_features(const PowerSeries& aggregate, std::size_t lag);

enum class SplitCriterion { squared_error, friedman_mse };

SplitCriterion parse_criterion(std::string_view name);
std::string to_string(SplitCriterion c);

struct CartParams {
    SplitCriterion criterion = SplitCriterion::squared_error;
    std::size_t min_samples_split = 2;
    std::size_t max_depth = 20;
    /// Fraction of features examined at each split; 1.0 examines all.
    double feature_fraction = 1.0;
};

/// Flat array tree. Internal nodes route x[feature] < threshold to `left`.
class RegressionTree {
public:
    struct Node {
        bool leaf = true;
        std::size_t feature = 0;
        double threshold = 0.0;
        std::size_t left = 0;
        std::size_t right = 0;
        double mean = 0.0;
        std::size_t n = 0;
    };

    RegressionTree() = default;
    explicit RegressionTree(std::vector<Node> nodes, std::size_t n_features)
        : nodes_(std::move(nodes)), n_features_(n_features) {}

    double predict_row(std::span<const double> x) const;
    std::size_t n_features() const noexcept { return n_features_; }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    std::size_t depth() const;

private:
    std::vector<Node> nodes_;
    std::size_t n_features_ = 0;
};

/// Split score under the two criteria, for a parent split into
/// (n_left, sum_left, sumsq_left) and (n_right, ...).
double split_gain(SplitCriterion c, double n_l, double sum_l, double sq_l, double n_r, double sum_r,
                  double sq_r);

RegressionTree fit_cart(const FeatureMatrix& X, std::span<const double> y, const CartParams& params,
                        std::uint64_t seed);

struct ForestParams {
    std::size_t n_estimators = 10;
    CartParams tree;
    bool bootstrap = true;
};

class ForestModel {
public:
    ForestModel() = default;
    ForestModel(std::vector<RegressionTree> trees, std::vector<std::uint64_t> seeds)
        : trees_(std::move(trees)), seeds_(std::move(seeds)) {}

    double predict_row(std::span<const double> x) const;
    const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
    const std::vector<std::uint64_t>& seeds() const noexcept { return seeds_; }

private:
    std::vector<RegressionTree> trees_;
    std::vector<std::uint64_t> seeds_;
};

ForestModel fit_forest(const FeatureMatrix& X, std::span<const double> y, const ForestParams& params,
                       std::uint64_t seed);

/// Predictions clamped at zero watts. Throws on feature dimension mismatch.
std::vector<double> predict_tree(const RegressionTree& tree, const FeatureMatrix& X);
std::vector<double> predict_tree(const ForestModel& forest, const FeatureMatrix& X);

void save_tree(std::ostream& out, const RegressionTree& tree);
RegressionTree load_tree(std::istream& in);
void save_forest(std::ostream& out, const ForestModel& forest);

/// Decision tree or random forest over lag windows of the aggregate, one
/// model per target appliance.
class TreeDisaggregator final : public Disaggregator {
public:
    TreeDisaggregator(bool forest, ForestParams params, std::size_t lag, std::uint64_t seed);

    std::string family() const override { return forest_ ? "rf" : "dt"; }
    void fit(const AlignedDataset& train, const AlignedDataset& val,
             const std::vector<std::string>& targets) override;
    std::vector<PowerSeries> predict(const PowerSeries& aggregate) const override;
    void save(std::ostream& out) const override;

private:
    bool forest_;
    ForestParams params_;
    std::size_t lag_;
    std::uint64_t seed_;
    std::vector<std::string> targets_;
    std::vector<RegressionTree> trees_;
    std::vector<ForestModel> forests_;
};

}  // namespace nilmtune
