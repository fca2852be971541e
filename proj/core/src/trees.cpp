#include "nilmtune/trees.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nilmtune {

LagFeatures build_lag_features(const PowerSeries& aggregate, std::size_t lag) {
    if (lag < 1) throw std::invalid_argument("build_lag_features: lag must be >= 1");
    const auto x = aggregate.values();
    LagFeatures out;
    out.X.rows = x.size();
    out.X.cols = lag;
    out.X.data.assign(x.size() * lag, 0.0);
    out.target_index.resize(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) {
        out.target_index[t] = t;
        for (std::size_t j = 0; j < lag; ++j) {
            // column j holds x(t - lag + 1 + j)
            const auto src = static_cast<std::ptrdiff_t>(t + j + 1) - static_cast<std::ptrdiff_t>(lag);
            if (src >= 0) out.X.data[t * lag + j] = x[static_cast<std::size_t>(src)];
        }
    }
    return out;
}

SplitCriterion parse_criterion(std::string_view name) {
    if (name == "squared_error") return SplitCriterion::squared_error;
    if (name == "friedman_mse") return SplitCriterion::friedman_mse;
    throw std::invalid_argument("unknown split criterion '" + std::string(name) + "'");
}

std::string to_string(SplitCriterion c) {
    return c == SplitCriterion::squared_error ? "squared_error" : "friedman_mse";
}

double split_gain(SplitCriterion c, double n_l, double sum_l, double sq_l, double n_r, double sum_r,
                  double sq_r) {
    if (c == SplitCriterion::friedman_mse) {
        const double diff = sum_l / n_l - sum_r / n_r;
        return n_l * n_r / (n_l + n_r) * diff * diff;
    }
    const double n = n_l + n_r;
    const double sum = sum_l + sum_r;
    const double sse_parent = (sq_l + sq_r) - sum * sum / n;
    const double sse_l = sq_l - sum_l * sum_l / n_l;
    const double sse_r = sq_r - sum_r * sum_r / n_r;
    return sse_parent - sse_l - sse_r;
}

double RegressionTree::predict_row(std::span<const double> x) const {
    if (x.size() != n_features_) throw std::invalid_argument("predict_tree: feature dimension mismatch");
    std::size_t i = 0;
    while (!nodes_[i].leaf) i = x[nodes_[i].feature] < nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
    return nodes_[i].mean;
}

std::size_t RegressionTree::depth() const {
    if (nodes_.empty()) return 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    std::size_t deepest = 0;
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (!nodes_[i].leaf) {
            stack.emplace_back(nodes_[i].left, d + 1);
            stack.emplace_back(nodes_[i].right, d + 1);
        }
    }
    return deepest;
}

namespace {

struct BestSplit {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

BestSplit find_split(const FeatureMatrix& X, std::span<const double> y, std::span<const std::size_t> idx,
                     const CartParams& params, std::mt19937_64& rng) {
    const std::size_t n = idx.size();
    double mean = 0.0;
    for (std::size_t i : idx) mean += y[i];
    mean /= static_cast<double>(n);
    double sse_parent = 0.0;
    for (std::size_t i : idx) sse_parent += (y[i] - mean) * (y[i] - mean);
    if (sse_parent <= 0.0) return {};

    std::vector<std::size_t> features(X.cols);
    std::iota(features.begin(), features.end(), 0);
    if (params.feature_fraction < 1.0) {
        const auto m = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::lround(params.feature_fraction * static_cast<double>(X.cols))));
        for (std::size_t i = 0; i < m; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, X.cols - 1);
            std::swap(features[i], features[pick(rng)]);
        }
        features.resize(m);
        std::sort(features.begin(), features.end());
    }

    const double tol = 1e-12 * sse_parent;
    BestSplit best;
    best.gain = tol;
    std::vector<std::size_t> order(idx.begin(), idx.end());
    for (std::size_t f : features) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return X.at(a, f) < X.at(b, f); });
        // centred targets keep the sums well conditioned
        double sum_all = 0.0, sq_all = 0.0;
        for (std::size_t i : order) {
            const double c = y[i] - mean;
            sum_all += c;
            sq_all += c * c;
        }
        double sum_l = 0.0, sq_l = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            const double c = y[order[p]] - mean;
            sum_l += c;
            sq_l += c * c;
            const double lo = X.at(order[p], f);
            const double hi = X.at(order[p + 1], f);
            if (!(lo < hi)) continue;
            const auto n_l = static_cast<double>(p + 1);
            const auto n_r = static_cast<double>(n - p - 1);
            const double gain = split_gain(params.criterion, n_l, sum_l, sq_l, n_r, sum_all - sum_l, sq_all - sq_l);
            if (gain > best.gain) {
                double thr = lo + (hi - lo) / 2.0;
                if (!(thr > lo)) thr = hi;
                best = BestSplit{true, f, thr, gain};
            }
        }
        order.assign(idx.begin(), idx.end());
    }
    return best;
}

RegressionTree grow_tree(const FeatureMatrix& X, std::span<const double> y, std::vector<std::size_t> root_idx,
                         const CartParams& params, std::mt19937_64& rng) {
    using Node = RegressionTree::Node;
    std::vector<Node> nodes;
    struct Work {
        std::size_t node;
        std::vector<std::size_t> idx;
        std::size_t depth;
    };
    nodes.emplace_back();
    std::vector<Work> stack;
    stack.push_back({0, std::move(root_idx), 0});
    while (!stack.empty()) {
        Work w = std::move(stack.back());
        stack.pop_back();
        double mean = 0.0;
        for (std::size_t i : w.idx) mean += y[i];
        mean /= static_cast<double>(w.idx.size());
        nodes[w.node].leaf = true;
        nodes[w.node].mean = mean;
        nodes[w.node].n = w.idx.size();

        if (w.idx.size() < params.min_samples_split || w.depth >= params.max_depth) continue;
        const BestSplit split = find_split(X, y, w.idx, params, rng);
        if (!split.found) continue;

        std::vector<std::size_t> left, right;
        for (std::size_t i : w.idx) (X.at(i, split.feature) < split.threshold ? left : right).push_back(i);
        if (left.empty() || right.empty()) continue;

        const std::size_t l = nodes.size();
        nodes.emplace_back();
        nodes.emplace_back();
        Node& parent = nodes[w.node];
        parent.leaf = false;
        parent.feature = split.feature;
        parent.threshold = split.threshold;
        parent.left = l;
        parent.right = l + 1;
        stack.push_back({l + 1, std::move(right), w.depth + 1});
        stack.push_back({l, std::move(left), w.depth + 1});
    }
    return RegressionTree(std::move(nodes), X.cols);
}

void check_training_set(const FeatureMatrix& X, std::span<const double> y) {
    if (X.rows == 0 || y.empty()) throw std::invalid_argument("fit_cart: empty training set");
    if (X.rows != y.size() || X.data.size() != X.rows * X.cols) {
        throw std::invalid_argument("fit_cart: X and y disagree in size");
    }
}

}  // namespace

RegressionTree fit_cart(const FeatureMatrix& X, std::span<const double> y, const CartParams& params,
                        std::uint64_t seed) {
    check_training_set(X, y);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(X.rows);
    std::iota(idx.begin(), idx.end(), 0);
    return grow_tree(X, y, std::move(idx), params, rng);
}

double ForestModel::predict_row(std::span<const double> x) const {
    if (trees_.empty()) throw std::logic_error("forest has no trees");
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict_row(x);
    return sum / static_cast<double>(trees_.size());
}

ForestModel fit_forest(const FeatureMatrix& X, std::span<const double> y, const ForestParams& params,
                       std::uint64_t seed) {
    if (params.n_estimators < 1) throw std::invalid_argument("fit_forest: n_estimators must be >= 1");
    check_training_set(X, y);
    std::vector<RegressionTree> trees;
    std::vector<std::uint64_t> seeds;
    for (std::size_t b = 0; b < params.n_estimators; ++b) {
        const std::uint64_t tree_seed = seed + b;
        std::mt19937_64 rng(tree_seed);
        std::vector<std::size_t> idx(X.rows);
        if (params.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, X.rows - 1);
            for (auto& i : idx) i = pick(rng);
            std::sort(idx.begin(), idx.end());
        } else {
            std::iota(idx.begin(), idx.end(), 0);
        }
        trees.push_back(grow_tree(X, y, std::move(idx), params.tree, rng));
        seeds.push_back(tree_seed);
    }
    return ForestModel(std::move(trees), std::move(seeds));
}

namespace {

template <class Model>
std::vector<double> predict_rows(const Model& m, const FeatureMatrix& X) {
    std::vector<double> out(X.rows);
    for (std::size_t r = 0; r < X.rows; ++r) out[r] = std::max(0.0, m.predict_row(X.row(r)));
    return out;
}

}  // namespace

std::vector<double> predict_tree(const RegressionTree& tree, const FeatureMatrix& X) {
    if (X.cols != tree.n_features()) throw std::invalid_argument("predict_tree: feature dimension mismatch");
    return predict_rows(tree, X);
}

std::vector<double> predict_tree(const ForestModel& forest, const FeatureMatrix& X) {
    for (const auto& t : forest.trees()) {
        if (X.cols != t.n_features()) throw std::invalid_argument("predict_tree: feature dimension mismatch");
    }
    return predict_rows(forest, X);
}

void save_tree(std::ostream& out, const RegressionTree& tree) {
    out << "tree " << tree.nodes().size() << ' ' << tree.n_features() << '\n';
    char buf[96];
    for (const auto& n : tree.nodes()) {
        if (n.leaf) {
            std::snprintf(buf, sizeof buf, "L %.17g %zu\n", n.mean, n.n);
        } else {
            std::snprintf(buf, sizeof buf, "S %zu %.17g %zu %zu\n", n.feature, n.threshold, n.left, n.right);
        }
        out << buf;
    }
}

RegressionTree load_tree(std::istream& in) {
    std::string word;
    std::size_t count = 0, features = 0;
    if (!(in >> word >> count >> features) || word != "tree") throw std::runtime_error("load_tree: bad header");
    std::vector<RegressionTree::Node> nodes(count);
    for (auto& n : nodes) {
        if (!(in >> word)) throw std::runtime_error("load_tree: truncated");
        if (word == "L") {
            n.leaf = true;
            in >> n.mean >> n.n;
        } else if (word == "S") {
            n.leaf = false;
            in >> n.feature >> n.threshold >> n.left >> n.right;
            if (n.left >= count || n.right >= count) throw std::runtime_error("load_tree: bad child index");
        } else {
            throw std::runtime_error("load_tree: bad node tag '" + word + "'");
        }
        if (!in) throw std::runtime_error("load_tree: truncated");
    }
    return RegressionTree(std::move(nodes), features);
}

void save_forest(std::ostream& out, const ForestModel& forest) {
    out << "forest " << forest.trees().size() << '\n';
    for (std::size_t i = 0; i < forest.trees().size(); ++i) {
        out << "seed " << forest.seeds()[i] << '\n';
        save_tree(out, forest.trees()[i]);
    }
}

// ---------------------------------------------------------------------------

TreeDisaggregator::TreeDisaggregator(bool forest, ForestParams params, std::size_t lag, std::uint64_t seed)
    : forest_(forest), params_(params), lag_(lag), seed_(seed) {
    if (lag_ < 1) throw std::invalid_argument("tree lag must be >= 1");
    if (params_.tree.min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
    if (forest_ && params_.n_estimators < 1) throw std::invalid_argument("n_estimators must be >= 1");
}

void TreeDisaggregator::fit(const AlignedDataset& train, const AlignedDataset& /*val*/,
                            const std::vector<std::string>& targets) {
    targets_ = targets;
    trees_.clear();
    forests_.clear();
    const LagFeatures f = build_lag_features(train.aggregate(), lag_);
    for (const auto& label : targets) {
        const auto y = train.appliance(label).values();
        if (forest_) {
            forests_.push_back(fit_forest(f.X, y, params_, seed_));
        } else {
            trees_.push_back(fit_cart(f.X, y, params_.tree, seed_));
        }
    }
}

std::vector<PowerSeries> TreeDisaggregator::predict(const PowerSeries& aggregate) const {
    if (targets_.empty()) throw std::logic_error(family() + ": predict before fit");
    const LagFeatures f = build_lag_features(aggregate, lag_);
    std::vector<PowerSeries> out;
    for (std::size_t i = 0; i < targets_.size(); ++i) {
        auto v = forest_ ? predict_tree(forests_[i], f.X) : predict_tree(trees_[i], f.X);
        out.emplace_back(targets_[i], aggregate.start_time(), aggregate.period(), std::move(v));
    }
    return out;
}

void TreeDisaggregator::save(std::ostream& out) const {
    out << "family " << family() << "\nlag " << lag_ << "\ncriterion " << to_string(params_.tree.criterion)
        << "\nmin_samples_split " << params_.tree.min_samples_split << "\n";
    for (std::size_t i = 0; i < targets_.size(); ++i) {
        out << "target " << targets_[i] << '\n';
        if (forest_) {
            save_forest(out, forests_[i]);
        } else {
            save_tree(out, trees_[i]);
        }
    }
}

}  // namespace nilmtune
