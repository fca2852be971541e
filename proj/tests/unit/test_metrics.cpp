#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "nilmtune/metrics.hpp"

using namespace nilmtune;

TEST(Mae, HandFixtures) {
    const std::vector<double> t{0, 100, 100};
    EXPECT_EQ(mae(t, t), 0.0);
    EXPECT_DOUBLE_EQ(mae(t, std::vector<double>{0, 90, 110}), 20.0 / 3.0);
    EXPECT_DOUBLE_EQ(mae(t, std::vector<double>{0, 0, 0}), 200.0 / 3.0);
}

TEST(Mae, Errors) {
    EXPECT_THROW(mae(std::vector<double>{1}, std::vector<double>{1, 2}), std::invalid_argument);
    EXPECT_THROW(mae(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}

TEST(Mae, DetectsTranslation) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 500), c(-50, 50);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(37), y(37);
        const double shift = c(rng);
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] = u(rng)) + shift;
        EXPECT_NEAR(mae(x, y), std::abs(shift), 1e-9);
    }
}

TEST(OnOff, StrictThreshold) {
    EXPECT_EQ(on_off_states(std::vector<double>{0, 5, 15}, 10), (std::vector<bool>{false, false, true}));
    EXPECT_EQ(on_off_states(std::vector<double>{0, 0}, 0), (std::vector<bool>{false, false}));
    EXPECT_EQ(on_off_states(std::vector<double>{10}, 10), (std::vector<bool>{false}));
}

TEST(Accuracy, HandFixtures) {
    const std::vector<bool> truth{true, true, false, false, true};
    const std::vector<bool> pred{true, false, false, true, true};
    EXPECT_DOUBLE_EQ(classification_accuracy(truth, pred), 0.6);
    EXPECT_EQ(classification_accuracy(truth, truth), 1.0);
    std::vector<bool> flipped;
    for (bool b : truth) flipped.push_back(!b);
    EXPECT_EQ(classification_accuracy(truth, flipped), 0.0);
    EXPECT_THROW(classification_accuracy(truth, std::vector<bool>{true}), std::invalid_argument);
    EXPECT_THROW(classification_accuracy({}, {}), std::invalid_argument);
}

TEST(Accuracy, PermutationInvariant) {
    std::mt19937_64 rng(8);
    std::bernoulli_distribution b(0.5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<bool> t(23), p(23);
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = b(rng);
            p[i] = b(rng);
        }
        std::vector<std::size_t> perm(t.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<bool> tp(t.size()), pp(p.size());
        for (std::size_t i = 0; i < perm.size(); ++i) {
            tp[i] = t[perm[i]];
            pp[i] = p[perm[i]];
        }
        EXPECT_EQ(classification_accuracy(t, p), classification_accuracy(tp, pp));
    }
}

TEST(Evaluate, ReportPerApplianceAndMean) {
    const PowerSeries agg("aggregate", 0, 60, {100, 200, 0});
    const AlignedDataset truth(agg, {PowerSeries("a", 0, 60, {0, 100, 100}), PowerSeries("b", 0, 60, {100, 100, 0})});
    const std::vector<PowerSeries> pred{PowerSeries("b", 0, 60, {100, 100, 0}), PowerSeries("a", 0, 60, {0, 90, 110})};
    const MetricReport r = evaluate(truth, pred, 10.0);
    ASSERT_EQ(r.appliances.size(), 2u);
    EXPECT_EQ(r.n_samples, 3u);
    EXPECT_DOUBLE_EQ(r.mean_mae, (20.0 / 3.0 + 0.0) / 2.0);
    EXPECT_EQ(r.mean_accuracy, 1.0);
    const std::vector<PowerSeries> unknown{PowerSeries("zz", 0, 60, {0, 0, 0})};
    EXPECT_THROW(evaluate(truth, unknown), std::invalid_argument);
}
