#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "nilmtune/timeseries.hpp"

using namespace nilmtune;

namespace {

PowerSeries series(std::vector<double> v, Timestamp start = 0, Seconds period = 60, std::string label = "x") {
    return PowerSeries(std::move(label), start, period, std::move(v));
}

}  // namespace

TEST(PowerSeries, RejectsBadValues) {
    EXPECT_THROW(series({}), std::invalid_argument);
    EXPECT_THROW(series({1.0}, 0, 0), std::invalid_argument);
    EXPECT_THROW(series({-1.0}), std::invalid_argument);
    EXPECT_THROW(series({std::numeric_limits<double>::infinity()}), std::invalid_argument);
    EXPECT_NO_THROW(series({kGap, 1.0}));
}

TEST(PowerSeries, ImplicitGrid) {
    const auto s = series({1, 2, 3}, 1000, 6);
    EXPECT_EQ(s.time_at(2), 1012);
    EXPECT_EQ(s.end_time(), 1018);
}

TEST(LoadCsv, ThreeRowsTwoColumns) {
    std::istringstream in("timestamp,aggregate,kettle\n0,10,1\n60,20,2\n120,30,3\n");
    const auto ch = load_csv(in);
    ASSERT_EQ(ch.size(), 2u);
    EXPECT_EQ(ch[0].label(), "aggregate");
    EXPECT_EQ(ch[1].size(), 3u);
    EXPECT_EQ(ch[1][2], 3.0);
    EXPECT_EQ(ch[0].period(), 60);
}

TEST(LoadCsv, EmptyCellIsGap) {
    std::istringstream in("timestamp,aggregate,kettle\n0,10,1\n60,20,\n120,30,3\n");
    const auto ch = load_csv(in);
    EXPECT_TRUE(is_gap(ch[1][1]));
    EXPECT_FALSE(is_gap(ch[0][1]));
}

TEST(LoadCsv, NonMonotoneTimestamps) {
    std::istringstream in("timestamp,aggregate\n10,1\n10,2\n20,3\n");
    try {
        load_csv(in);
        FAIL() << "expected an error";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("non-monotone timestamps"), std::string::npos);
    }
}

TEST(LoadCsv, Errors) {
    std::istringstream bad_number("timestamp,aggregate\n0,abc\n");
    EXPECT_THROW(load_csv(bad_number), std::invalid_argument);
    std::istringstream no_rows("timestamp,aggregate\n");
    EXPECT_THROW(load_csv(no_rows), std::invalid_argument);
}

TEST(LoadCsv, RoundTripThroughWriteCsv) {
    const PowerSeries a = series({1, 2, kGap, 4}, 600, 60, "aggregate");
    const PowerSeries b = series({0, 1.5, 2, 3}, 600, 60, "fridge");
    std::ostringstream out;
    const std::vector<PowerSeries> both{a, b};
    write_csv(out, both);
    std::istringstream in(out.str());
    const auto back = load_csv(in);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0], a);
    EXPECT_EQ(back[1], b);
}

TEST(Resample, BinMeans) {
    std::vector<double> v;
    for (int i = 1; i <= 10; ++i) v.push_back(i);
    const auto r = resample(series(v, 0, 6), 30);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_DOUBLE_EQ(r[0], 3.0);
    EXPECT_DOUBLE_EQ(r[1], 8.0);
    EXPECT_EQ(r.period(), 30);
}

TEST(Resample, IdentityAndGaps) {
    const auto s = series({1, 2, 3}, 0, 60);
    EXPECT_EQ(resample(s, 60), s);
    const auto r = resample(series({kGap, kGap, 4, kGap}, 0, 30), 60);
    EXPECT_TRUE(is_gap(r[0]));
    EXPECT_DOUBLE_EQ(r[1], 4.0);
}

TEST(Resample, Errors) {
    const auto s = series({1, 2, 3}, 0, 60);
    EXPECT_THROW(resample(s, 0), std::invalid_argument);
    EXPECT_THROW(resample(s, 90), std::invalid_argument);
}

TEST(Resample, UpsampleForwardFillsWithinMaxGap) {
    const auto r = resample(series({5, 7}, 0, 60), 30, 3);
    ASSERT_EQ(r.size(), 4u);
    EXPECT_EQ(r[0], 5.0);
    EXPECT_EQ(r[1], 5.0);
    EXPECT_EQ(r[3], 7.0);
}

TEST(Resample, DownUpPreservesBinMeans) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 100);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(60);
        for (double& x : v) x = u(rng);
        const auto down = resample(series(v, 0, 10), 60);
        const auto back = resample(resample(down, 10), 60);
        for (std::size_t i = 0; i < down.size(); ++i) EXPECT_DOUBLE_EQ(back[i], down[i]);
    }
}

TEST(Align, IdentityOnIdenticalGrids) {
    const auto agg = series({3, 4, 5}, 0, 60, "aggregate");
    const std::vector<PowerSeries> apps{series({1, 2, 3}, 0, 60, "a")};
    const auto ds = align(agg, apps);
    EXPECT_EQ(ds.aggregate(), agg);
    EXPECT_EQ(ds.appliance("a"), apps[0]);
}

TEST(Align, TrimsToIntersection) {
    const auto agg = series(std::vector<double>(10, 1.0), 60, 60, "aggregate");
    const std::vector<PowerSeries> apps{series(std::vector<double>(11, 2.0), 0, 60, "a")};
    const auto ds = align(agg, apps);
    EXPECT_EQ(ds.size(), 10u);
    EXPECT_EQ(ds.start_time(), 60);
    EXPECT_EQ(ds.appliance("a").size(), 10u);
}

TEST(Align, Errors) {
    const auto agg = series({1, 2}, 0, 60, "aggregate");
    const std::vector<PowerSeries> disjoint{series({1, 2}, 6000, 60, "a")};
    try {
        align(agg, disjoint);
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("empty intersection"), std::string::npos);
    }
    const std::vector<PowerSeries> mixed{series({1, 2}, 0, 30, "a")};
    EXPECT_THROW(align(agg, mixed), std::invalid_argument);
}

TEST(Align, GapPolicies) {
    const auto agg = series({1, kGap, kGap, kGap, kGap, kGap, 7}, 0, 60, "aggregate");
    const std::vector<PowerSeries> apps{series({0, 0, 0, 0, 0, 0, 0}, 0, 60, "a")};
    const auto ff = align(agg, apps, {GapFill::forward_fill, 3});
    EXPECT_EQ(ff.aggregate()[3], 1.0);
    EXPECT_EQ(ff.aggregate()[4], 0.0);
    const auto zero = align(agg, apps, {GapFill::fill_zero, 3});
    EXPECT_EQ(zero.aggregate()[1], 0.0);
    EXPECT_THROW(align(agg, apps, {GapFill::drop_row, 3}), std::invalid_argument);
    const auto edge = series({kGap, 2, 3}, 0, 60, "aggregate");
    const std::vector<PowerSeries> three{series({1, 1, 1}, 0, 60, "a")};
    const auto dropped = align(edge, three, {GapFill::drop_row, 3});
    EXPECT_EQ(dropped.size(), 2u);
    EXPECT_EQ(dropped.start_time(), 60);
}

TEST(Align, RandomInputsSatisfyInvariants) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> off(0, 5), len(8, 30);
    std::bernoulli_distribution gap(0.2);
    for (int trial = 0; trial < 200; ++trial) {
        auto make = [&](const std::string& label) {
            std::vector<double> v(static_cast<std::size_t>(len(rng)));
            for (double& x : v) x = gap(rng) ? kGap : 10.0;
            return series(v, 60 * off(rng), 60, label);
        };
        const auto agg = make("aggregate");
        const std::vector<PowerSeries> apps{make("a"), make("b")};
        const AlignedDataset ds = align(agg, apps);
        EXPECT_FALSE(ds.aggregate().has_gaps());
        for (const auto& a : ds.appliances()) {
            EXPECT_FALSE(a.has_gaps());
            EXPECT_EQ(a.start_time(), ds.start_time());
            EXPECT_EQ(a.size(), ds.size());
        }
    }
}

TEST(SplitByDate, UkDaleHouseOneDates) {
    const Timestamp start = parse_utc_date("2014-03-13");
    const Timestamp end = parse_utc_date("2015-05-15");
    const std::size_t n = static_cast<std::size_t>((end - start) / 3600);
    const auto agg = series(std::vector<double>(n, 1.0), start, 3600, "aggregate");
    const std::vector<PowerSeries> apps{series(std::vector<double>(n, 0.5), start, 3600, "a")};
    const auto ds = align(agg, apps);
    const SplitSpec spec{start, parse_utc_date("2014-04-07"), parse_utc_date("2014-04-14"), end};
    const auto s = split_by_date(ds, spec);
    EXPECT_EQ(s.train.size(), 25u * 24u);
    EXPECT_EQ(s.val.size(), 7u * 24u);
    EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), n);
}

TEST(SplitByDate, HalfOpenBoundaryAndErrors) {
    const auto agg = series(std::vector<double>(10, 1.0), 0, 60, "aggregate");
    const std::vector<PowerSeries> apps{series(std::vector<double>(10, 1.0), 0, 60, "a")};
    const auto ds = align(agg, apps);
    const auto s = split_by_date(ds, {0, 240, 420, 600});
    EXPECT_EQ(s.train.size(), 4u);
    EXPECT_EQ(s.val.start_time(), 240);  // sample exactly at train_end is validation
    EXPECT_EQ(s.test.size(), 3u);
    EXPECT_THROW(split_by_date(ds, {-60, 240, 420, 600}), std::invalid_argument);
    EXPECT_THROW(split_by_date(ds, {0, 240, 240, 600}), std::invalid_argument);
    EXPECT_THROW(split_by_date(ds, {0, 10, 20, 600}), std::invalid_argument);  // empty train
}

TEST(SplitByDate, PartitionProperty) {
    std::mt19937_64 rng(5);
    const auto agg = series(std::vector<double>(100, 1.0), 0, 60, "aggregate");
    const std::vector<PowerSeries> apps{series(std::vector<double>(100, 1.0), 0, 60, "a")};
    const auto ds = align(agg, apps);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<Timestamp> cut(1, 5999);
        std::vector<Timestamp> c{cut(rng), cut(rng), cut(rng)};
        std::sort(c.begin(), c.end());
        if (c[1] - c[0] < 60 || c[2] - c[1] < 60 || 6000 - c[2] < 60) continue;
        const auto s = split_by_date(ds, {0, c[0], c[1], 6000});
        EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), 100u);
        EXPECT_EQ(s.val.start_time(), s.train.end_time());
        EXPECT_EQ(s.test.start_time(), s.val.end_time());
    }
}

TEST(Standardize, HandFixtureAndGuard) {
    const auto st = standardize(series({0, 10}));
    EXPECT_DOUBLE_EQ(st.scaler.mean, 5.0);
    EXPECT_DOUBLE_EQ(st.scaler.std, 5.0);
    EXPECT_DOUBLE_EQ(st.values[0], -1.0);
    EXPECT_DOUBLE_EQ(st.values[1], 1.0);
    const auto c = standardize(series({7, 7, 7}));
    EXPECT_EQ(c.scaler.std, 1.0);
    for (double v : c.values) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(standardize(series({1.0})), std::invalid_argument);
}

TEST(Standardize, RoundTrip) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 3000);
    std::vector<double> v(500);
    for (double& x : v) x = u(rng);
    const auto st = standardize(series(v));
    const auto back = destandardize(st.values, st.scaler);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(back[i], v[i], 1e-9 * std::max(1.0, v[i]));
}

TEST(MakeWindows, ZeroPadding) {
    const std::vector<double> v{1, 2, 3, 4, 5};
    const auto w = make_windows(v, 3, 1, Padding::zero);
    ASSERT_EQ(w.rows, 5u);
    EXPECT_EQ(std::vector<double>(w.row(0).begin(), w.row(0).end()), (std::vector<double>{0, 1, 2}));
    EXPECT_EQ(w.centers[4], 4u);
    const auto one = make_windows(v, 1, 1, Padding::zero);
    for (std::size_t r = 0; r < 5; ++r) EXPECT_EQ(one.row(r)[0], v[r]);
    const std::vector<double> two{1, 2};
    const auto wide = make_windows(two, 5, 1, Padding::zero);
    EXPECT_EQ(wide.rows, 2u);
    EXPECT_EQ(wide.width, 5u);
    EXPECT_THROW(make_windows(v, 0, 1, Padding::zero), std::invalid_argument);
    EXPECT_THROW(make_windows(v, 3, 0, Padding::zero), std::invalid_argument);
}

TEST(MakeWindows, ValidRegionMatchesInput) {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> len(1, 40), win(1, 15);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(static_cast<std::size_t>(len(rng)));
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i + 1);
        const auto width = static_cast<std::size_t>(win(rng));
        const auto w = make_windows(v, width, 1, trial % 2 ? Padding::edge : Padding::zero);
        ASSERT_EQ(w.rows, v.size());
        for (std::size_t r = 0; r < w.rows; ++r) {
            for (std::size_t k = 0; k < width; ++k) {
                const auto pos = static_cast<long>(r) - static_cast<long>(width / 2) + static_cast<long>(k);
                if (pos >= 0 && pos < static_cast<long>(v.size())) {
                    EXPECT_EQ(w.row(r)[k], v[static_cast<std::size_t>(pos)]);
                }
            }
        }
    }
}
