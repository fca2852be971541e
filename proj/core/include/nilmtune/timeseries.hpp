#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nilmtune {

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;
/// Sampling period in whole seconds.
using Seconds = std::int64_t;

inline constexpr double kGap = std::numeric_limits<double>::quiet_NaN();

inline bool is_gap(double v) noexcept { return std::isnan(v); }

/// Parses "YYYY-MM-DD" (midnight UTC) or an integer epoch-seconds string.
Timestamp parse_utc_date(std::string_view text);
std::string format_utc_date(Timestamp t);

/// Uniformly sampled watt readings for one channel. Sample i sits at
/// start_time + i * period; gaps are stored as NaN.
class PowerSeries {
public:
    PowerSeries(std::string label, Timestamp start_time, Seconds period,
                std::vector<double> values);

    const std::string& label() const noexcept { return label_; }
    Timestamp start_time() const noexcept { return start_; }
    Seconds period() const noexcept { return period_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    Timestamp time_at(std::size_t i) const noexcept {
        return start_ + static_cast<Timestamp>(i) * period_;
    }
    /// One past the last sample's timestamp.
    Timestamp end_time() const noexcept { return time_at(values_.size()); }

    bool has_gaps() const noexcept;
    std::size_t gap_count() const noexcept;

    PowerSeries with_label(std::string label) const;
    /// Samples [first, first + count) as a new series on the same grid.
    PowerSeries slice(std::size_t first, std::size_t count) const;

    friend bool operator==(const PowerSeries&, const PowerSeries&);

private:
    std::string label_;
    Timestamp start_;
    Seconds period_;
    std::vector<double> values_;
};

enum class GapFill { fill_zero, forward_fill, drop_row };

/// How `align` removes gaps. forward_fill carries the last valid value
/// for at most `max_gap` samples; anything left over becomes zero.
struct GapPolicy {
    GapFill kind = GapFill::forward_fill;
    std::size_t max_gap = 3;
};

GapFill parse_gap_fill(std::string_view name);

/// Aggregate plus per-appliance channels on one gap-free grid.
class AlignedDataset {
public:
    AlignedDataset(PowerSeries aggregate, std::vector<PowerSeries> appliances);

    const PowerSeries& aggregate() const noexcept { return aggregate_; }
    const std::vector<PowerSeries>& appliances() const noexcept { return appliances_; }
    const PowerSeries& appliance(std::string_view label) const;
    bool has_appliance(std::string_view label) const noexcept;
    std::vector<std::string> appliance_labels() const;

    std::size_t size() const noexcept { return aggregate_.size(); }
    Timestamp start_time() const noexcept { return aggregate_.start_time(); }
    Timestamp end_time() const noexcept { return aggregate_.end_time(); }
    Seconds period() const noexcept { return aggregate_.period(); }

    AlignedDataset slice(std::size_t first, std::size_t count) const;

private:
    PowerSeries aggregate_;
    std::vector<PowerSeries> appliances_;
};

/// Date boundaries of the three half-open splits.
struct SplitSpec {
    Timestamp train_start;
    Timestamp train_end;
    Timestamp val_end;
    Timestamp test_end;

    void validate() const;
};

struct DatasetSplits {
    AlignedDataset train;
    AlignedDataset val;
    AlignedDataset test;
};

/// Reads `timestamp,<channel>,...` CSV. Rows must be strictly increasing and
/// lie on a common grid; missing grid rows and empty cells become gaps. The
/// grid period is the smallest row spacing, or `single_row_period` when only
/// one row exists.
std::vector<PowerSeries> load_csv(std::istream& in, Seconds single_row_period = 60);

/// Writes channels sharing one grid as CSV with the given first column name.
void write_csv(std::ostream& out, std::span<const PowerSeries> channels);
void write_csv(std::ostream& out, const AlignedDataset& ds);

/// Bin-mean downsampling or forward-fill upsampling. `max_gap` bounds how
/// many source samples upsampling will carry a value across a gap.
PowerSeries resample(const PowerSeries& series, Seconds target_period,
                     std::size_t max_gap = 3);

AlignedDataset align(const PowerSeries& aggregate,
                     std::span<const PowerSeries> appliances,
                     GapPolicy policy = {});

DatasetSplits split_by_date(const AlignedDataset& ds, const SplitSpec& spec);

struct Scaler {
    double mean = 0.0;
    double std = 1.0;

    double apply(double x) const noexcept { return (x - mean) / std; }
    double invert(double z) const noexcept { return z * std + mean; }
};

/// Population standard deviation; std below 1e-6 W is replaced with 1.
Scaler fit_scaler(std::span<const double> values);

struct Standardized {
    std::vector<double> values;
    Scaler scaler;
};

Standardized standardize(const PowerSeries& series);
std::vector<double> standardize(std::span<const double> values, const Scaler& scaler);
std::vector<double> destandardize(std::span<const double> normalized, const Scaler& scaler);

enum class Padding { zero, edge };

/// Row-major window matrix; `centers[r]` is the input index that row r is
/// anchored on.
struct Windows {
    std::size_t rows = 0;
    std::size_t width = 0;
    std::vector<double> data;
    std::vector<std::size_t> centers;

    std::span<const double> row(std::size_t r) const {
        return {data.data() + r * width, width};
    }
};

/// Windows anchored at indices 0, stride, 2*stride, ... with the anchor at
/// position floor(window / 2) inside each window.
Windows make_windows(std::span<const double> values, std::size_t window,
                     std::size_t stride, Padding pad);

/// As make_windows, with the anchor at an arbitrary position in the window
/// (window - 1 gives causal windows ending at the anchor).
Windows make_windows_anchored(std::span<const double> values, std::size_t window,
                              std::size_t stride, Padding pad, std::size_t anchor);

}  // namespace nilmtune
