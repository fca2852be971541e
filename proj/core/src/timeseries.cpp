#include "nilmtune/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nilmtune {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        cells.push_back(trim(line.substr(pos, comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return cells;
}

std::int64_t parse_int(std::string_view s, std::size_t line_no) {
    std::int64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw std::invalid_argument("line " + std::to_string(line_no) +
                                    ": unparseable timestamp '" + std::string(s) + "'");
    }
    return v;
}

double parse_watts(std::string_view s, std::size_t line_no) {
    // from_chars for double is missing from older libstdc++ releases
    std::string buf(s);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (buf.empty() || end != buf.c_str() + buf.size() || !std::isfinite(v)) {
        throw std::invalid_argument("line " + std::to_string(line_no) +
                                    ": unparseable number '" + buf + "'");
    }
    if (v < 0.0) {
        throw std::invalid_argument("line " + std::to_string(line_no) +
                                    ": negative power reading '" + buf + "'");
    }
    return v;
}

bool nan_equal(std::span<const double> a, std::span<const double> b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](double x, double y) {
        return (is_gap(x) && is_gap(y)) || x == y;
    });
}

}  // namespace

Timestamp parse_utc_date(std::string_view text) {
    text = trim(text);
    if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
        const auto num = [&](std::size_t pos, std::size_t len) {
            int v = 0;
            auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, v);
            if (ec != std::errc{} || ptr != text.data() + pos + len) {
                throw std::invalid_argument("bad date '" + std::string(text) + "'");
            }
            return v;
        };
        using namespace std::chrono;
        const year_month_day ymd{year{num(0, 4)}, month{static_cast<unsigned>(num(5, 2))},
                                 day{static_cast<unsigned>(num(8, 2))}};
        if (!ymd.ok()) throw std::invalid_argument("bad date '" + std::string(text) + "'");
        return sys_days{ymd}.time_since_epoch() / seconds{1};
    }
    Timestamp v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw std::invalid_argument("bad date '" + std::string(text) + "'");
    }
    return v;
}

std::string format_utc_date(Timestamp t) {
    using namespace std::chrono;
    const sys_seconds tp{seconds{t}};
    const auto day_point = floor<days>(tp);
    const year_month_day ymd{day_point};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    std::string out = buf;
    if (const auto rem = (tp - day_point).count(); rem != 0) {
        std::snprintf(buf, sizeof buf, "T%02lld:%02lld:%02lld", static_cast<long long>(rem / 3600),
                      static_cast<long long>(rem / 60 % 60), static_cast<long long>(rem % 60));
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------

PowerSeries::PowerSeries(std::string label, Timestamp start_time, Seconds period,
                         std::vector<double> values)
    : label_(std::move(label)), start_(start_time), period_(period), values_(std::move(values)) {
    if (period_ <= 0) throw std::invalid_argument("PowerSeries: period must be > 0");
    if (values_.empty()) throw std::invalid_argument("PowerSeries: empty series '" + label_ + "'");
    for (double v : values_) {
        if (is_gap(v)) continue;
        if (!std::isfinite(v) || v < 0.0) {
            throw std::invalid_argument("PowerSeries: value out of domain in '" + label_ + "'");
        }
    }
}

bool PowerSeries::has_gaps() const noexcept {
    return std::any_of(values_.begin(), values_.end(), [](double v) { return is_gap(v); });
}

std::size_t PowerSeries::gap_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(values_.begin(), values_.end(), [](double v) { return is_gap(v); }));
}

PowerSeries PowerSeries::with_label(std::string label) const {
    return PowerSeries(std::move(label), start_, period_, values_);
}

PowerSeries PowerSeries::slice(std::size_t first, std::size_t count) const {
    if (first + count > values_.size() || count == 0) {
        throw std::out_of_range("PowerSeries::slice out of range");
    }
    return PowerSeries(label_, time_at(first), period_,
                       std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(first),
                                           values_.begin() + static_cast<std::ptrdiff_t>(first + count)));
}

bool operator==(const PowerSeries& a, const PowerSeries& b) {
    return a.label_ == b.label_ && a.start_ == b.start_ && a.period_ == b.period_ &&
           nan_equal(a.values_, b.values_);
}

GapFill parse_gap_fill(std::string_view name) {
    if (name == "fill_zero") return GapFill::fill_zero;
    if (name == "forward_fill") return GapFill::forward_fill;
    if (name == "drop_row") return GapFill::drop_row;
    throw std::invalid_argument("unknown gap policy '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

AlignedDataset::AlignedDataset(PowerSeries aggregate, std::vector<PowerSeries> appliances)
    : aggregate_(std::move(aggregate)), appliances_(std::move(appliances)) {
    const auto check = [&](const PowerSeries& s) {
        if (s.start_time() != aggregate_.start_time() || s.period() != aggregate_.period() ||
            s.size() != aggregate_.size()) {
            throw std::invalid_argument("AlignedDataset: channel '" + s.label() +
                                        "' is not on the aggregate grid");
        }
        if (s.has_gaps()) {
            throw std::invalid_argument("AlignedDataset: channel '" + s.label() + "' has gaps");
        }
    };
    check(aggregate_);
    for (std::size_t i = 0; i < appliances_.size(); ++i) {
        check(appliances_[i]);
        for (std::size_t j = 0; j < i; ++j) {
            if (appliances_[j].label() == appliances_[i].label()) {
                throw std::invalid_argument("AlignedDataset: duplicate appliance label '" +
                                            appliances_[i].label() + "'");
            }
        }
    }
}

const PowerSeries& AlignedDataset::appliance(std::string_view label) const {
    for (const auto& s : appliances_) {
        if (s.label() == label) return s;
    }
    throw std::invalid_argument("unknown appliance '" + std::string(label) + "'");
}

bool AlignedDataset::has_appliance(std::string_view label) const noexcept {
    return std::any_of(appliances_.begin(), appliances_.end(),
                       [&](const PowerSeries& s) { return s.label() == label; });
}

std::vector<std::string> AlignedDataset::appliance_labels() const {
    std::vector<std::string> out;
    out.reserve(appliances_.size());
    for (const auto& s : appliances_) out.push_back(s.label());
    return out;
}

AlignedDataset AlignedDataset::slice(std::size_t first, std::size_t count) const {
    std::vector<PowerSeries> apps;
    apps.reserve(appliances_.size());
    for (const auto& s : appliances_) apps.push_back(s.slice(first, count));
    return AlignedDataset(aggregate_.slice(first, count), std::move(apps));
}

void SplitSpec::validate() const {
    if (!(train_start < train_end && train_end < val_end && val_end < test_end)) {
        throw std::invalid_argument(
            "split boundaries must satisfy train_start < train_end < val_end < test_end");
    }
}

// ---------------------------------------------------------------------------

std::vector<PowerSeries> load_csv(std::istream& in, Seconds single_row_period) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> labels;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_commas(line);
        if (cells.size() < 2) {
            throw std::invalid_argument("CSV header needs a timestamp and at least one channel");
        }
        for (std::size_t c = 1; c < cells.size(); ++c) {
            if (cells[c].empty()) throw std::invalid_argument("CSV header has an empty channel name");
            labels.emplace_back(cells[c]);
        }
        break;
    }
    if (labels.empty()) throw std::invalid_argument("CSV has no header");

    std::vector<Timestamp> times;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_commas(line);
        if (cells.size() != labels.size() + 1) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(labels.size() + 1) + " cells, got " +
                                        std::to_string(cells.size()));
        }
        const Timestamp t = parse_int(cells[0], line_no);
        if (!times.empty() && t <= times.back()) {
            throw std::invalid_argument("line " + std::to_string(line_no) +
                                        ": non-monotone timestamps");
        }
        times.push_back(t);
        std::vector<double> row(labels.size());
        for (std::size_t c = 0; c < labels.size(); ++c) {
            row[c] = cells[c + 1].empty() ? kGap : parse_watts(cells[c + 1], line_no);
        }
        rows.push_back(std::move(row));
    }
    if (times.empty()) throw std::invalid_argument("CSV has zero data rows");

    Seconds period = single_row_period;
    if (times.size() > 1) {
        period = times[1] - times[0];
        for (std::size_t i = 2; i < times.size(); ++i) period = std::min(period, times[i] - times[i - 1]);
    }
    if (period <= 0) throw std::invalid_argument("CSV: invalid grid period");
    for (Timestamp t : times) {
        if ((t - times.front()) % period != 0) {
            throw std::invalid_argument("CSV: timestamp " + std::to_string(t) +
                                        " is off the inferred grid of period " +
                                        std::to_string(period) + " s");
        }
    }

    const auto length = static_cast<std::size_t>((times.back() - times.front()) / period) + 1;
    std::vector<std::vector<double>> columns(labels.size(), std::vector<double>(length, kGap));
    for (std::size_t r = 0; r < times.size(); ++r) {
        const auto idx = static_cast<std::size_t>((times[r] - times.front()) / period);
        for (std::size_t c = 0; c < labels.size(); ++c) columns[c][idx] = rows[r][c];
    }

    std::vector<PowerSeries> out;
    out.reserve(labels.size());
    for (std::size_t c = 0; c < labels.size(); ++c) {
        out.emplace_back(labels[c], times.front(), period, std::move(columns[c]));
    }
    return out;
}

void write_csv(std::ostream& out, std::span<const PowerSeries> channels) {
    if (channels.empty()) throw std::invalid_argument("write_csv: no channels");
    const auto& first = channels.front();
    for (const auto& s : channels) {
        if (s.start_time() != first.start_time() || s.period() != first.period() ||
            s.size() != first.size()) {
            throw std::invalid_argument("write_csv: channels are not on one grid");
        }
    }
    out << "timestamp";
    for (const auto& s : channels) out << ',' << s.label();
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < first.size(); ++i) {
        out << first.time_at(i);
        for (const auto& s : channels) {
            out << ',';
            if (!is_gap(s[i])) {
                std::snprintf(buf, sizeof buf, "%.17g", s[i]);
                out << buf;
            }
        }
        out << '\n';
    }
}

void write_csv(std::ostream& out, const AlignedDataset& ds) {
    std::vector<PowerSeries> channels;
    channels.push_back(ds.aggregate());
    for (const auto& a : ds.appliances()) channels.push_back(a);
    write_csv(out, channels);
}

// ---------------------------------------------------------------------------

PowerSeries resample(const PowerSeries& series, Seconds target_period, std::size_t max_gap) {
    if (target_period <= 0) throw std::invalid_argument("resample: target_period must be > 0");
    const Seconds period = series.period();
    if (target_period == period) return series;
    const auto src = series.values();

    if (target_period % period == 0) {
        const auto factor = static_cast<std::size_t>(target_period / period);
        const std::size_t bins = (src.size() + factor - 1) / factor;
        std::vector<double> out(bins, kGap);
        for (std::size_t b = 0; b < bins; ++b) {
            double sum = 0.0;
            std::size_t n = 0;
            for (std::size_t i = b * factor; i < std::min(src.size(), (b + 1) * factor); ++i) {
                if (is_gap(src[i])) continue;
                sum += src[i];
                ++n;
            }
            if (n > 0) out[b] = sum / static_cast<double>(n);
        }
        return PowerSeries(series.label(), series.start_time(), target_period, std::move(out));
    }

    if (period % target_period == 0) {
        const auto factor = static_cast<std::size_t>(period / target_period);
        std::vector<double> out(src.size() * factor, kGap);
        std::size_t last_valid = 0;
        bool have_valid = false;
        for (std::size_t i = 0; i < src.size(); ++i) {
            double v = src[i];
            if (!is_gap(v)) {
                last_valid = i;
                have_valid = true;
            } else if (have_valid && i - last_valid <= max_gap) {
                v = src[last_valid];
            }
            std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(i * factor), factor, v);
        }
        return PowerSeries(series.label(), series.start_time(), target_period, std::move(out));
    }

    throw std::invalid_argument("resample: incompatible periods " + std::to_string(period) +
                                " s and " + std::to_string(target_period) + " s");
}

namespace {

void forward_fill(std::vector<double>& v, std::size_t max_gap) {
    bool have_valid = false;
    double last = 0.0;
    std::size_t run = 0;
    for (double& x : v) {
        if (!is_gap(x)) {
            last = x;
            have_valid = true;
            run = 0;
            continue;
        }
        ++run;
        x = (have_valid && run <= max_gap) ? last : 0.0;
    }
}

}  // namespace

AlignedDataset align(const PowerSeries& aggregate, std::span<const PowerSeries> appliances,
                     GapPolicy policy) {
    const Seconds period = aggregate.period();
    Timestamp start = aggregate.start_time();
    Timestamp end = aggregate.end_time();
    for (const auto& a : appliances) {
        if (a.period() != period) throw std::invalid_argument("align: mixed periods");
        if ((a.start_time() - aggregate.start_time()) % period != 0) {
            throw std::invalid_argument("align: channel '" + a.label() +
                                        "' is offset from the aggregate grid");
        }
        start = std::max(start, a.start_time());
        end = std::min(end, a.end_time());
    }
    if (end <= start) throw std::invalid_argument("align: empty intersection");
    const auto length = static_cast<std::size_t>((end - start) / period);

    const auto cut = [&](const PowerSeries& s) {
        const auto first = static_cast<std::size_t>((start - s.start_time()) / period);
        auto vals = s.values().subspan(first, length);
        return std::vector<double>(vals.begin(), vals.end());
    };

    std::vector<std::vector<double>> channels;
    channels.push_back(cut(aggregate));
    for (const auto& a : appliances) channels.push_back(cut(a));

    Timestamp out_start = start;
    std::size_t out_first = 0;
    std::size_t out_len = length;
    switch (policy.kind) {
        case GapFill::fill_zero:
            for (auto& c : channels) {
                for (double& x : c) {
                    if (is_gap(x)) x = 0.0;
                }
            }
            break;
        case GapFill::forward_fill:
            for (auto& c : channels) forward_fill(c, policy.max_gap);
            break;
        case GapFill::drop_row: {
            std::vector<bool> keep(length, true);
            for (const auto& c : channels) {
                for (std::size_t i = 0; i < length; ++i) {
                    if (is_gap(c[i])) keep[i] = false;
                }
            }
            const auto first_kept = std::find(keep.begin(), keep.end(), true);
            if (first_kept == keep.end()) throw std::invalid_argument("align: every row has a gap");
            const auto last_kept = std::find(keep.rbegin(), keep.rend(), true).base();
            if (std::find(first_kept, last_kept, false) != last_kept) {
                throw std::invalid_argument("align: drop_row leaves a non-contiguous grid");
            }
            out_first = static_cast<std::size_t>(first_kept - keep.begin());
            out_len = static_cast<std::size_t>(last_kept - first_kept);
            out_start = start + static_cast<Timestamp>(out_first) * period;
            break;
        }
    }

    const auto make = [&](const std::string& label, const std::vector<double>& c) {
        return PowerSeries(label, out_start, period,
                           std::vector<double>(c.begin() + static_cast<std::ptrdiff_t>(out_first),
                                               c.begin() + static_cast<std::ptrdiff_t>(out_first + out_len)));
    };
    std::vector<PowerSeries> apps;
    apps.reserve(appliances.size());
    for (std::size_t i = 0; i < appliances.size(); ++i) {
        apps.push_back(make(appliances[i].label(), channels[i + 1]));
    }
    return AlignedDataset(make(aggregate.label(), channels[0]), std::move(apps));
}

DatasetSplits split_by_date(const AlignedDataset& ds, const SplitSpec& spec) {
    spec.validate();
    if (spec.train_start < ds.start_time() || spec.test_end > ds.end_time()) {
        throw std::invalid_argument("split_by_date: split [" + format_utc_date(spec.train_start) +
                                    ", " + format_utc_date(spec.test_end) +
                                    ") lies outside the data range [" +
                                    format_utc_date(ds.start_time()) + ", " +
                                    format_utc_date(ds.end_time()) + ")");
    }
    // first grid index whose timestamp is >= t
    const auto index_at = [&](Timestamp t) {
        const Timestamp off = t - ds.start_time();
        return static_cast<std::size_t>((off + ds.period() - 1) / ds.period());
    };
    const auto part = [&](Timestamp a, Timestamp b, const char* name) {
        const std::size_t i0 = index_at(a);
        const std::size_t i1 = std::min(index_at(b), ds.size());
        if (i1 <= i0) throw std::invalid_argument(std::string("split_by_date: empty ") + name + " split");
        return ds.slice(i0, i1 - i0);
    };
    return DatasetSplits{part(spec.train_start, spec.train_end, "train"),
                         part(spec.train_end, spec.val_end, "validation"),
                         part(spec.val_end, spec.test_end, "test")};
}

// ---------------------------------------------------------------------------

Scaler fit_scaler(std::span<const double> values) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : values) {
        if (is_gap(v)) continue;
        sum += v;
        ++n;
    }
    if (n < 2) throw std::invalid_argument("standardize: need at least 2 non-gap samples");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) {
        if (!is_gap(v)) ss += (v - mean) * (v - mean);
    }
    double sd = std::sqrt(ss / static_cast<double>(n));
    if (sd < 1e-6) sd = 1.0;
    return Scaler{mean, sd};
}

std::vector<double> standardize(std::span<const double> values, const Scaler& scaler) {
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(),
                   [&](double v) { return is_gap(v) ? kGap : scaler.apply(v); });
    return out;
}

Standardized standardize(const PowerSeries& series) {
    const Scaler scaler = fit_scaler(series.values());
    return Standardized{standardize(series.values(), scaler), scaler};
}

std::vector<double> destandardize(std::span<const double> normalized, const Scaler& scaler) {
    std::vector<double> out(normalized.size());
    std::transform(normalized.begin(), normalized.end(), out.begin(),
                   [&](double z) { return is_gap(z) ? kGap : scaler.invert(z); });
    return out;
}

// ---------------------------------------------------------------------------

Windows make_windows_anchored(std::span<const double> values, std::size_t window,
                              std::size_t stride, Padding pad, std::size_t anchor) {
    if (window < 1 || stride < 1) throw std::invalid_argument("make_windows: window and stride must be >= 1");
    if (anchor >= window) throw std::invalid_argument("make_windows: anchor outside window");
    if (values.empty()) throw std::invalid_argument("make_windows: empty input");
    Windows w;
    w.width = window;
    const auto n = static_cast<std::ptrdiff_t>(values.size());
    for (std::size_t c = 0; c < values.size(); c += stride) w.centers.push_back(c);
    w.rows = w.centers.size();
    w.data.resize(w.rows * window);
    for (std::size_t r = 0; r < w.rows; ++r) {
        const auto origin = static_cast<std::ptrdiff_t>(w.centers[r]) - static_cast<std::ptrdiff_t>(anchor);
        double* dst = w.data.data() + r * window;
        for (std::size_t k = 0; k < window; ++k) {
            const auto src = origin + static_cast<std::ptrdiff_t>(k);
            if (src >= 0 && src < n) {
                dst[k] = values[static_cast<std::size_t>(src)];
            } else if (pad == Padding::zero) {
                dst[k] = 0.0;
            } else {
                dst[k] = values[src < 0 ? 0 : values.size() - 1];
            }
        }
    }
    return w;
}

Windows make_windows(std::span<const double> values, std::size_t window, std::size_t stride,
                     Padding pad) {
    if (window < 1 || stride < 1) throw std::invalid_argument("make_windows: window and stride must be >= 1");
    return make_windows_anchored(values, window, stride, pad, window / 2);
}

}  // namespace nilmtune
