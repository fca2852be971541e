#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nilmtune/timeseries.hpp"

namespace nilmtune {

/// Uniform fit/predict surface shared by every model family.
///
/// `fit` learns from the training split (and the validation split where the
/// family uses one) for the given target appliances. `predict` returns one
/// series per target, on the aggregate's grid, clamped at zero watts.
class Disaggregator {
public:
    virtual ~Disaggregator() = default;

    virtual std::string family() const = 0;
    virtual void fit(const AlignedDataset& train, const AlignedDataset& val,
                     const std::vector<std::string>& targets) = 0;
    virtual std::vector<PowerSeries> predict(const PowerSeries& aggregate) const = 0;
    /// Writes the fitted state as a self-describing text record.
    virtual void save(std::ostream& out) const = 0;
};

}  // namespace nilmtune
