#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "nilmtune/timeseries.hpp"

namespace nilmtune::runner {

struct SyntheticAppliance {
    std::string label;
    double on_power = 0.0;
    double stay_on = 0.9;   // P(on -> on)
    double stay_off = 0.9;  // P(off -> off)
};

struct SyntheticHouseSpec {
    std::vector<SyntheticAppliance> appliances;
    double noise_std = 0.0;
    Timestamp start = 0;
    std::size_t samples = 0;
    Seconds period = 60;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Two-state Markov chain per appliance emitting 0 or its on-power, started
/// from the chain's stationary distribution. The aggregate is the sum plus
/// Gaussian noise, clamped at zero. Fully determined by the seed.
AlignedDataset generate_synthetic(const SyntheticHouseSpec& spec);

/// Key-value spec file:
///   start = 2014-03-13        duration_days = 40  (or samples = N)
///   period = 60               noise_std = 5       seed = 1
///   appliance.<label>.on_power / .stay_on / .stay_off
SyntheticHouseSpec parse_synthetic_spec(std::istream& in, const std::string& source);
SyntheticHouseSpec load_synthetic_spec(const std::filesystem::path& file);

}  // namespace nilmtune::runner
