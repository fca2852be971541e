#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nilmtune/disaggregator.hpp"
#include "nilmtune/timeseries.hpp"

namespace nilmtune {

/// Power levels of one appliance viewed as a finite state machine. The
/// transition/emission/initial fields are filled in by fit_fhmm; CO only
/// uses the levels.
struct ApplianceStateModel {
    std::string label;
    std::vector<double> levels;                   // strictly increasing
    std::vector<std::vector<double>> transition;  // k x k, row-stochastic
    std::vector<double> emission_std;             // per level, >= floor
    std::vector<double> initial;                  // sums to 1

    std::size_t states() const noexcept { return levels.size(); }
    void validate() const;
};

/// Bijection between per-appliance state tuples and a flat index. The first
/// appliance varies fastest, so (1, 0) precedes (0, 1).
class JointStateIndex {
public:
    explicit JointStateIndex(std::vector<std::size_t> radices);

    std::size_t size() const noexcept { return size_; }
    std::size_t appliances() const noexcept { return radices_.size(); }
    std::size_t flat(std::span<const std::size_t> states) const;
    std::vector<std::size_t> unflat(std::size_t flat) const;
    /// State of appliance `a` inside joint state `flat`.
    std::size_t state_of(std::size_t flat, std::size_t a) const noexcept {
        return flat / strides_[a] % radices_[a];
    }

private:
    std::vector<std::size_t> radices_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 1;
};

inline constexpr std::size_t kCoJointStateCap = 4096;
inline constexpr std::size_t kFhmmJointStateCap = 1024;
inline constexpr double kEmissionStdFloor = 10.0;

struct StateClustering {
    std::vector<double> levels;             // ascending
    std::vector<std::size_t> assignment;    // per non-gap sample, index into levels
};

/// 1-D k-means with seeded farthest-point initialisation. Samples equidistant
/// from two centres join the higher one.
StateClustering cluster_states(std::span<const double> values, std::size_t k, std::uint64_t seed);

/// Levels-only appliance model from 1-D k-means over the series.
ApplianceStateModel learn_states(const PowerSeries& series, std::size_t k, std::uint64_t seed);

/// Per-timestep combinatorial optimisation. Returns one series per model,
/// labelled with the model label.
std::vector<PowerSeries> co_disaggregate(const PowerSeries& aggregate,
                                         std::span<const ApplianceStateModel> models,
                                         std::size_t joint_cap = kCoJointStateCap);

/// Learns one HMM per appliance channel of `train`. `k` holds the state
/// count per appliance, in the dataset's appliance order.
std::vector<ApplianceStateModel> fit_fhmm(const AlignedDataset& train,
                                          std::span<const std::size_t> k, std::uint64_t seed);

struct FhmmDecoding {
    std::vector<std::size_t> path;  // flat joint state per timestep
    double log_probability = 0.0;
    std::vector<PowerSeries> appliances;
};

/// Exact Viterbi over the joint chain of all appliance HMMs.
FhmmDecoding fhmm_decode(const PowerSeries& aggregate, std::span<const ApplianceStateModel> models,
                         std::size_t joint_cap = kFhmmJointStateCap);

std::vector<PowerSeries> fhmm_disaggregate(const PowerSeries& aggregate,
                                           std::span<const ApplianceStateModel> models,
                                           std::size_t joint_cap = kFhmmJointStateCap);

/// Joint log-probability of a flat-state path under the factorial model.
double fhmm_path_log_probability(const PowerSeries& aggregate,
                                 std::span<const ApplianceStateModel> models,
                                 std::span<const std::size_t> path);

void save_state_models(std::ostream& out, std::span<const ApplianceStateModel> models);
std::vector<ApplianceStateModel> load_state_models(std::istream& in);

/// CO or FHMM behind the Disaggregator contract. Both learn a model for
/// every appliance channel in the training data (the aggregate must be
/// explained jointly) and report only the requested targets.
class StateDisaggregator final : public Disaggregator {
public:
    enum class Method { co, fhmm };

    StateDisaggregator(Method method, std::size_t states_per_appliance, std::uint64_t seed);

    std::string family() const override;
    void fit(const AlignedDataset& train, const AlignedDataset& val,
             const std::vector<std::string>& targets) override;
    std::vector<PowerSeries> predict(const PowerSeries& aggregate) const override;
    void save(std::ostream& out) const override;

    const std::vector<ApplianceStateModel>& models() const noexcept { return models_; }

private:
    Method method_;
    std::size_t k_;
    std::uint64_t seed_;
    std::vector<ApplianceStateModel> models_;
    std::vector<std::string> targets_;
};

}  // namespace nilmtune
