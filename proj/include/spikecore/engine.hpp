#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spikecore/hbm/image.hpp"
#include "spikecore/kernels/kernels.hpp"
#include "spikecore/network.hpp"

namespace spikecore {

/// HBM access and cycle tallies. Accesses are counted per row: a pointer
/// fetch is one row read, a synapse region is row_count row reads.
struct StepCounters {
    std::uint64_t pointer_row_reads = 0;
    std::uint64_t synapse_row_reads = 0;
    std::uint64_t neuron_scan_cycles = 0;
    std::uint64_t total_cycles = 0;

    std::uint64_t hbm_accesses() const noexcept { return pointer_row_reads + synapse_row_reads; }
    StepCounters& operator+=(const StepCounters& o) noexcept;
    bool operator==(const StepCounters&) const = default;
};

/// Conversion constants. The defaults report raw counts: energy is the
/// access count and latency the cycle count.
struct CostConfig {
    double energy_per_access = 1.0; ///< energy per HBM row access; energy is reported in this unit
    std::uint32_t cycles_per_row = 1;
    double clock_period = 1.0;      ///< time per cycle; latency is reported in this unit

    /// InvalidArgument unless all fields are positive.
    void validate() const;
};

struct CostReport {
    StepCounters totals;
    std::vector<StepCounters> per_step;
    double energy = 0.0;  ///< energy_per_access * (pointer + synapse row reads)
    double latency = 0.0; ///< clock_period * total_cycles
};

CostReport make_cost_report(std::vector<StepCounters> per_step, const CostConfig& config);

/// Event-driven timestep over a compiled image.
///
/// Each step runs the per-neuron update pass in 16-lane groups, then routes
/// spikes in two phases: pointers of the active axons and fired neurons are
/// read into a queue (axons first, then neurons, ascending), and each queued
/// region is fetched segment by segment and accumulated into the lane-aligned
/// postsynaptic membranes. The image is referenced, not owned, so in-place
/// weight patches are visible on the next step.
class EventEngine {
public:
    explicit EventEngine(const hbm::HbmImage& image, std::uint32_t cycles_per_row = 1,
                         const kernels::KernelSet& kernels = kernels::active_kernels());

    SimState make_state(std::uint64_t seed) const;

    /// Returns fired output neurons, ascending. DimensionMismatch when the
    /// state does not fit the image; IndexOutOfRange on a corrupt image or an
    /// out-of-range axon.
    std::vector<std::uint32_t> step(SimState& state, std::span<const std::uint32_t> active_axons,
                                    StepCounters* delta = nullptr);

    const std::vector<std::uint32_t>& outputs() const noexcept { return outputs_; }
    const hbm::HbmImage& image() const noexcept { return *image_; }
    kernels::Isa isa() const noexcept { return kernels_->isa; }

private:
    const hbm::HbmImage* image_;
    const kernels::KernelSet* kernels_;
    std::uint32_t cycles_per_row_;
    std::vector<std::int32_t> theta_;
    std::vector<std::int8_t> nu_;
    std::vector<std::uint8_t> lambda_;
    std::vector<std::uint8_t> is_ann_;
    std::vector<std::uint8_t> is_output_;
    std::vector<std::uint32_t> outputs_;
    std::vector<std::int64_t> noise_;
    std::vector<hbm::PointerSlot> queue_;
};

struct RunResult {
    /// Output keys that spiked, per step.
    std::vector<std::vector<std::string>> trace;
    CostReport cost;
    SimState final_state;
};

/// Runs `steps` engine steps. Step t activates schedule[t] (empty beyond the
/// schedule) plus the image's bias axons. UnknownAxonKey on a bad key.
RunResult run(const hbm::HbmImage& image, const std::vector<std::vector<std::string>>& schedule, std::size_t steps,
              std::uint64_t seed, const CostConfig& config = {});

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    /// Coefficient of determination; empty when the y values are constant.
    std::optional<double> r_squared;
};

/// Ordinary least squares of y on x. DegenerateInput with fewer than three
/// points or constant x.
LinearFit scaling_regression(std::span<const std::pair<double, double>> points);

} // namespace spikecore
