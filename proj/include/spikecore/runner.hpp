#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spikecore/engine.hpp"
#include "spikecore/hbm/image.hpp"
#include "spikecore/io/schedule.hpp"
#include "spikecore/network.hpp"
#include "spikecore/simulator.hpp"

namespace spikecore {

struct RunOptions {
    Backend backend = Backend::Engine;
    std::uint64_t seed = 0;
    CostConfig cost;
};

struct StepRecord {
    std::vector<std::string> spikes; ///< output keys, index order
    std::optional<StepCounters> counters; ///< engine only
};

/// Everything a run report needs. Bias axons are driven on every step in
/// addition to the schedule.
struct RunRecord {
    Backend backend = Backend::Engine;
    std::uint64_t seed = 0;
    CostConfig cost_config;
    std::size_t axons = 0;
    std::size_t neurons = 0;
    std::vector<std::string> outputs;
    std::vector<StepRecord> steps;
    std::vector<std::size_t> blocks;
    std::optional<CostReport> cost; ///< engine only
    std::vector<std::string> neuron_keys;
    std::vector<std::int32_t> final_membranes;
};

RunRecord run_network(const Network& net, const io::Schedule& schedule, const RunOptions& options);
/// The oracle backend runs on the decompiled network.
RunRecord run_image(const hbm::HbmImage& image, const io::Schedule& schedule, const RunOptions& options);

struct InferenceStats {
    std::size_t first_step = 0;
    std::size_t steps = 0;
    std::uint64_t output_spikes = 0;
    std::optional<StepCounters> counters;
    std::optional<double> energy;
    std::optional<double> latency;
};

std::vector<InferenceStats> inference_stats(const RunRecord& run);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0; ///< sample standard deviation (n - 1); 0 below two values
};

MeanSd mean_sd(std::span<const double> values);

struct Divergence {
    std::size_t step = 0;
    std::string neuron;
    std::string what;
};

struct DiffResult {
    bool pass = true;
    std::size_t steps = 0;
    std::optional<Divergence> first;
};

/// Steps the oracle on `net` and the engine on `image` in lockstep with a
/// shared seed; reports the first step and neuron whose spike flag, membrane
/// or output designation differs. InvalidArgument when the image's keys do
/// not match the network.
DiffResult diff_backends(const Network& net, const hbm::HbmImage& image, const io::Schedule& schedule,
                         std::uint64_t seed);

/// Index of the largest value, first on ties. InvalidArgument when empty.
std::size_t membrane_argmax(std::span<const std::int32_t> membranes);
std::size_t rate_argmax(std::span<const std::uint64_t> spike_counts);

} // namespace spikecore
