#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spikecore/engine.hpp"
#include "spikecore/io/schedule.hpp"
#include "spikecore/network.hpp"
#include "spikecore/runner.hpp"

namespace spikecore::cli {

struct FamilyMember {
    double scale = 1.0;
    Network net;
    io::Schedule schedule;
};

/// Feed-forward 784 -> hidden -> 10 network of ANN neurons (theta 0, noise
/// off) with uniform random weights in [-1024, 1024]. Keys: "in_<i>",
/// "h_<j>", "out_<k>"; the output layer is the output set.
Network mlp_member(std::uint32_t hidden, std::uint64_t seed);

/// Inference blocks of three steps: a random input frame on the first step
/// (each of `inputs` axons "in_<i>" on with probability `density`), then two
/// empty steps while activity propagates.
io::Schedule frame_schedule(std::size_t inputs, std::size_t inferences, double density, std::uint64_t seed);

/// `copies` disjoint copies of `base`; copy k renames every key to
/// "r<k>/<key>" and shares the models.
Network replicate(const Network& base, std::size_t copies);
io::Schedule replicate_schedule(const io::Schedule& s, std::size_t copies);

struct ScalingPoint {
    double scale = 1.0;
    std::size_t neurons = 0;
    std::size_t axons = 0;
    std::size_t synapses = 0;
    StepCounters totals;
    double energy = 0.0;
    double latency = 0.0;
};

struct ScalingReport {
    std::vector<ScalingPoint> points;
    /// Empty when the neuron counts do not vary (slope undefined).
    std::optional<LinearFit> accesses;
    std::optional<LinearFit> cycles;
};

/// Runs every member on the engine and fits (neurons, accesses) and
/// (neurons, cycles). DegenerateInput with fewer than three members.
ScalingReport run_scaling(const std::vector<FamilyMember>& family, std::uint64_t seed, const CostConfig& cost);

/// Fit lines followed by a comma-separated table, one row per member.
std::string format_scaling(const ScalingReport& r);

} // namespace spikecore::cli
