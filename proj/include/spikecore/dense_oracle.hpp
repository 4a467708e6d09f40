#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spikecore/network.hpp"

namespace spikecore {

/// Incoming weights per postsynaptic neuron, i.e. the rows of the axon and
/// neuron weight matrices in compressed form. Columns within a row ascend.
struct DenseWeights {
    struct Entry {
        std::uint32_t pre;
        std::int16_t weight;
    };
    std::size_t num_axons = 0;
    std::size_t num_neurons = 0;
    std::vector<std::vector<Entry>> axon_rows;   // [post] -> axon columns
    std::vector<std::vector<Entry>> neuron_rows; // [post] -> neuron columns

    static DenseWeights from_network(const Network& net);

    /// Matrix entry (post, pre); 0 when absent.
    std::int16_t axon_weight(std::uint32_t post, std::uint32_t axon) const;
    std::int16_t neuron_weight(std::uint32_t post, std::uint32_t pre) const;
    void set_axon_weight(std::uint32_t post, std::uint32_t axon, std::int16_t w);
    void set_neuron_weight(std::uint32_t post, std::uint32_t pre, std::int16_t w);
};

/// Whole-network timestep written as vector arithmetic over the weight
/// matrices; the reference the event engine is checked against.
class DenseOracle {
public:
    explicit DenseOracle(const Network& net);

    /// Advances `state` one timestep with the given axons active and returns
    /// the indices of output neurons that fired, ascending. DimensionMismatch
    /// when state or input indices do not fit the network.
    std::vector<std::uint32_t> step(SimState& state, std::span<const std::uint32_t> active_axons) const;

    DenseWeights& weights() noexcept { return weights_; }
    const DenseWeights& weights() const noexcept { return weights_; }

private:
    DenseWeights weights_;
    std::vector<NeuronModel> models_;
    std::vector<std::uint8_t> is_output_;
    bool saturating_;
};

} // namespace spikecore
