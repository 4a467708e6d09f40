#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "spikecore/neuron_model.hpp"

namespace spikecore {

struct EngineConfig {
    /// Maximum outgoing synapses per axon or neuron.
    std::uint32_t max_fan_out = 4096;
    /// Saturate membrane arithmetic at the int32 bounds; wrap otherwise.
    bool saturating = true;

    bool operator==(const EngineConfig&) const = default;
};

/// Outgoing synapse in index space.
struct Synapse {
    std::uint32_t post;
    std::int16_t weight;

    bool operator==(const Synapse&) const = default;
};

struct NamedModel {
    std::string name;
    NeuronModel model;

    bool operator==(const NamedModel&) const = default;
};

/// Key-level synapse used when defining a network.
struct SynapseDef {
    std::string post;
    std::int64_t weight;
};

class Network;

/// Collects axons, neurons, models and outputs in insertion order; build()
/// validates everything and assigns dense indices.
class NetworkBuilder {
public:
    NetworkBuilder& add_model(std::string name, NeuronModel model);
    NetworkBuilder& add_axon(std::string key, std::vector<SynapseDef> synapses = {});
    NetworkBuilder& add_neuron(std::string key, std::string model, std::vector<SynapseDef> synapses = {});
    /// Appends one synapse to an already added axon or neuron.
    NetworkBuilder& connect(std::string_view pre, std::string post, std::int64_t weight);
    NetworkBuilder& add_output(std::string key);
    /// Marks an axon to be driven on every timestep by runners (bias inputs).
    NetworkBuilder& add_bias_axon(std::string key);
    NetworkBuilder& config(EngineConfig cfg);

    /// Throws Error with DanglingTarget, DuplicateKey, WeightOverflow,
    /// FanOutExceeded, UnknownOutputKey or UnknownModel.
    Network build() const;

private:
    struct Source {
        std::string key;
        std::string model;
        std::vector<SynapseDef> synapses;
    };
    std::vector<NamedModel> models_;
    std::vector<Source> axons_;
    std::vector<Source> neurons_;
    std::unordered_map<std::string, std::size_t> axon_pos_;
    std::unordered_map<std::string, std::size_t> neuron_pos_;
    std::vector<std::string> outputs_;
    std::vector<std::string> bias_axons_;
    EngineConfig config_;
    // Keys that were added twice; reported by build().
    std::vector<std::string> duplicates_;
};

/// A validated network in index space.
///
/// Neuron indices are contiguous per model: all neurons of the first model
/// (in model insertion order), then the second, and so on; within a model they
/// keep insertion order. Axon indices follow insertion order. Synapse lists are
/// sorted by post index and outputs by neuron index.
class Network {
public:
    Network() = default;

    std::size_t num_axons() const noexcept { return axon_keys_.size(); }
    std::size_t num_neurons() const noexcept { return neuron_keys_.size(); }
    std::size_t num_synapses() const noexcept;

    const std::vector<std::string>& axon_keys() const noexcept { return axon_keys_; }
    const std::vector<std::string>& neuron_keys() const noexcept { return neuron_keys_; }
    const std::vector<NamedModel>& models() const noexcept { return models_; }
    const std::vector<std::uint32_t>& neuron_models() const noexcept { return neuron_model_; }
    const NeuronModel& model_of(std::uint32_t neuron) const { return models_[neuron_model_[neuron]].model; }
    const std::vector<std::uint32_t>& outputs() const noexcept { return outputs_; }
    const std::vector<std::uint32_t>& bias_axons() const noexcept { return bias_axons_; }
    const EngineConfig& config() const noexcept { return config_; }

    std::span<const Synapse> axon_synapses(std::uint32_t axon) const { return axon_syn_[axon]; }
    std::span<const Synapse> neuron_synapses(std::uint32_t neuron) const { return neuron_syn_[neuron]; }

    std::optional<std::uint32_t> find_axon(std::string_view key) const;
    std::optional<std::uint32_t> find_neuron(std::string_view key) const;
    std::uint32_t axon_index(std::string_view key) const;   ///< UnknownAxonKey
    std::uint32_t neuron_index(std::string_view key) const; ///< UnknownNeuronKey
    bool is_output(std::uint32_t neuron) const;

    /// A presynaptic key resolves to an axon or a neuron (key spaces are disjoint).
    struct Source {
        bool is_axon;
        std::uint32_t index;
    };
    Source source_index(std::string_view pre_key) const; ///< NoSuchSynapse when unknown

    /// NoSuchSynapse when the pair is not connected.
    std::int16_t read_synapse(std::string_view pre_key, std::string_view post_key) const;
    /// Updates a weight in place; topology is unchanged. NoSuchSynapse, WeightOverflow.
    void write_synapse(std::string_view pre_key, std::string_view post_key, std::int64_t weight);

    /// Structural equality: keys, models, model membership, synapses, outputs,
    /// bias axons and config.
    bool operator==(const Network& other) const;

private:
    friend class NetworkBuilder;
    friend class NetworkAssembler;

    Synapse* find_synapse(std::string_view pre_key, std::string_view post_key);
    void index_keys();

    std::vector<std::string> axon_keys_;
    std::vector<std::string> neuron_keys_;
    std::unordered_map<std::string, std::uint32_t> axon_lookup_;
    std::unordered_map<std::string, std::uint32_t> neuron_lookup_;
    std::vector<NamedModel> models_;
    std::vector<std::uint32_t> neuron_model_;
    std::vector<std::vector<Synapse>> axon_syn_;
    std::vector<std::vector<Synapse>> neuron_syn_;
    std::vector<std::uint32_t> outputs_;
    std::vector<std::uint32_t> bias_axons_;
    std::vector<std::uint8_t> output_mask_;
    EngineConfig config_;
};

/// Builds a Network directly in index space (used by the image decompiler).
/// Validation mirrors NetworkBuilder::build.
class NetworkAssembler {
public:
    struct Parts {
        std::vector<std::string> axon_keys;
        std::vector<std::string> neuron_keys;
        std::vector<NamedModel> models;
        std::vector<std::uint32_t> neuron_models;
        std::vector<std::vector<Synapse>> axon_synapses;
        std::vector<std::vector<Synapse>> neuron_synapses;
        std::vector<std::uint32_t> outputs;
        std::vector<std::uint32_t> bias_axons;
        EngineConfig config;
    };
    static Network assemble(Parts parts);
};

/// Mutable per-run state shared by both backends.
struct SimState {
    std::vector<std::int32_t> membrane;
    std::vector<std::uint8_t> fired_neurons;
    std::vector<std::uint8_t> fired_axons;
    std::uint64_t t = 0;
    SplitMix64 rng;

    SimState() = default;
    SimState(std::size_t neurons, std::size_t axons, std::uint64_t seed)
        : membrane(neurons, 0), fired_neurons(neurons, 0), fired_axons(axons, 0), rng(seed)
    {
    }

    bool operator==(const SimState&) const = default;
};

bool fits_int16(std::int64_t w) noexcept;

} // namespace spikecore
