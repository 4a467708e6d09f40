#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spikecore/dense_oracle.hpp"
#include "spikecore/engine.hpp"
#include "spikecore/hbm/image.hpp"
#include "spikecore/network.hpp"

namespace spikecore {

enum class Backend { Oracle, Engine };

std::string_view to_string(Backend b) noexcept;
/// InvalidArgument for anything but "oracle" or "engine".
Backend parse_backend(std::string_view name);

/// Key-level stepping over either backend. The engine backend compiles the
/// network on construction and reads weights back from the image.
class Simulator {
public:
    Simulator(Network net, Backend backend, std::uint64_t seed = 0, std::uint32_t cycles_per_row = 1);
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    struct StepResult {
        std::vector<std::string> spikes; ///< output keys, in neuron index order
        std::optional<std::vector<std::int32_t>> membranes;
    };

    /// Activates exactly the listed axons. UnknownAxonKey on a bad key;
    /// duplicate keys count once.
    StepResult step(std::span<const std::string> input_axons, bool membrane_potentials = false);
    /// Index-level step; returns fired output indices.
    std::vector<std::uint32_t> step_indices(std::span<const std::uint32_t> active_axons);

    std::int16_t read_synapse(std::string_view pre, std::string_view post) const;
    void write_synapse(std::string_view pre, std::string_view post, std::int64_t weight);

    /// UnknownNeuronKey on a bad key.
    std::vector<std::int32_t> read_membrane(std::span<const std::string> neuron_keys) const;

    /// Clears membranes and reseeds the noise stream.
    void reset(std::uint64_t seed);

    Backend backend() const noexcept { return backend_; }
    const Network& network() const noexcept { return net_; }
    const SimState& state() const noexcept { return state_; }
    /// Engine backend only; nullptr otherwise.
    const hbm::HbmImage* image() const noexcept { return image_.get(); }
    /// Engine counters of the last step and the running total; zero on the oracle.
    const StepCounters& last_counters() const noexcept { return last_; }
    const StepCounters& total_counters() const noexcept { return total_; }

private:
    Network net_;
    Backend backend_;
    SimState state_;
    std::unique_ptr<DenseOracle> oracle_;
    std::unique_ptr<hbm::HbmImage> image_;
    std::unique_ptr<EventEngine> engine_;
    StepCounters last_;
    StepCounters total_;
};

} // namespace spikecore
