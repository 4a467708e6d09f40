#include "spikecore/simulator.hpp"

#include <algorithm>

#include "spikecore/error.hpp"
#include "spikecore/hbm/compiler.hpp"

namespace spikecore {

std::string_view to_string(Backend b) noexcept
{
    return b == Backend::Oracle ? "oracle" : "engine";
}

Backend parse_backend(std::string_view name)
{
    if (name == "oracle") {
        return Backend::Oracle;
    }
    if (name == "engine") {
        return Backend::Engine;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown backend '" + std::string(name) + "'");
}

Simulator::Simulator(Network net, Backend backend, std::uint64_t seed, std::uint32_t cycles_per_row)
    : net_(std::move(net))
    , backend_(backend)
    , state_(net_.num_neurons(), net_.num_axons(), seed)
{
    if (backend_ == Backend::Oracle) {
        oracle_ = std::make_unique<DenseOracle>(net_);
    } else {
        image_ = std::make_unique<hbm::HbmImage>(hbm::compile(net_));
        engine_ = std::make_unique<EventEngine>(*image_, cycles_per_row);
    }
}

std::vector<std::uint32_t> Simulator::step_indices(std::span<const std::uint32_t> active_axons)
{
    if (oracle_) {
        return oracle_->step(state_, active_axons);
    }
    auto fired = engine_->step(state_, active_axons, &last_);
    total_ += last_;
    return fired;
}

Simulator::StepResult Simulator::step(std::span<const std::string> input_axons, bool membrane_potentials)
{
    std::vector<std::uint32_t> active;
    active.reserve(input_axons.size());
    for (const auto& key : input_axons) {
        active.push_back(net_.axon_index(key));
    }
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());

    StepResult result;
    for (auto i : step_indices(active)) {
        result.spikes.push_back(net_.neuron_keys()[i]);
    }
    if (membrane_potentials) {
        result.membranes = state_.membrane;
    }
    return result;
}

std::int16_t Simulator::read_synapse(std::string_view pre, std::string_view post) const
{
    if (image_) {
        return hbm::read_weight(*image_, pre, post);
    }
    return net_.read_synapse(pre, post);
}

void Simulator::write_synapse(std::string_view pre, std::string_view post, std::int64_t weight)
{
    net_.write_synapse(pre, post, weight);
    const auto w = static_cast<std::int16_t>(weight);
    if (oracle_) {
        const auto src = net_.source_index(pre);
        const auto dst = net_.neuron_index(post);
        if (src.is_axon) {
            oracle_->weights().set_axon_weight(dst, src.index, w);
        } else {
            oracle_->weights().set_neuron_weight(dst, src.index, w);
        }
    }
    if (image_) {
        hbm::patch_weight(*image_, pre, post, weight);
    }
}

std::vector<std::int32_t> Simulator::read_membrane(std::span<const std::string> neuron_keys) const
{
    std::vector<std::int32_t> out;
    out.reserve(neuron_keys.size());
    for (const auto& key : neuron_keys) {
        out.push_back(state_.membrane[net_.neuron_index(key)]);
    }
    return out;
}

void Simulator::reset(std::uint64_t seed)
{
    state_ = SimState(net_.num_neurons(), net_.num_axons(), seed);
    last_ = {};
    total_ = {};
}

} // namespace spikecore
